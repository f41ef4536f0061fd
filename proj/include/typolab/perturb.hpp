#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "typolab/corpus.hpp"
#include "typolab/text.hpp"
#include "typolab/tokenizer.hpp"

namespace typolab {

inline constexpr std::string_view kMaskToken = "_";
inline constexpr int kMaxShuffleAttempts = 64;

struct ScrambleSpec {
  double sr = 0;
  std::size_t n_candidate = 0;      // len(word) - 2
  std::size_t n_scrambled = 0;      // round-half-up(sr * n_candidate)
  std::size_t substring_start = 0;  // offset into the internal region
  std::uint64_t seed = 0;
};

struct MaskSpec {
  double ci = 1;
  std::size_t n_total_context = 0;
  std::size_t n_preserved = 0;
  std::vector<std::size_t> masked_indices;  // sorted word positions
  std::uint64_t seed = 0;
};

struct ScrambleResult {
  std::string scrambled;
  ScrambleSpec spec;
};

struct MaskResult {
  WordSeq masked;
  MaskSpec spec;
};

// Shuffles a seeded, uniformly placed contiguous window of the word's internal
// characters with Fisher-Yates, resampling until the window changes.
//
// Draw order on Rng(seed): one uniform_below(n_candidate - n_scrambled + 1)
// for the window start, then per attempt the Fisher-Yates draws
// uniform_below(i + 1) for i = n_scrambled-1 .. 1 on a fresh copy of the
// window.
//
// Throws kPrecondition for words shorter than 4 or sr outside [0, 1], and
// kDegenerateWord when sr > 0 but no differing permutation of the window
// exists (fewer than 2 window characters or fewer than 2 distinct ones) or
// all attempts reproduce it.
ScrambleResult scramble_word(std::string_view word, double sr, std::uint64_t seed);

// Replaces n_total_context - round-half-up(ci * n_total_context) context words
// with "_". The masked set is the prefix of a seeded partial Fisher-Yates
// shuffle of the ascending context positions, so for one seed lower ci masks
// a superset of what higher ci masks.
MaskResult mask_context(const WordSeq& text, std::size_t target_index, double ci,
                        std::uint64_t seed);

struct PerturbedSample {
  std::string sample_id;
  std::string target_word;
  std::string scrambled_word;
  std::size_t target_index = 0;
  ScrambleSpec scramble_spec;
  MaskSpec mask_spec;
  WordSeq original_text;
  WordSeq processed_text;

  double sr() const { return scramble_spec.sr; }
  double ci() const { return mask_spec.ci; }
  std::uint64_t seed() const { return scramble_spec.seed; }

  std::string prompt() const { return join_words(processed_text); }
  // Byte range of the (scrambled) target core inside prompt().
  CharRange target_range() const;
  // Same prompt with the original target word restored; the SR=0 baseline.
  std::string baseline_prompt() const;
  CharRange baseline_range() const;
};

struct SkipRecord {
  std::string sample_id;
  std::string reason;
  std::optional<double> sr;
  std::optional<double> ci;
  std::optional<std::uint64_t> seed;
};

// One sample per (seed, sr, ci) in that nesting order. A (sr, seed) scramble
// is computed once and shared by every ci level. Cells that raise are logged
// to `skips` (one entry per affected triple) instead of aborting.
std::vector<PerturbedSample> build_matrix(const TargetCandidate& candidate,
                                          const std::vector<double>& sr_levels,
                                          const std::vector<double>& ci_levels,
                                          const std::vector<std::uint64_t>& seeds,
                                          std::vector<SkipRecord>* skips = nullptr);

// Checks that `scrambled` could come from scrambling `original` with a
// window of `n_scrambled` characters: anchors kept, character multiset kept,
// all changed positions inside one internal window of that width, and a
// change present when n_scrambled > 0.
bool is_valid_scramble(std::string_view original, std::string_view scrambled,
                       std::size_t n_scrambled);

// Every PerturbedSample invariant; returns the violated ones (empty if valid).
std::vector<std::string> validate_sample(const PerturbedSample& sample);

nlohmann::ordered_json to_json(const PerturbedSample& sample);
PerturbedSample sample_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SkipRecord& skip);

}  // namespace typolab
