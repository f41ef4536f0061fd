#include "typolab/perturb.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "typolab/error.hpp"
#include "typolab/rng.hpp"

namespace typolab {

namespace {

void check_level(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0))
    throw Error(ErrorCode::kPrecondition, std::string(what) + " must lie in [0, 1]");
}

std::array<int, 256> histogram(std::string_view s) {
  std::array<int, 256> h{};
  for (char c : s) ++h[static_cast<unsigned char>(c)];
  return h;
}

}  // namespace

ScrambleResult scramble_word(std::string_view word, double sr, std::uint64_t seed) {
  if (word.size() < 4)
    throw Error(ErrorCode::kPrecondition,
                "scramble_word needs at least 4 characters, got '" + std::string(word) + "'");
  check_level(sr, "sr");

  ScrambleSpec spec;
  spec.sr = sr;
  spec.seed = seed;
  spec.n_candidate = word.size() - 2;
  spec.n_scrambled = round_half_up_count(sr, spec.n_candidate);
  if (sr == 0.0) {
    spec.n_scrambled = 0;
    return {std::string(word), spec};
  }
  if (spec.n_scrambled < 2)
    throw Error(ErrorCode::kDegenerateWord,
                "window of " + std::to_string(spec.n_scrambled) + " characters in '" +
                    std::string(word) + "' admits no differing permutation");

  Rng rng(seed);
  spec.substring_start = rng.uniform_below(spec.n_candidate - spec.n_scrambled + 1);
  const std::size_t begin = 1 + spec.substring_start;
  const std::string window(word.substr(begin, spec.n_scrambled));
  if (std::set<char>(window.begin(), window.end()).size() < 2)
    throw Error(ErrorCode::kDegenerateWord,
                "window '" + window + "' of '" + std::string(word) + "' has one distinct character");

  for (int attempt = 0; attempt < kMaxShuffleAttempts; ++attempt) {
    std::string perm = window;
    for (std::size_t i = perm.size() - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.uniform_below(i + 1)]);
    if (perm != window) {
      std::string out(word);
      out.replace(begin, perm.size(), perm);
      return {std::move(out), spec};
    }
  }
  throw Error(ErrorCode::kDegenerateWord,
              "no differing shuffle of '" + window + "' within " +
                  std::to_string(kMaxShuffleAttempts) + " attempts");
}

MaskResult mask_context(const WordSeq& text, std::size_t target_index, double ci,
                        std::uint64_t seed) {
  if (target_index >= text.size())
    throw Error(ErrorCode::kPrecondition, "target index " + std::to_string(target_index) +
                                              " outside a " + std::to_string(text.size()) +
                                              "-word text");
  check_level(ci, "ci");

  MaskSpec spec;
  spec.ci = ci;
  spec.seed = seed;
  spec.n_total_context = text.size() - 1;
  if (spec.n_total_context == 0 && ci < 1.0)
    throw Error(ErrorCode::kNoContext, "single-word text has no context to mask");
  spec.n_preserved = round_half_up_count(ci, spec.n_total_context);
  const std::size_t n_mask = spec.n_total_context - spec.n_preserved;

  std::vector<std::size_t> positions;
  positions.reserve(spec.n_total_context);
  for (std::size_t i = 0; i < text.size(); ++i)
    if (i != target_index) positions.push_back(i);

  Rng rng(seed);
  for (std::size_t i = 0; i < n_mask; ++i) {
    const std::size_t j = i + rng.uniform_below(positions.size() - i);
    std::swap(positions[i], positions[j]);
  }
  spec.masked_indices.assign(positions.begin(), positions.begin() + static_cast<long>(n_mask));
  std::sort(spec.masked_indices.begin(), spec.masked_indices.end());

  WordSeq masked = text;
  for (std::size_t idx : spec.masked_indices) masked[idx] = std::string(kMaskToken);
  return {std::move(masked), std::move(spec)};
}

CharRange PerturbedSample::target_range() const {
  const auto parts = split_punctuation(processed_text.at(target_index));
  const std::size_t start = word_offset(processed_text, target_index) + parts.prefix.size();
  return {start, start + parts.core.size()};
}

std::string PerturbedSample::baseline_prompt() const {
  WordSeq words = processed_text;
  words.at(target_index) = original_text.at(target_index);
  return join_words(words);
}

CharRange PerturbedSample::baseline_range() const {
  // Scrambling preserves length, so the original core sits at the same bytes.
  return target_range();
}

std::vector<PerturbedSample> build_matrix(const TargetCandidate& candidate,
                                          const std::vector<double>& sr_levels,
                                          const std::vector<double>& ci_levels,
                                          const std::vector<std::uint64_t>& seeds,
                                          std::vector<SkipRecord>* skips) {
  if (sr_levels.empty() || ci_levels.empty() || seeds.empty())
    throw Error(ErrorCode::kPrecondition, "build_matrix needs non-empty level and seed lists");
  for (double v : sr_levels) check_level(v, "sr level");
  for (double v : ci_levels) check_level(v, "ci level");

  auto skip = [&](const std::string& reason, double sr, double ci, std::uint64_t seed) {
    if (skips) skips->push_back({candidate.sample_id, reason, sr, ci, seed});
  };

  const std::string& original_word = candidate.text.at(candidate.target_index);
  const auto parts = split_punctuation(original_word);

  std::vector<PerturbedSample> out;
  for (std::uint64_t seed : seeds) {
    for (double sr : sr_levels) {
      ScrambleResult scr;
      try {
        scr = scramble_word(candidate.target_word, sr, seed);
      } catch (const Error& e) {
        for (double ci : ci_levels) skip(e.what(), sr, ci, seed);
        continue;
      }
      const std::string rebuilt =
          std::string(parts.prefix) + scr.scrambled + std::string(parts.suffix);
      for (double ci : ci_levels) {
        MaskResult mask;
        try {
          mask = mask_context(candidate.text, candidate.target_index, ci, seed);
        } catch (const Error& e) {
          skip(e.what(), sr, ci, seed);
          continue;
        }
        PerturbedSample s;
        s.sample_id = candidate.sample_id;
        s.target_word = candidate.target_word;
        s.scrambled_word = scr.scrambled;
        s.target_index = candidate.target_index;
        s.scramble_spec = scr.spec;
        s.mask_spec = std::move(mask.spec);
        s.original_text = candidate.text;
        s.processed_text = std::move(mask.masked);
        s.processed_text[candidate.target_index] = rebuilt;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

bool is_valid_scramble(std::string_view original, std::string_view scrambled,
                       std::size_t n_scrambled) {
  if (original.size() < 4 || original.size() != scrambled.size()) return false;
  if (original.front() != scrambled.front() || original.back() != scrambled.back()) return false;
  if (histogram(original) != histogram(scrambled)) return false;
  if (n_scrambled > original.size() - 2) return false;
  std::size_t lo = original.size();
  std::size_t hi = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original[i] != scrambled[i]) {
      lo = std::min(lo, i);
      hi = i + 1;
    }
  }
  if (lo == original.size()) return n_scrambled == 0;
  return n_scrambled > 0 && hi - lo <= n_scrambled;
}

std::vector<std::string> validate_sample(const PerturbedSample& s) {
  std::vector<std::string> problems;
  auto fail = [&](std::string msg) { problems.push_back(std::move(msg)); };

  const auto& sc = s.scramble_spec;
  const auto& mk = s.mask_spec;
  const std::size_t n = s.target_word.size();
  if (n < 4) {
    fail("target word shorter than 4 characters");
    return problems;
  }
  if (sc.n_candidate != n - 2) fail("n_candidate != len(target_word) - 2");
  if (sc.sr == 0.0 ? sc.n_scrambled != 0
                   : sc.n_scrambled != round_half_up_count(sc.sr, sc.n_candidate))
    fail("n_scrambled != round-half-up(sr * n_candidate)");
  if (sc.n_scrambled > sc.n_candidate || sc.substring_start > sc.n_candidate - sc.n_scrambled)
    fail("substring_start outside [0, n_candidate - n_scrambled]");
  if (!is_valid_scramble(s.target_word, s.scrambled_word, sc.n_scrambled))
    fail("scrambled word violates anchor/multiset/window constraints");
  if (sc.sr > 0 && s.scrambled_word == s.target_word) fail("scrambled word equals target for sr > 0");
  if (sc.n_scrambled > 0) {
    const std::size_t b = 1 + sc.substring_start;
    const std::size_t e = b + sc.n_scrambled;
    for (std::size_t i = 0; i < n; ++i)
      if ((i < b || i >= e) && s.target_word[i] != s.scrambled_word[i]) {
        fail("characters outside the recorded window changed");
        break;
      }
  }

  if (s.original_text.size() != s.processed_text.size()) {
    fail("processed text length differs from original");
    return problems;
  }
  if (s.target_index >= s.original_text.size()) {
    fail("target index out of range");
    return problems;
  }
  if (split_punctuation(s.original_text[s.target_index]).core != s.target_word)
    fail("target word does not match the original text");
  if (mk.n_total_context != s.original_text.size() - 1) fail("n_total_context != words - 1");
  if (mk.n_preserved != round_half_up_count(mk.ci, mk.n_total_context))
    fail("n_preserved != round-half-up(ci * n_total_context)");
  if (mk.masked_indices.size() != mk.n_total_context - mk.n_preserved)
    fail("masked count != n_total_context - n_preserved");
  if (!std::is_sorted(mk.masked_indices.begin(), mk.masked_indices.end()) ||
      std::adjacent_find(mk.masked_indices.begin(), mk.masked_indices.end()) !=
          mk.masked_indices.end())
    fail("masked indices not a sorted set");
  if (std::binary_search(mk.masked_indices.begin(), mk.masked_indices.end(), s.target_index))
    fail("target index is masked");

  const auto orig_parts = split_punctuation(s.original_text[s.target_index]);
  const std::string expected_target =
      std::string(orig_parts.prefix) + s.scrambled_word + std::string(orig_parts.suffix);
  for (std::size_t i = 0; i < s.original_text.size(); ++i) {
    if (i == s.target_index) {
      if (s.processed_text[i] != expected_target) fail("processed target word mismatch");
    } else if (std::binary_search(mk.masked_indices.begin(), mk.masked_indices.end(), i)) {
      if (s.processed_text[i] != kMaskToken) fail("masked position " + std::to_string(i) + " is not '_'");
    } else if (s.processed_text[i] != s.original_text[i]) {
      fail("unmasked context word " + std::to_string(i) + " changed");
    }
  }
  return problems;
}

nlohmann::ordered_json to_json(const PerturbedSample& s) {
  nlohmann::ordered_json j;
  j["sample_id"] = s.sample_id;
  j["target_word"] = s.target_word;
  j["scrambled_word"] = s.scrambled_word;
  j["target_index"] = s.target_index;
  j["scramble_spec"] = {{"sr", s.scramble_spec.sr},
                        {"n_candidate", s.scramble_spec.n_candidate},
                        {"n_scrambled", s.scramble_spec.n_scrambled},
                        {"substring_start", s.scramble_spec.substring_start},
                        {"seed", s.scramble_spec.seed}};
  j["mask_spec"] = {{"ci", s.mask_spec.ci},
                    {"n_total_context", s.mask_spec.n_total_context},
                    {"n_preserved", s.mask_spec.n_preserved},
                    {"masked_indices", s.mask_spec.masked_indices},
                    {"seed", s.mask_spec.seed}};
  j["original_text"] = s.original_text;
  j["processed_text"] = s.processed_text;
  return j;
}

PerturbedSample sample_from_json(const nlohmann::json& j) {
  try {
    PerturbedSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.target_word = j.at("target_word").get<std::string>();
    s.scrambled_word = j.at("scrambled_word").get<std::string>();
    s.target_index = j.at("target_index").get<std::size_t>();
    const auto& sc = j.at("scramble_spec");
    s.scramble_spec.sr = sc.at("sr").get<double>();
    s.scramble_spec.n_candidate = sc.at("n_candidate").get<std::size_t>();
    s.scramble_spec.n_scrambled = sc.at("n_scrambled").get<std::size_t>();
    s.scramble_spec.substring_start = sc.at("substring_start").get<std::size_t>();
    s.scramble_spec.seed = sc.at("seed").get<std::uint64_t>();
    const auto& mk = j.at("mask_spec");
    s.mask_spec.ci = mk.at("ci").get<double>();
    s.mask_spec.n_total_context = mk.at("n_total_context").get<std::size_t>();
    s.mask_spec.n_preserved = mk.at("n_preserved").get<std::size_t>();
    s.mask_spec.masked_indices = mk.at("masked_indices").get<std::vector<std::size_t>>();
    s.mask_spec.seed = mk.at("seed").get<std::uint64_t>();
    s.original_text = j.at("original_text").get<WordSeq>();
    s.processed_text = j.at("processed_text").get<WordSeq>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorpusParse, std::string("malformed dataset record: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const SkipRecord& skip) {
  nlohmann::ordered_json j;
  j["sample_id"] = skip.sample_id;
  j["reason"] = skip.reason;
  if (skip.sr) j["sr"] = *skip.sr;
  if (skip.ci) j["ci"] = *skip.ci;
  if (skip.seed) j["seed"] = *skip.seed;
  return j;
}

}  // namespace typolab
