#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "typolab/activation_store.hpp"

namespace typolab {

// Cosine similarity computed in double. Throws kZeroVector when either input
// has zero norm and kPrecondition on a dimension mismatch.
double cosine(std::span<const float> x, std::span<const float> y);
double cosine(std::span<const double> x, std::span<const double> y);

struct SemRecCurve {
  std::string sample_id;
  double sr = 0;
  double ci = 1;
  std::uint64_t seed = 0;
  std::vector<double> scores;  // one per layer 0..L
};

// Per-layer cosine between the original word's single token and the last
// token of the scrambled span. Condition fields are left for the caller.
// Throws kInvalidOriginal if `original` does not have a one-token span.
SemRecCurve sem_rec_score(const ActivationDump& original, const ActivationDump& scrambled);

// D(p || q) in nats with 0 ln(0/q) = 0; rounding-level negatives clamp to 0.
// Throws kInfiniteDivergence when q_k = 0 < p_k, kPrecondition when lengths
// differ or either input is not a distribution within 1e-5.
double kl_divergence(std::span<const float> p, std::span<const float> q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct SrLevelStat {
  double sr = 0;
  double final_score = 0;  // final-layer SemRecScore at this SR
  double kldiv = 0;        // KL of this SR's next-token distribution vs SR=0
};

// One word key (sample_id, ci, seed) across its SR levels.
struct ConsistencyRecord {
  std::string key;
  std::vector<SrLevelStat> levels;
};

struct PairStat {
  double delta_sr = 0;
  double sr_i = 0;
  double sr_j = 0;  // sr_j = sr_i - delta_sr
  double c_value = 0;
  bool negative = false;
};

inline constexpr double kSrMatchTolerance = 1e-9;

// All ordered (i, j) level pairs of one record with sr_i - sr_j = delta_sr.
std::vector<PairStat> enumerate_pairs(const ConsistencyRecord& record, double delta_sr);

enum class NegCorrMode { kPerWord, kPooled };

NegCorrMode parse_negcorr_mode(const std::string& name);
std::string to_string(NegCorrMode mode);

struct NegCorrResult {
  double rate = 0;
  std::size_t n_pairs = 0;
  std::size_t n_words = 0;  // records contributing at least one pair
};

// Fraction of pairs with C_{i,j} < 0. kPooled divides over all pairs of all
// records; kPerWord averages each record's own rate. Throws kEmptyPairSet
// when no record realizes delta_sr.
NegCorrResult neg_corr_rate(std::span<const ConsistencyRecord> records, double delta_sr,
                            NegCorrMode mode = NegCorrMode::kPerWord);

struct AttentionSelfRecord {
  std::string sample_id;
  double sr = 0;
  double ci = 1;
  std::uint64_t seed = 0;
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  std::vector<double> aggregate;  // (L)
  std::vector<double> per_head;   // (L, H)

  double head(std::size_t layer, std::size_t h) const { return per_head[layer * n_heads + h]; }
};

AttentionSelfRecord attention_self(const ActivationDump& dump);

struct HeadHeatmap {
  double sr = 0;
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  std::vector<double> mean;  // (L, H)
  std::size_t count = 0;

  double at(std::size_t layer, std::size_t h) const { return mean[layer * n_heads + h]; }
};

// Entrywise mean of per-head AttentionSelf. Throws kEmptyInput for no records
// and kPrecondition when geometry or SR differ.
HeadHeatmap head_heatmap(std::span<const AttentionSelfRecord> records);

struct HeadId {
  std::size_t layer = 0;
  std::size_t head = 0;
  auto operator<=>(const HeadId&) const = default;
};

struct HeadCell {
  HeadId id;
  double value = 0;
};

// The k largest cells, ties broken toward lower (layer, head).
std::vector<HeadCell> form_sensitive_heads(const HeadHeatmap& heatmap, std::size_t k);

// Jaccard overlap |a ∩ b| / |a ∪ b|; duplicates are ignored. Throws
// kEmptyInput if either set is empty.
double head_set_stability(std::span<const HeadId> a, std::span<const HeadId> b);

struct MeanStd {
  double mean = 0;
  double std = 0;  // population standard deviation
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

}  // namespace typolab
