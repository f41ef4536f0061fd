#include "typolab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "typolab/error.hpp"
#include "typolab/kernels.hpp"

namespace typolab {

namespace {

template <typename T>
double cosine_impl(std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size())
    throw Error(ErrorCode::kPrecondition, "cosine: dimension " + std::to_string(x.size()) +
                                              " vs " + std::to_string(y.size()));
  double dot = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i];
    const double b = y[i];
    dot += a * b;
    xx += a * a;
    yy += b * b;
  }
  if (xx == 0.0 || yy == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero-norm vector");
  const double c = dot / (std::sqrt(xx) * std::sqrt(yy));
  return std::clamp(c, -1.0, 1.0);
}

template <typename T>
double kl_impl(std::span<const T> p, std::span<const T> q) {
  if (p.size() != q.size() || p.empty())
    throw Error(ErrorCode::kPrecondition, "kl_divergence: length " + std::to_string(p.size()) +
                                              " vs " + std::to_string(q.size()));
  double sp = 0, sq = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0 || q[k] < 0)
      throw Error(ErrorCode::kPrecondition, "kl_divergence: negative probability at " +
                                                std::to_string(k));
    sp += p[k];
    sq += q[k];
  }
  if (std::fabs(sp - 1.0) > 1e-5 || std::fabs(sq - 1.0) > 1e-5)
    throw Error(ErrorCode::kPrecondition, "kl_divergence: inputs are not distributions");
  double sum = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double pk = p[k];
    if (pk == 0.0) continue;
    const double qk = q[k];
    if (qk == 0.0)
      throw Error(ErrorCode::kInfiniteDivergence,
                  "q[" + std::to_string(k) + "] = 0 where p > 0");
    sum += pk * std::log(pk / qk);
  }
  return std::max(0.0, sum);
}

}  // namespace

double cosine(std::span<const float> x, std::span<const float> y) { return cosine_impl(x, y); }
double cosine(std::span<const double> x, std::span<const double> y) { return cosine_impl(x, y); }

double kl_divergence(std::span<const float> p, std::span<const float> q) { return kl_impl(p, q); }
double kl_divergence(std::span<const double> p, std::span<const double> q) { return kl_impl(p, q); }

SemRecCurve sem_rec_score(const ActivationDump& original, const ActivationDump& scrambled) {
  if (original.span_len != 1)
    throw Error(ErrorCode::kInvalidOriginal, "original word spans " +
                                                 std::to_string(original.span_len) + " tokens");
  if (original.n_layers != scrambled.n_layers || original.d_model != scrambled.d_model)
    throw Error(ErrorCode::kPrecondition, "sem_rec_score: dumps differ in model geometry");
  if (scrambled.span_len == 0)
    throw Error(ErrorCode::kPrecondition, "sem_rec_score: empty scrambled span");
  SemRecCurve curve;
  curve.scores.resize(original.n_layers + 1);
  for (std::size_t layer = 0; layer <= original.n_layers; ++layer)
    curve.scores[layer] = cosine(original.hidden_at(layer, 0),
                                 scrambled.hidden_at(layer, scrambled.span_len - 1));
  return curve;
}

std::vector<PairStat> enumerate_pairs(const ConsistencyRecord& record, double delta_sr) {
  std::vector<PairStat> pairs;
  for (const auto& a : record.levels) {
    for (const auto& b : record.levels) {
      if (std::fabs((a.sr - b.sr) - delta_sr) > kSrMatchTolerance) continue;
      PairStat p;
      p.delta_sr = delta_sr;
      p.sr_i = a.sr;
      p.sr_j = b.sr;
      p.c_value = (a.final_score - b.final_score) * (a.kldiv - b.kldiv);
      p.negative = p.c_value < 0;
      pairs.push_back(p);
    }
  }
  return pairs;
}

NegCorrMode parse_negcorr_mode(const std::string& name) {
  if (name == "per-word") return NegCorrMode::kPerWord;
  if (name == "pooled") return NegCorrMode::kPooled;
  throw Error(ErrorCode::kConfig, "unknown negcorr mode '" + name + "' (per-word | pooled)");
}

std::string to_string(NegCorrMode mode) {
  return mode == NegCorrMode::kPerWord ? "per-word" : "pooled";
}

NegCorrResult neg_corr_rate(std::span<const ConsistencyRecord> records, double delta_sr,
                            NegCorrMode mode) {
  NegCorrResult result;
  std::size_t negatives = 0;
  std::vector<double> word_rates;
  for (const auto& rec : records) {
    const auto pairs = enumerate_pairs(rec, delta_sr);
    if (pairs.empty()) continue;
    const auto neg = static_cast<std::size_t>(
        std::count_if(pairs.begin(), pairs.end(), [](const PairStat& p) { return p.negative; }));
    negatives += neg;
    result.n_pairs += pairs.size();
    word_rates.push_back(static_cast<double>(neg) / static_cast<double>(pairs.size()));
  }
  if (result.n_pairs == 0)
    throw Error(ErrorCode::kEmptyPairSet,
                "no SR level pairs differ by " + std::to_string(delta_sr));
  result.n_words = word_rates.size();
  if (mode == NegCorrMode::kPooled) {
    result.rate = static_cast<double>(negatives) / static_cast<double>(result.n_pairs);
  } else {
    // Sorting makes the sum independent of record order.
    std::sort(word_rates.begin(), word_rates.end());
    result.rate = kernels::pairwise_sum(word_rates) / static_cast<double>(word_rates.size());
  }
  return result;
}

AttentionSelfRecord attention_self(const ActivationDump& dump) {
  AttentionSelfRecord rec;
  rec.n_layers = dump.n_layers;
  rec.n_heads = dump.n_heads;
  rec.aggregate.assign(dump.n_layers, 0.0);
  rec.per_head.assign(dump.n_layers * dump.n_heads, 0.0);
  for (std::size_t layer = 0; layer < dump.n_layers; ++layer) {
    double total = 0;
    for (std::size_t h = 0; h < dump.n_heads; ++h) {
      double s = 0;
      for (float a : dump.attn_row(layer, h)) s += a;
      rec.per_head[layer * dump.n_heads + h] = s;
      total += s;
    }
    rec.aggregate[layer] = total;
  }
  return rec;
}

HeadHeatmap head_heatmap(std::span<const AttentionSelfRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "head_heatmap: no records");
  const auto& first = records.front();
  HeadHeatmap map;
  map.sr = first.sr;
  map.n_layers = first.n_layers;
  map.n_heads = first.n_heads;
  map.count = records.size();
  for (const auto& r : records) {
    if (r.n_layers != map.n_layers || r.n_heads != map.n_heads)
      throw Error(ErrorCode::kPrecondition, "head_heatmap: records differ in geometry");
    if (std::fabs(r.sr - map.sr) > kSrMatchTolerance)
      throw Error(ErrorCode::kPrecondition, "head_heatmap: records differ in SR level");
  }
  const std::size_t cells = map.n_layers * map.n_heads;
  map.mean.assign(cells, 0.0);
  std::vector<double> column(records.size());
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t i = 0; i < records.size(); ++i) column[i] = records[i].per_head[c];
    map.mean[c] = kernels::pairwise_sum(column) / static_cast<double>(records.size());
  }
  return map;
}

std::vector<HeadCell> form_sensitive_heads(const HeadHeatmap& heatmap, std::size_t k) {
  const std::size_t cells = heatmap.n_layers * heatmap.n_heads;
  if (k > cells)
    throw Error(ErrorCode::kPrecondition, "form_sensitive_heads: k = " + std::to_string(k) +
                                              " exceeds " + std::to_string(cells) + " cells");
  std::vector<HeadCell> all;
  all.reserve(cells);
  for (std::size_t l = 0; l < heatmap.n_layers; ++l)
    for (std::size_t h = 0; h < heatmap.n_heads; ++h) all.push_back({{l, h}, heatmap.at(l, h)});
  auto before = [](const HeadCell& a, const HeadCell& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.id < b.id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<long>(k), all.end(), before);
  all.resize(k);
  return all;
}

double head_set_stability(std::span<const HeadId> a, std::span<const HeadId> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyInput, "head_set_stability: empty set");
  const std::set<HeadId> sa(a.begin(), a.end());
  const std::set<HeadId> sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (const auto& id : sa) inter += sb.count(id);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = kernels::pairwise_sum(values) / static_cast<double>(values.size());
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - out.mean) * (values[i] - out.mean);
  out.std = std::sqrt(kernels::pairwise_sum(sq) / static_cast<double>(values.size()));
  return out;
}

}  // namespace typolab
