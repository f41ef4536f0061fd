#pragma once
// Test-side oracles. None of these call into the library: each recomputes a
// quantity the slow, obvious way so library results can be checked against it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Uniform integer in [0, bound) on a raw mt19937_64: accept draws below the
// largest multiple of `bound` that fits in 2^64, then reduce.
inline std::uint64_t bounded(std::mt19937_64& eng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const unsigned __int128 span = static_cast<unsigned __int128>(1) << 64;
  const unsigned __int128 limit = span - span % bound;
  for (;;) {
    const std::uint64_t x = eng();
    if (x < limit) return x % bound;
  }
}

inline std::size_t half_up(double ratio, std::size_t total) {
  // Exact for the grid levels used in tests (multiples of 1/4, 1/10).
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) + 0.5 + 1e-9));
}

// Window start, then Fisher-Yates over a fresh copy of the window until it
// differs from the original. Empty result means no differing shuffle found.
inline std::string scramble(const std::string& word, double sr, std::uint64_t seed) {
  const std::size_t nc = word.size() - 2;
  const std::size_t ns = half_up(sr, nc);
  if (ns == 0) return word;
  std::mt19937_64 eng(seed);
  const std::size_t start = 1 + bounded(eng, nc - ns + 1);
  const std::string window = word.substr(start, ns);
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::string w = window;
    for (std::size_t i = w.size() - 1; i >= 1; --i) {
      const std::size_t j = bounded(eng, i + 1);
      const char t = w[i];
      w[i] = w[j];
      w[j] = t;
    }
    if (w != window) return word.substr(0, start) + w + word.substr(start + ns);
  }
  return {};
}

// Masked word positions for a text of n words with the target at `target`.
inline std::vector<std::size_t> mask_positions(std::size_t n, std::size_t target, double ci,
                                               std::uint64_t seed) {
  std::vector<std::size_t> ctx;
  for (std::size_t i = 0; i < n; ++i)
    if (i != target) ctx.push_back(i);
  const std::size_t n_mask = ctx.size() - half_up(ci, ctx.size());
  std::mt19937_64 eng(seed);
  for (std::size_t i = 0; i < n_mask; ++i) {
    const std::size_t j = i + bounded(eng, ctx.size() - i);
    std::swap(ctx[i], ctx[j]);
  }
  std::vector<std::size_t> out(ctx.begin(), ctx.begin() + static_cast<long>(n_mask));
  std::sort(out.begin(), out.end());
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return static_cast<double>(dot / std::sqrt(na * nb));
}

inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) s += static_cast<long double>(p[i]) * std::log(static_cast<long double>(p[i]) / q[i]);
  return static_cast<double>(s);
}

// One word key: (sr, final_score, kldiv) per level.
struct Level {
  double sr, score, kl;
};

// Every ordered level pair whose SR gap is delta, per key; returns
// (per-key negative fractions, pooled negatives, pooled total).
struct NegCorrTally {
  std::vector<double> per_key;
  std::size_t negative = 0;
  std::size_t total = 0;
};

inline NegCorrTally negcorr(const std::vector<std::vector<Level>>& keys, double delta) {
  NegCorrTally t;
  for (const auto& levels : keys) {
    std::size_t neg = 0, tot = 0;
    for (const auto& i : levels)
      for (const auto& j : levels) {
        if (std::fabs(i.sr - j.sr - delta) > 1e-9) continue;
        ++tot;
        if ((i.score - j.score) * (i.kl - j.kl) < 0) ++neg;
      }
    if (tot == 0) continue;
    t.per_key.push_back(static_cast<double>(neg) / static_cast<double>(tot));
    t.negative += neg;
    t.total += tot;
  }
  return t;
}

// Two-pass mean.
inline double mean(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return static_cast<double>(s / static_cast<long double>(xs.size()));
}

// Micro transformer forward in double, written loop by loop. Weights are
// row-major (in, out); LN gain 1, bias 0.
struct MicroModel {
  std::size_t d = 0, heads = 0, d_ff = 0, vocab = 0;
  std::vector<std::vector<double>> emb;  // [vocab][d]
  struct Layer {
    std::vector<std::vector<double>> wq, wk, wv, wo, w1, w2;
  };
  std::vector<Layer> layers;
};

struct MicroTrace {
  std::vector<std::vector<std::vector<double>>> hidden;                  // [L+1][T][d]
  std::vector<std::vector<std::vector<std::vector<double>>>> attention;  // [L][H][T][T]
  std::vector<double> dist;
};

inline std::vector<double> layer_norm(const std::vector<double>& x) {
  double mu = 0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / std::sqrt(var + 1e-5);
  return out;
}

inline std::vector<double> vecmat(const std::vector<double>& x,
                                  const std::vector<std::vector<double>>& w) {
  std::vector<double> out(w[0].size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
  return out;
}

inline MicroTrace micro_forward(const MicroModel& m, const std::vector<int>& ids) {
  const std::size_t T = ids.size(), d = m.d, H = m.heads, hd = d / H;
  MicroTrace tr;
  std::vector<std::vector<double>> x(T, std::vector<double>(d));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < d; ++i) {
      const double angle =
          static_cast<double>(t) / std::pow(10000.0, static_cast<double>(i - i % 2) / static_cast<double>(d));
      x[t][i] = m.emb[ids[t]][i] + (i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  tr.hidden.push_back(x);
  for (const auto& layer : m.layers) {
    std::vector<std::vector<double>> q(T), k(T), v(T);
    for (std::size_t t = 0; t < T; ++t) {
      const auto h = layer_norm(x[t]);
      q[t] = vecmat(h, layer.wq);
      k[t] = vecmat(h, layer.wk);
      v[t] = vecmat(h, layer.wv);
    }
    std::vector<std::vector<std::vector<double>>> probs(H, std::vector<std::vector<double>>(T, std::vector<double>(T, 0.0)));
    std::vector<std::vector<double>> att(T, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> s(t + 1);
        double mx = -1e300;
        for (std::size_t u = 0; u <= t; ++u) {
          double dot = 0;
          for (std::size_t i = 0; i < hd; ++i) dot += q[t][h * hd + i] * k[u][h * hd + i];
          s[u] = dot / std::sqrt(static_cast<double>(hd));
          mx = std::max(mx, s[u]);
        }
        double z = 0;
        for (auto& e : s) z += (e = std::exp(e - mx));
        for (std::size_t u = 0; u <= t; ++u) {
          probs[h][t][u] = s[u] / z;
          for (std::size_t i = 0; i < hd; ++i) att[t][h * hd + i] += probs[h][t][u] * v[u][h * hd + i];
        }
      }
    tr.attention.push_back(probs);
    for (std::size_t t = 0; t < T; ++t) {
      const auto o = vecmat(att[t], layer.wo);
      for (std::size_t i = 0; i < d; ++i) x[t][i] += o[i];
      auto f = vecmat(layer_norm(x[t]), layer.w1);
      for (auto& e : f) e = 0.5 * e * (1.0 + std::erf(e / std::sqrt(2.0)));
      const auto o2 = vecmat(f, layer.w2);
      for (std::size_t i = 0; i < d; ++i) x[t][i] += o2[i];
    }
    tr.hidden.push_back(x);
  }
  const auto last = layer_norm(x[T - 1]);
  std::vector<double> logits(m.vocab);
  double mx = -1e300;
  for (std::size_t w = 0; w < m.vocab; ++w) {
    for (std::size_t i = 0; i < d; ++i) logits[w] += last[i] * m.emb[w][i];
    mx = std::max(mx, logits[w]);
  }
  double z = 0;
  for (auto& e : logits) z += (e = std::exp(e - mx));
  for (auto& e : logits) e /= z;
  tr.dist = logits;
  return tr;
}

}  // namespace oracle
