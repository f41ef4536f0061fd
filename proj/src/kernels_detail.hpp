#pragma once

// Per-element bodies shared by the serial and OpenMP kernels. Only the loop
// scheduling differs between the two backends.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace typolab::kernels::detail {

inline void matmul_row(const float* a_row, std::span<const float> w, float* out_row,
                       std::size_t inner, std::size_t cols) {
  std::fill(out_row, out_row + cols, 0.0f);
  for (std::size_t k = 0; k < inner; ++k) {
    const float a = a_row[k];
    const float* w_row = w.data() + k * cols;
    for (std::size_t c = 0; c < cols; ++c) out_row[c] += a * w_row[c];
  }
}

inline void layer_norm_row(const float* x, const float* gamma, const float* beta, float* out,
                           std::size_t dim, float eps) {
  double mean = 0;
  for (std::size_t i = 0; i < dim; ++i) mean += x[i];
  mean /= static_cast<double>(dim);
  double var = 0;
  for (std::size_t i = 0; i < dim; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<double>(dim);
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < dim; ++i)
    out[i] = static_cast<float>((x[i] - mean) * inv) * gamma[i] + beta[i];
}

inline float gelu_scalar(float x) {
  return static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
}

// One query row of one head: writes probs[0..seq) and out[head_dim].
inline void attention_row(const float* q, const float* k, const float* v, float* out,
                          float* probs, std::size_t query, std::size_t seq,
                          std::size_t stride, std::size_t head_dim) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
  float max_score = -INFINITY;
  for (std::size_t j = 0; j <= query; ++j) {
    float s = 0;
    for (std::size_t d = 0; d < head_dim; ++d) s += q[d] * k[j * stride + d];
    s *= scale;
    probs[j] = s;
    max_score = std::max(max_score, s);
  }
  float total = 0;
  for (std::size_t j = 0; j <= query; ++j) {
    probs[j] = std::exp(probs[j] - max_score);
    total += probs[j];
  }
  for (std::size_t j = 0; j <= query; ++j) probs[j] /= total;
  for (std::size_t j = query + 1; j < seq; ++j) probs[j] = 0.0f;
  std::fill(out, out + head_dim, 0.0f);
  for (std::size_t j = 0; j <= query; ++j) {
    const float p = probs[j];
    const float* v_row = v + j * stride;
    for (std::size_t d = 0; d < head_dim; ++d) out[d] += p * v_row[d];
  }
}

}  // namespace typolab::kernels::detail
