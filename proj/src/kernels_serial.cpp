#include "typolab/kernels.hpp"

#include "kernels_detail.hpp"
#include "typolab/error.hpp"

namespace typolab::kernels {

Backend parse_backend(const std::string& name) {
  if (name == "serial") return Backend::kSerial;
  if (name == "openmp" || name == "omp") return Backend::kOpenMP;
  throw Error(ErrorCode::kConfig, "unknown kernel backend '" + name + "' (serial | openmp)");
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

void softmax(std::span<float> x) {
  if (x.empty()) return;
  float max_v = x[0];
  for (float v : x) max_v = std::max(max_v, v);
  double total = 0;
  for (float& v : x) {
    v = std::exp(v - max_v);
    total += v;
  }
  const double inv = 1.0 / total;
  for (float& v : x) v = static_cast<float>(v * inv);
}

namespace serial {

void matmul(std::span<const float> a, std::span<const float> w, std::span<float> out,
            std::size_t rows, std::size_t inner, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    detail::matmul_row(a.data() + r * inner, w, out.data() + r * cols, inner, cols);
}

void layer_norm(std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::span<float> out, std::size_t rows,
                std::size_t dim, float eps) {
  for (std::size_t r = 0; r < rows; ++r)
    detail::layer_norm_row(x.data() + r * dim, gamma.data(), beta.data(), out.data() + r * dim,
                           dim, eps);
}

void gelu(std::span<float> x) {
  for (float& v : x) v = detail::gelu_scalar(v);
}

void add_inplace(std::span<float> x, std::span<const float> y) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
}

void causal_attention(std::span<const float> q, std::span<const float> k,
                      std::span<const float> v, std::span<float> out, std::span<float> probs,
                      std::size_t seq, std::size_t n_heads, std::size_t head_dim) {
  const std::size_t stride = n_heads * head_dim;
  for (std::size_t h = 0; h < n_heads; ++h)
    for (std::size_t i = 0; i < seq; ++i)
      detail::attention_row(q.data() + i * stride + h * head_dim, k.data() + h * head_dim,
                            v.data() + h * head_dim, out.data() + i * stride + h * head_dim,
                            probs.data() + (h * seq + i) * seq, i, seq, stride, head_dim);
}

}  // namespace serial

}  // namespace typolab::kernels
