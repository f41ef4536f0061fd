#include "typolab/kernels.hpp"

#include <omp.h>

#include "kernels_detail.hpp"

namespace typolab::kernels::omp {

void matmul(std::span<const float> a, std::span<const float> w, std::span<float> out,
            std::size_t rows, std::size_t inner, std::size_t cols) {
  const auto n = static_cast<long>(rows);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < n; ++r)
    detail::matmul_row(a.data() + r * inner, w, out.data() + r * cols, inner, cols);
}

void layer_norm(std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::span<float> out, std::size_t rows,
                std::size_t dim, float eps) {
  const auto n = static_cast<long>(rows);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < n; ++r)
    detail::layer_norm_row(x.data() + r * dim, gamma.data(), beta.data(), out.data() + r * dim,
                           dim, eps);
}

void gelu(std::span<float> x) {
  const auto n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) x[i] = detail::gelu_scalar(x[i]);
}

void add_inplace(std::span<float> x, std::span<const float> y) {
  const auto n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) x[i] += y[i];
}

void causal_attention(std::span<const float> q, std::span<const float> k,
                      std::span<const float> v, std::span<float> out, std::span<float> probs,
                      std::size_t seq, std::size_t n_heads, std::size_t head_dim) {
  const std::size_t stride = n_heads * head_dim;
  const auto heads = static_cast<long>(n_heads);
  const auto len = static_cast<long>(seq);
  // Later queries do more work; dynamic scheduling evens that out.
#pragma omp parallel for collapse(2) schedule(dynamic, 8)
  for (long h = 0; h < heads; ++h)
    for (long i = 0; i < len; ++i)
      detail::attention_row(q.data() + i * stride + h * head_dim, k.data() + h * head_dim,
                            v.data() + h * head_dim, out.data() + i * stride + h * head_dim,
                            probs.data() + (h * seq + i) * seq, i, seq, stride, head_dim);
}

}  // namespace typolab::kernels::omp
