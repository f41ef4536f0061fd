#pragma once

#include <cstddef>
#include <span>
#include <string>

// Dense kernels behind the reference model. `serial` is the reference
// implementation; `omp` parallelizes the outer loops with OpenMP while
// keeping each output element's accumulation order identical, so both
// produce bit-identical results regardless of thread count.
//
// Layout: row-major. Activations are (rows, dim); weights are (in, out).
namespace typolab::kernels {

enum class Backend { kSerial, kOpenMP };

Backend parse_backend(const std::string& name);

// Sum in a fixed binary-tree order; result depends only on the input order.
double pairwise_sum(std::span<const double> xs);

// Numerically stable in-place softmax of one row.
void softmax(std::span<float> x);

namespace serial {

// out(rows, cols) = a(rows, inner) . w(inner, cols)
void matmul(std::span<const float> a, std::span<const float> w, std::span<float> out,
            std::size_t rows, std::size_t inner, std::size_t cols);
void layer_norm(std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::span<float> out, std::size_t rows,
                std::size_t dim, float eps);
void gelu(std::span<float> x);
void add_inplace(std::span<float> x, std::span<const float> y);
// q, k, v, out: (seq, n_heads * head_dim). probs: (n_heads, seq, seq) with
// zeros above the diagonal.
void causal_attention(std::span<const float> q, std::span<const float> k,
                      std::span<const float> v, std::span<float> out, std::span<float> probs,
                      std::size_t seq, std::size_t n_heads, std::size_t head_dim);

}  // namespace serial

namespace omp {

void matmul(std::span<const float> a, std::span<const float> w, std::span<float> out,
            std::size_t rows, std::size_t inner, std::size_t cols);
void layer_norm(std::span<const float> x, std::span<const float> gamma,
                std::span<const float> beta, std::span<float> out, std::size_t rows,
                std::size_t dim, float eps);
void gelu(std::span<float> x);
void add_inplace(std::span<float> x, std::span<const float> y);
void causal_attention(std::span<const float> q, std::span<const float> k,
                      std::span<const float> v, std::span<float> out, std::span<float> probs,
                      std::size_t seq, std::size_t n_heads, std::size_t head_dim);

}  // namespace omp

}  // namespace typolab::kernels
