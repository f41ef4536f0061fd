#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "typolab/activation_store.hpp"
#include "typolab/kernels.hpp"
#include "typolab/tokenizer.hpp"

namespace typolab {

struct RefModelConfig {
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;
  std::size_t max_seq_len = 512;
  std::uint64_t init_seed = 0;

  // Throws kConfig on a zero count or d_model not divisible by n_heads.
  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }
};

RefModelConfig refmodel_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const RefModelConfig& config);

struct LayerWeights {
  std::vector<float> ln1_gamma, ln1_beta;
  std::vector<float> wq, wk, wv, wo;  // (d_model, d_model)
  std::vector<float> ln2_gamma, ln2_beta;
  std::vector<float> w1;  // (d_model, d_ff)
  std::vector<float> w2;  // (d_ff, d_model)
};

struct ModelWeights {
  std::vector<float> embedding;  // (vocab, d_model); tied with the output head
  std::vector<LayerWeights> layers;
  std::vector<float> lnf_gamma, lnf_beta;
};

// Everything a forward pass computes, at every position.
struct ForwardTrace {
  std::size_t seq_len = 0;
  std::vector<float> hidden;           // (L+1, seq, d_model)
  std::vector<float> attention;        // (L, H, seq, seq), row-stochastic, causal
  std::vector<float> next_token_dist;  // (vocab) at the final position
};

inline constexpr float kLayerNormEps = 1e-5f;
inline constexpr float kInitRange = 0.02f;

// Untrained pre-norm decoder-only transformer.
//
// Weight matrices are drawn from U(-0.02, 0.02) by Rng(init_seed) in this
// order: embedding, then per layer wq, wk, wv, wo, w1, w2, each row-major.
// LayerNorm gains start at 1 and biases at 0. No linear biases.
class RefModel {
 public:
  static RefModel init(const RefModelConfig& config);

  const RefModelConfig& config() const { return config_; }
  const ModelWeights& weights() const { return weights_; }

  // V*d + L*(4d^2 + 2*d*d_ff + 4d) + 2d; the output head is tied.
  std::size_t parameter_count() const;

  ForwardTrace trace(std::span<const std::int32_t> token_ids,
                     kernels::Backend backend = kernels::Backend::kOpenMP) const;

  // Span-restricted dump: hidden states at the span positions for layers
  // 0..L, each head's attention row from t_last sliced to the span, and the
  // final-position next-token distribution.
  ActivationDump forward(std::span<const std::int32_t> token_ids, const TokenSpan& span,
                         kernels::Backend backend = kernels::Backend::kOpenMP) const;

 private:
  RefModelConfig config_;
  ModelWeights weights_;
};

// Sinusoidal position encoding value for (position, dimension).
float sinusoidal_position(std::size_t pos, std::size_t dim, std::size_t d_model);

}  // namespace typolab
