#include "typolab/refmodel.hpp"

#include <cmath>

#include "typolab/error.hpp"
#include "typolab/rng.hpp"

namespace typolab {

void RefModelConfig::validate() const {
  if (n_layers == 0 || n_heads == 0 || d_model == 0 || d_ff == 0 || vocab_size == 0 ||
      max_seq_len == 0)
    throw Error(ErrorCode::kConfig, "refmodel: every count must be >= 1");
  if (d_model % n_heads != 0)
    throw Error(ErrorCode::kConfig, "refmodel: d_model " + std::to_string(d_model) +
                                        " not divisible by n_heads " + std::to_string(n_heads));
}

RefModelConfig refmodel_config_from_json(const nlohmann::json& j) {
  RefModelConfig c;
  try {
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_model = j.value("d_model", c.d_model);
    c.d_ff = j.value("d_ff", c.d_ff);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.init_seed = j.value("init_seed", c.init_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("refmodel config: ") + e.what());
  }
  return c;
}

nlohmann::ordered_json to_json(const RefModelConfig& c) {
  return {{"n_layers", c.n_layers}, {"n_heads", c.n_heads},   {"d_model", c.d_model},
          {"d_ff", c.d_ff},         {"vocab_size", c.vocab_size}, {"max_seq_len", c.max_seq_len},
          {"init_seed", c.init_seed}};
}

float sinusoidal_position(std::size_t pos, std::size_t dim, std::size_t d_model) {
  const double pair = static_cast<double>(dim / 2 * 2);
  const double angle = static_cast<double>(pos) / std::pow(10000.0, pair / static_cast<double>(d_model));
  return static_cast<float>(dim % 2 == 0 ? std::sin(angle) : std::cos(angle));
}

RefModel RefModel::init(const RefModelConfig& config) {
  config.validate();
  RefModel m;
  m.config_ = config;
  Rng rng(config.init_seed);
  auto draw = [&](std::size_t n) {
    std::vector<float> w(n);
    for (float& x : w) x = static_cast<float>(rng.uniform(-kInitRange, kInitRange));
    return w;
  };
  const std::size_t d = config.d_model;
  auto& w = m.weights_;
  w.embedding = draw(config.vocab_size * d);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    LayerWeights lw;
    lw.ln1_gamma.assign(d, 1.0f);
    lw.ln1_beta.assign(d, 0.0f);
    lw.ln2_gamma.assign(d, 1.0f);
    lw.ln2_beta.assign(d, 0.0f);
    lw.wq = draw(d * d);
    lw.wk = draw(d * d);
    lw.wv = draw(d * d);
    lw.wo = draw(d * d);
    lw.w1 = draw(d * config.d_ff);
    lw.w2 = draw(config.d_ff * d);
    w.layers.push_back(std::move(lw));
  }
  w.lnf_gamma.assign(d, 1.0f);
  w.lnf_beta.assign(d, 0.0f);
  return m;
}

std::size_t RefModel::parameter_count() const {
  const auto& c = config_;
  const std::size_t d = c.d_model;
  return c.vocab_size * d + c.n_layers * (4 * d * d + 2 * d * c.d_ff + 4 * d) + 2 * d;
}

namespace {

// Dispatch table over the two kernel namespaces.
struct Ops {
  decltype(&kernels::serial::matmul) matmul;
  decltype(&kernels::serial::layer_norm) layer_norm;
  decltype(&kernels::serial::gelu) gelu;
  decltype(&kernels::serial::add_inplace) add_inplace;
  decltype(&kernels::serial::causal_attention) causal_attention;
};

Ops ops_for(kernels::Backend backend) {
  if (backend == kernels::Backend::kSerial)
    return {kernels::serial::matmul, kernels::serial::layer_norm, kernels::serial::gelu,
            kernels::serial::add_inplace, kernels::serial::causal_attention};
  return {kernels::omp::matmul, kernels::omp::layer_norm, kernels::omp::gelu,
          kernels::omp::add_inplace, kernels::omp::causal_attention};
}

}  // namespace

ForwardTrace RefModel::trace(std::span<const std::int32_t> ids, kernels::Backend backend) const {
  const auto& c = config_;
  if (ids.empty() || ids.size() > c.max_seq_len)
    throw Error(ErrorCode::kPrecondition, "forward: sequence length " + std::to_string(ids.size()) +
                                              " outside [1, " + std::to_string(c.max_seq_len) + "]");
  for (std::size_t t = 0; t < ids.size(); ++t)
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= c.vocab_size)
      throw Error(ErrorCode::kPrecondition, "forward: token id " + std::to_string(ids[t]) +
                                                " at position " + std::to_string(t) +
                                                " outside the vocabulary");
  const Ops ops = ops_for(backend);
  const std::size_t T = ids.size();
  const std::size_t d = c.d_model;
  const std::size_t H = c.n_heads;
  const std::size_t L = c.n_layers;

  ForwardTrace tr;
  tr.seq_len = T;
  tr.hidden.assign((L + 1) * T * d, 0.0f);
  tr.attention.assign(L * H * T * T, 0.0f);

  std::vector<float> x(T * d);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < d; ++i)
      x[t * d + i] = weights_.embedding[static_cast<std::size_t>(ids[t]) * d + i] +
                     sinusoidal_position(t, i, d);
  std::copy(x.begin(), x.end(), tr.hidden.begin());

  std::vector<float> h(T * d), q(T * d), k(T * d), v(T * d), att(T * d), proj(T * d);
  std::vector<float> ff(T * c.d_ff);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& w = weights_.layers[l];
    ops.layer_norm(x, w.ln1_gamma, w.ln1_beta, h, T, d, kLayerNormEps);
    ops.matmul(h, w.wq, q, T, d, d);
    ops.matmul(h, w.wk, k, T, d, d);
    ops.matmul(h, w.wv, v, T, d, d);
    std::span<float> probs(tr.attention.data() + l * H * T * T, H * T * T);
    ops.causal_attention(q, k, v, att, probs, T, H, c.head_dim());
    ops.matmul(att, w.wo, proj, T, d, d);
    ops.add_inplace(x, proj);

    ops.layer_norm(x, w.ln2_gamma, w.ln2_beta, h, T, d, kLayerNormEps);
    ops.matmul(h, w.w1, ff, T, d, c.d_ff);
    ops.gelu(ff);
    ops.matmul(ff, w.w2, proj, T, c.d_ff, d);
    ops.add_inplace(x, proj);
    std::copy(x.begin(), x.end(), tr.hidden.begin() + static_cast<long>((l + 1) * T * d));
  }

  std::vector<float> last(d);
  ops.layer_norm(std::span<const float>(x).subspan((T - 1) * d, d), weights_.lnf_gamma,
                 weights_.lnf_beta, last, 1, d, kLayerNormEps);
  // Tied head: logits = last . embedding^T, one output row per vocabulary id.
  tr.next_token_dist.assign(c.vocab_size, 0.0f);
  const auto V = static_cast<long>(c.vocab_size);
#pragma omp parallel for schedule(static) if (backend == kernels::Backend::kOpenMP)
  for (long tok = 0; tok < V; ++tok) {
    const float* e = weights_.embedding.data() + static_cast<std::size_t>(tok) * d;
    float s = 0;
    for (std::size_t i = 0; i < d; ++i) s += last[i] * e[i];
    tr.next_token_dist[tok] = s;
  }
  kernels::softmax(tr.next_token_dist);
  return tr;
}

ActivationDump RefModel::forward(std::span<const std::int32_t> ids, const TokenSpan& span,
                                 kernels::Backend backend) const {
  if (span.start >= span.end || span.end > ids.size())
    throw Error(ErrorCode::kPrecondition, "forward: span [" + std::to_string(span.start) + ", " +
                                              std::to_string(span.end) + ") outside a " +
                                              std::to_string(ids.size()) + "-token prompt");
  const ForwardTrace tr = trace(ids, backend);
  const auto& c = config_;
  const std::size_t T = tr.seq_len;
  const std::size_t d = c.d_model;
  ActivationDump dump =
      ActivationDump::zeros(c.n_layers, c.n_heads, d, span.size(), c.vocab_size);
  for (std::size_t l = 0; l <= c.n_layers; ++l)
    for (std::size_t p = 0; p < span.size(); ++p) {
      const float* src = tr.hidden.data() + (l * T + span.start + p) * d;
      std::copy(src, src + d, dump.hidden_at(l, p).begin());
    }
  const std::size_t query = span.t_last();
  for (std::size_t l = 0; l < c.n_layers; ++l)
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      const float* row = tr.attention.data() + ((l * c.n_heads + h) * T + query) * T;
      std::copy(row + span.start, row + span.end, dump.attn_row(l, h).begin());
    }
  dump.next_token_dist = tr.next_token_dist;
  return dump;
}

}  // namespace typolab
