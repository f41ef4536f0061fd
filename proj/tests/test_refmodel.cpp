#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "typolab/error.hpp"
#include "typolab/refmodel.hpp"
#include "typolab/rng.hpp"

using namespace typolab;

namespace {

RefModelConfig small_config(std::uint64_t seed = 0) {
  RefModelConfig c;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_model = 8;
  c.d_ff = 16;
  c.vocab_size = 30;
  c.max_seq_len = 64;
  c.init_seed = seed;
  return c;
}

std::vector<std::vector<double>> as_matrix(const std::vector<float>& w, std::size_t rows,
                                           std::size_t cols) {
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m[i][j] = w[i * cols + j];
  return m;
}

oracle::MicroModel to_oracle(const RefModel& model) {
  const auto& c = model.config();
  const auto& w = model.weights();
  oracle::MicroModel m;
  m.d = c.d_model;
  m.heads = c.n_heads;
  m.d_ff = c.d_ff;
  m.vocab = c.vocab_size;
  m.emb = as_matrix(w.embedding, c.vocab_size, c.d_model);
  for (const auto& l : w.layers)
    m.layers.push_back({as_matrix(l.wq, m.d, m.d), as_matrix(l.wk, m.d, m.d),
                        as_matrix(l.wv, m.d, m.d), as_matrix(l.wo, m.d, m.d),
                        as_matrix(l.w1, m.d, m.d_ff), as_matrix(l.w2, m.d_ff, m.d)});
  return m;
}

void check_against_oracle(const RefModel& model, const std::vector<std::int32_t>& ids) {
  const auto& c = model.config();
  const auto tr = model.trace(ids, kernels::Backend::kSerial);
  const auto o = oracle::micro_forward(to_oracle(model), {ids.begin(), ids.end()});
  const std::size_t T = ids.size();
  for (std::size_t l = 0; l <= c.n_layers; ++l)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < c.d_model; ++i)
        CHECK(std::fabs(tr.hidden[(l * T + t) * c.d_model + i] - o.hidden[l][t][i]) < 1e-5);
  for (std::size_t l = 0; l < c.n_layers; ++l)
    for (std::size_t h = 0; h < c.n_heads; ++h)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t u = 0; u < T; ++u)
          CHECK(std::fabs(tr.attention[((l * c.n_heads + h) * T + t) * T + u] -
                          o.attention[l][h][t][u]) < 1e-5);
  for (std::size_t v = 0; v < c.vocab_size; ++v)
    CHECK(std::fabs(tr.next_token_dist[v] - o.dist[v]) < 1e-5);
}

}  // namespace

TEST_CASE("parameter count closed form") {
  const auto m = RefModel::init(small_config());
  const std::size_t d = 8, ff = 16, V = 30, L = 2;
  CHECK(m.parameter_count() == V * d + L * (4 * d * d + 2 * d * ff + 4 * d) + 2 * d);
  std::size_t counted = m.weights().embedding.size() + m.weights().lnf_gamma.size() +
                        m.weights().lnf_beta.size();
  for (const auto& l : m.weights().layers)
    counted += l.wq.size() + l.wk.size() + l.wv.size() + l.wo.size() + l.w1.size() +
               l.w2.size() + l.ln1_gamma.size() + l.ln1_beta.size() + l.ln2_gamma.size() +
               l.ln2_beta.size();
  CHECK(counted == m.parameter_count());
}

TEST_CASE("weights are drawn in the documented order") {
  const auto m = RefModel::init(small_config(5));
  Rng rng(5);
  const auto draw = [&] { return static_cast<float>(rng.uniform(-kInitRange, kInitRange)); };
  for (float w : m.weights().embedding) REQUIRE(w == draw());
  for (const auto& l : m.weights().layers)
    for (const auto* mat : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.w2})
      for (float w : *mat) REQUIRE(w == draw());
  for (float g : m.weights().layers[0].ln1_gamma) CHECK(g == 1.0f);
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.d_model = 9;
  CHECK_THROWS_AS(RefModel::init(c), Error);
  c = small_config();
  c.vocab_size = 0;
  CHECK_THROWS_AS(RefModel::init(c), Error);
  const auto m = RefModel::init(small_config());
  const std::vector<std::int32_t> bad = {1, 30};
  CHECK_THROWS_AS(m.trace(bad), Error);
}

TEST_CASE("micro-config 1 layer, 1 head, d_model 2 matches the step-by-step oracle") {
  RefModelConfig c;
  c.n_layers = 1;
  c.n_heads = 1;
  c.d_model = 2;
  c.d_ff = 4;
  c.vocab_size = 5;
  c.init_seed = 3;
  const auto m = RefModel::init(c);
  check_against_oracle(m, {1, 4, 2});
}

TEST_CASE("small multi-head model matches the oracle") {
  const auto m = RefModel::init(small_config(7));
  check_against_oracle(m, {3, 17, 0, 29, 5, 5, 12});
}

TEST_CASE("attention rows sum to one and the model is causal") {
  const auto m = RefModel::init(small_config(1));
  const std::vector<std::int32_t> a = {1, 2, 3, 4, 5, 6};
  std::vector<std::int32_t> b = a;
  b[4] = 20;
  b[5] = 21;
  const auto ta = m.trace(a);
  const auto tb = m.trace(b);
  const std::size_t T = a.size(), d = 8, H = 2;
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t t = 0; t < T; ++t) {
        double s = 0;
        for (std::size_t u = 0; u < T; ++u) s += ta.attention[((l * H + h) * T + t) * T + u];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
      }
  // Positions before the perturbed suffix are untouched, bit for bit.
  for (std::size_t l = 0; l <= 2; ++l)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t i = 0; i < d; ++i)
        CHECK(ta.hidden[(l * T + t) * d + i] == tb.hidden[(l * T + t) * d + i]);
}

TEST_CASE("forward is deterministic, backend independent, and seed dependent") {
  const auto m = RefModel::init(small_config(2));
  const std::vector<std::int32_t> ids = {4, 8, 15, 16, 23};
  const TokenSpan span{2, 5};
  const auto a = m.forward(ids, span, kernels::Backend::kSerial);
  const auto b = m.forward(ids, span, kernels::Backend::kOpenMP);
  CHECK(a.hidden == b.hidden);
  CHECK(a.attn_rows == b.attn_rows);
  CHECK(a.next_token_dist == b.next_token_dist);
  CHECK(a.span_len == 3);
  const auto other = RefModel::init(small_config(3)).forward(ids, span);
  CHECK(other.next_token_dist != a.next_token_dist);
}

TEST_CASE("full-prompt span: per-layer attention aggregate equals the head count") {
  const auto m = RefModel::init(small_config(4));
  const std::vector<std::int32_t> ids = {1, 2, 3, 4, 5, 6, 7};
  const auto d = m.forward(ids, {0, 7});
  for (std::size_t l = 0; l < 2; ++l) {
    double total = 0;
    for (std::size_t h = 0; h < 2; ++h)
      for (float v : d.attn_row(l, h)) total += v;
    CHECK(total == doctest::Approx(2.0).epsilon(1e-5));
  }
}

TEST_CASE("sinusoidal position values") {
  CHECK(sinusoidal_position(0, 0, 8) == 0.0f);
  CHECK(sinusoidal_position(0, 1, 8) == 1.0f);
  CHECK(sinusoidal_position(3, 2, 8) == doctest::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 8))));
}
