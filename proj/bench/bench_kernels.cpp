// Serial vs OpenMP timings for the reference-model kernels and a full forward
// pass. Also checks that both backends agree bit for bit.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include <omp.h>

#include "typolab/kernels.hpp"
#include "typolab/refmodel.hpp"
#include "typolab/rng.hpp"

namespace {

using namespace typolab;
namespace k = typolab::kernels;

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

void report(const char* name, double serial, double omp, bool equal) {
  std::printf("%-22s serial %9.3f ms  openmp %9.3f ms  speedup %5.2fx  %s\n", name, serial, omp,
              serial / omp, equal ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  bool all_equal = true;

  {
    const std::size_t rows = 256, inner = 512, cols = 512;
    const auto a = random_vec(rows * inner, 1), w = random_vec(inner * cols, 2);
    std::vector<float> s(rows * cols), o(rows * cols);
    const double ts = time_ms([&] { k::serial::matmul(a, w, s, rows, inner, cols); }, 5);
    const double to = time_ms([&] { k::omp::matmul(a, w, o, rows, inner, cols); }, 5);
    const bool eq = same_bits(s, o);
    all_equal &= eq;
    report("matmul 256x512x512", ts, to, eq);
  }
  {
    const std::size_t seq = 256, heads = 8, hd = 64, d = heads * hd;
    const auto q = random_vec(seq * d, 3), kk = random_vec(seq * d, 4), v = random_vec(seq * d, 5);
    std::vector<float> so(seq * d), oo(seq * d), sp(heads * seq * seq), op(heads * seq * seq);
    const double ts =
        time_ms([&] { k::serial::causal_attention(q, kk, v, so, sp, seq, heads, hd); }, 5);
    const double to =
        time_ms([&] { k::omp::causal_attention(q, kk, v, oo, op, seq, heads, hd); }, 5);
    const bool eq = same_bits(so, oo) && same_bits(sp, op);
    all_equal &= eq;
    report("attention seq=256 H=8", ts, to, eq);
  }
  {
    RefModelConfig c;
    c.n_layers = 4;
    c.n_heads = 4;
    c.d_model = 128;
    c.d_ff = 512;
    c.vocab_size = 2000;
    c.init_seed = 7;
    const RefModel model = RefModel::init(c);
    std::vector<std::int32_t> ids(200);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int32_t>((i * 37) % 2000);
    ForwardTrace s, o;
    const double ts = time_ms([&] { s = model.trace(ids, k::Backend::kSerial); }, 3);
    const double to = time_ms([&] { o = model.trace(ids, k::Backend::kOpenMP); }, 3);
    const bool eq = same_bits(s.hidden, o.hidden) && same_bits(s.attention, o.attention) &&
                    same_bits(s.next_token_dist, o.next_token_dist);
    all_equal &= eq;
    report("forward 200 tokens", ts, to, eq);
  }
  return all_equal ? 0 : 1;
}
