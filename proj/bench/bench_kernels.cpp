// Serial reference vs. blocked/OpenMP affine kernels at the shapes the
// learner actually uses, plus one full agent update.

#include <benchmark/benchmark.h>

#include <random>

#include "softcap/kernels.hpp"
#include "softcap/sac.hpp"

namespace {

using softcap::nn::Matrix;
namespace kernels = softcap::nn::kernels;

Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data) v = d(rng);
  return m;
}

template <bool Parallel>
void BM_Forward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Matrix x = random_matrix(batch, in, 1);
  const Matrix w = random_matrix(out, in, 2);
  const std::vector<double> b(out, 0.1);
  Matrix y;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::affine_forward(x, w, b, y);
    else kernels::reference::affine_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * batch * in * out, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <bool Parallel>
void BM_BackwardInput(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Matrix dy = random_matrix(batch, out, 3);
  const Matrix w = random_matrix(out, in, 4);
  Matrix dx;
  for (auto _ : state) {
    if constexpr (Parallel) kernels::affine_backward_input(dy, w, dx);
    else kernels::reference::affine_backward_input(dy, w, dx);
    benchmark::DoNotOptimize(dx.data.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * batch * in * out, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

template <bool Parallel>
void BM_BackwardParams(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = static_cast<std::size_t>(state.range(1));
  const auto out = static_cast<std::size_t>(state.range(2));
  const Matrix dy = random_matrix(batch, out, 5);
  const Matrix x = random_matrix(batch, in, 6);
  Matrix dw;
  std::vector<double> db(out);
  for (auto _ : state) {
    if constexpr (Parallel) kernels::affine_backward_params(dy, x, dw, db);
    else kernels::reference::affine_backward_params(dy, x, dw, db);
    benchmark::DoNotOptimize(dw.data.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * batch * in * out, benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({1024, 256, 256})->Args({1024, 45, 256})->Args({256, 128, 128})->Unit(benchmark::kMillisecond);
}

BENCHMARK(BM_Forward<false>)->Name("forward/reference")->Apply(shapes);
BENCHMARK(BM_Forward<true>)->Name("forward/parallel")->Apply(shapes);
BENCHMARK(BM_BackwardInput<false>)->Name("backward_input/reference")->Apply(shapes);
BENCHMARK(BM_BackwardInput<true>)->Name("backward_input/parallel")->Apply(shapes);
BENCHMARK(BM_BackwardParams<false>)->Name("backward_params/reference")->Apply(shapes);
BENCHMARK(BM_BackwardParams<true>)->Name("backward_params/parallel")->Apply(shapes);

void BM_AgentUpdate(benchmark::State& state) {
  softcap::sac::TrainConfig cfg;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  const auto width = static_cast<std::size_t>(state.range(1));
  cfg.hidden = {width, width};
  softcap::sac::Agent agent(39, 6, cfg);
  softcap::sac::ReplayBuffer buffer(4096, 39, 6);
  softcap::sac::Rng rng(7);
  std::vector<double> o(39), a(6);
  for (int i = 0; i < 4096; ++i) {
    for (double& v : o) v = rng.uniform(-1, 1);
    for (double& v : a) v = rng.uniform(-1, 1);
    buffer.add(o, a, rng.uniform(0, 3), o, false);
  }
  for (auto _ : state) {
    auto batch = buffer.sample(cfg.batch_size, rng);
    benchmark::DoNotOptimize(agent.update(batch, rng));
  }
}
BENCHMARK(BM_AgentUpdate)->Args({1024, 256})->Args({256, 256})->Args({256, 128})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
