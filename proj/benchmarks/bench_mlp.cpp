#include <benchmark/benchmark.h>

#include "aberray/mlp.hpp"
#include "aberray/rng.hpp"

namespace {

using namespace aberray;

const std::vector<int> kDims = psf_network_dims();

Mlp<float>::Matrix random_batch(int rows, int cols) {
  Mlp<float>::Matrix m(rows, cols);
  Rng rng(2);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform(-1, 1));
  return m;
}

void BM_MlpForward(benchmark::State& state) {
  const auto net = Mlp<float>::initialized(kDims, 1);
  const auto x = random_batch(4, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(256)->Arg(1024);

void BM_MlpBackward(benchmark::State& state) {
  const auto net = Mlp<float>::initialized(kDims, 1);
  const auto x = random_batch(4, 256);
  const auto y = random_batch(121, 256).cwiseAbs();
  auto g = net.zero_gradients();
  for (auto _ : state) benchmark::DoNotOptimize(net.backward(x, y, g));
}
BENCHMARK(BM_MlpBackward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
