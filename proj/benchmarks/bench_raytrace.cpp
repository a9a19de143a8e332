#include <benchmark/benchmark.h>

#include <filesystem>

#include "aberray/focus.hpp"
#include "aberray/lens_io.hpp"
#include "aberray/psf.hpp"

namespace {

using namespace aberray;

const LensPrescription& lens() {
  static const LensPrescription l =
      load_prescription(std::filesystem::path(ABERRAY_BENCH_DATA_DIR) / "lenses" / "lensnet_50mm_f2.8.lens");
  return l;
}

void BM_TracePoint(benchmark::State& state) {
  const Tracer tracer = focused_tracer(lens(), 1.5);
  const auto spp = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(tracer.trace_point(Vec3(0.3, 0.1, 1.2), spp, 7));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TracePoint)->Arg(256)->Arg(2048);

void BM_RaytracedPsf(benchmark::State& state) {
  const Tracer tracer = focused_tracer(lens(), 1.5);
  const Frustum frustum = Frustum::for_lens(lens(), DepthNorm::kLinear);
  const ObjectQuery q = normalize_query(0.3, 0.1, 1.2, 1.5, frustum);
  for (auto _ : state) benchmark::DoNotOptimize(raytraced_psf(tracer, q, 2048, 7, 0.05));
}
BENCHMARK(BM_RaytracedPsf);

void BM_FocusTo(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(focus_to(lens(), 1.5));
}
BENCHMARK(BM_FocusTo);

}  // namespace

BENCHMARK_MAIN();
