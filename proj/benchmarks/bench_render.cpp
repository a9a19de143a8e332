#include <benchmark/benchmark.h>

#include <filesystem>

#include "aberray/lens_io.hpp"
#include "aberray/provider.hpp"
#include "aberray/render.hpp"
#include "aberray/rng.hpp"

namespace {

using namespace aberray;

const LensPrescription& lens() {
  static const LensPrescription l =
      load_prescription(std::filesystem::path(ABERRAY_BENCH_DATA_DIR) / "lenses" / "lensnet_50mm_f2.8.lens");
  return l;
}

Image noise(int w, int h) {
  Image im(w, h, 3);
  Rng rng(1);
  for (double& v : im.values()) v = rng.uniform();
  return im;
}

PsfField uniform_field(int w, int h, int k) {
  PsfField f(w, h, k);
  std::fill(f.kernels.begin(), f.kernels.end(), 1.0 / (k * k));
  return f;
}

void BM_LocalConvolve(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0)), h = w * 3 / 4;
  const Image im = noise(w, h);
  const PsfField field = uniform_field(w, h, 11);
  for (auto _ : state) benchmark::DoNotOptimize(local_convolve(im, field));
  state.SetItemsProcessed(state.iterations() * w * h);
}
BENCHMARK(BM_LocalConvolve)->Arg(160)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_GaussianPsfField(benchmark::State& state) {
  const int w = 320, h = 240;
  const Image depth(w, h, 1, 1.2);
  const auto provider = make_gaussian_provider(lens(), lens().sensor_width_mm / w);
  for (auto _ : state) benchmark::DoNotOptimize(pixel_psf_field(lens(), depth, 1.5, *provider));
}
BENCHMARK(BM_GaussianPsfField)->Unit(benchmark::kMillisecond);

void BM_RaytracedPsfField(benchmark::State& state) {
  const int w = 64, h = 48;
  const Image depth(w, h, 1, 1.2);
  const auto provider = make_raytraced_provider(lens(), lens().sensor_width_mm / w, 256, 3);
  for (auto _ : state) benchmark::DoNotOptimize(pixel_psf_field(lens(), depth, 1.5, *provider));
}
BENCHMARK(BM_RaytracedPsfField)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
