#include <benchmark/benchmark.h>

#include "fabinspect/intensity.hpp"
#include "fabinspect/spectral.hpp"
#include "fabinspect/synthfab.hpp"
#include "fabinspect/uniformity.hpp"

using namespace fabinspect;

namespace {

GrayImage sample_image() {
  CorpusSpec spec;
  spec.families = default_families(1);
  spec.seed = 1;
  return generate_sample(spec, 0, Label::defect_free, 0);
}

}  // namespace

static void BM_Dft2RoundTrip(benchmark::State& state) {
  const auto img = sample_image();
  for (auto _ : state) {
    auto inv = idft2(dft2(img));
    benchmark::DoNotOptimize(inv.plane);
  }
}
BENCHMARK(BM_Dft2RoundTrip)->Unit(benchmark::kMillisecond);

static void BM_AdjustIntensity(benchmark::State& state) {
  const auto img = sample_image();
  for (auto _ : state) benchmark::DoNotOptimize(adjust_intensity(img));
}
BENCHMARK(BM_AdjustIntensity)->Unit(benchmark::kMillisecond);

static void BM_AdjustedUniformity(benchmark::State& state) {
  const auto img = sample_image();
  for (auto _ : state) benchmark::DoNotOptimize(measure_adjusted_uniformity(img, {}, {}));
}
BENCHMARK(BM_AdjustedUniformity)->Unit(benchmark::kMillisecond);
