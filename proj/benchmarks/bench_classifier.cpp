#include <benchmark/benchmark.h>

#include <vector>

#include "fabinspect/classifier.hpp"
#include "fabinspect/random.hpp"

using namespace fabinspect;

namespace {

Tensor noise_input(std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({1, side, side});
  for (auto& v : t.values()) v = rng.uniform();
  return t;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto model = init_model(1);
  const auto input = noise_input(side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, input));
}
BENCHMARK(BM_Forward)->Arg(96)->Arg(288)->Unit(benchmark::kMillisecond);

// One SGD batch worth of work: loss and gradients over four samples.
static void BM_BatchGradients(benchmark::State& state) {
  const auto model = init_model(1);
  std::vector<LabeledTensor> batch;
  for (std::uint64_t i = 0; i < 4; ++i) {
    batch.push_back({noise_input(96, i), i % 2 ? Label::defective : Label::defect_free});
  }
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_gradients(model, batch));
}
BENCHMARK(BM_BatchGradients)->Unit(benchmark::kMillisecond);
