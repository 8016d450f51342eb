#include <random>

#include <benchmark/benchmark.h>

#include "cola/cam.hpp"
#include "cola/cbpl.hpp"
#include "cola/classifier.hpp"
#include "cola/synth.hpp"

namespace {

cola::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint32_t seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  cola::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = u(gen);
  return m;
}

void BM_LinearForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
  cola::Rng rng(1);
  auto layer = cola::LinearLayer<float>::uniform_init(d, d / 4, rng);
  const auto x = random_matrix(n, d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(layer.apply(x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_LinearForward)->Args({128, 512})->Args({128, 768});

void BM_CamForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0)), d = static_cast<std::size_t>(state.range(1));
  cola::CamConfig c;
  c.dim = d;
  cola::Rng rng(1);
  cola::ContextAwareModule<float> cam(cola::CamParameters<float>::initialize(c, rng));
  const auto x = random_matrix(n, d, 3);
  const cola::Matrix grad = random_matrix(n, d, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cam.forward(x));
    benchmark::DoNotOptimize(cam.backward(grad));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_CamForwardBackward)->Args({128, 64})->Args({128, 512});

void BM_Classify(benchmark::State& state) {
  cola::SynthConfig s;
  s.classes = static_cast<std::size_t>(state.range(0));
  s.dim = 128;
  s.n_per_class = 50;
  const auto data = cola::generate_synthetic(s);
  for (auto _ : state) benchmark::DoNotOptimize(cola::classify(data.target.features, data.prototypes));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data.target.features.rows()));
}
BENCHMARK(BM_Classify)->Arg(10)->Arg(100);

void BM_CbplFilter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<cola::Prediction> preds(n);
  for (auto& p : preds) {
    p.label = gen() % 100;
    p.confidence = u(gen);
    p.probabilities.assign(100, 0.0);
    p.probabilities[p.label] = p.confidence;
  }
  const cola::CbplConfig cfg{0.7, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(cola::cbpl_filter(preds, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}
BENCHMARK(BM_CbplFilter)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
