#include <benchmark/benchmark.h>

#include "leafrust/imageproc.hpp"
#include "leafrust/ingest.hpp"
#include "leafrust/layers.hpp"
#include "leafrust/model.hpp"
#include "leafrust/rng.hpp"

namespace {

using leafrust::Tensor;

Tensor<float> random_tensor(leafrust::Shape shape, std::uint64_t seed) {
  Tensor<float> t(std::move(shape));
  leafrust::SplitMix64 rng(seed);
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

void BM_ConvForward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto input = random_tensor({32, cin, 128, 128}, 1);
  const auto weights = random_tensor({cout, cin, 3, 3}, 2);
  const auto bias = random_tensor({cout}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(leafrust::nn::conv2d_forward(input, weights, bias));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ConvForward)->Args({1, 4})->Args({4, 4})->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const bool input_grad = state.range(2) != 0;
  const auto input = random_tensor({32, cin, 128, 128}, 1);
  const auto weights = random_tensor({cout, cin, 3, 3}, 2);
  const auto upstream = random_tensor({32, cout, 128, 128}, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(leafrust::nn::conv2d_backward(input, weights, upstream, input_grad));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_ConvBackward)->Args({1, 4, 0})->Args({4, 4, 1})->Unit(benchmark::kMillisecond);

void BM_DenseForwardBackward(benchmark::State& state) {
  const auto input = random_tensor({32, 16384}, 1);
  const auto weights = random_tensor({16384, 16}, 2);
  const auto bias = random_tensor({16}, 3);
  const auto upstream = random_tensor({32, 16}, 4);
  for (auto _ : state) {
    auto out = leafrust::nn::dense_forward(input, weights, bias, leafrust::nn::Activation::Relu);
    benchmark::DoNotOptimize(
        leafrust::nn::dense_backward(input, weights, out, upstream, leafrust::nn::Activation::Relu));
  }
}
BENCHMARK(BM_DenseForwardBackward)->Unit(benchmark::kMillisecond);

void BM_TrainStepCompact(benchmark::State& state) {
  auto config = leafrust::ModelConfig::compact();
  auto params = leafrust::init_params(config, 1);
  const auto input = random_tensor({32, 1, 128, 128}, 5);
  leafrust::ForwardCache<float> cache;
  Tensor<float> grad({32, 2}, 0.01f);
  for (auto _ : state) {
    leafrust::forward_train(params, input, cache);
    benchmark::DoNotOptimize(leafrust::backward(params, cache, grad));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStepCompact)->Unit(benchmark::kMillisecond);

void BM_PreprocessEdgeGray(benchmark::State& state) {
  leafrust::SynthConfig synth;
  synth.count = 1;
  const auto sample = leafrust::generate_synthetic(synth).front();
  leafrust::PreprocessConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(leafrust::preprocess(sample.image, config));
}
BENCHMARK(BM_PreprocessEdgeGray)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
