#include <benchmark/benchmark.h>

#include <vector>

#include "sdd/analyze.hpp"
#include "sdd/blas.hpp"
#include "sdd/dataset.hpp"
#include "sdd/mlp.hpp"
#include "sdd/prune.hpp"
#include "sdd/rng.hpp"
#include "sdd/tensor.hpp"
#include "sdd/train.hpp"

using namespace sdd;

namespace {

Tensor random_batch(int rows, int cols, uint64_t seed) {
  Tensor t = Tensor::zeros({rows, cols});
  Rng rng(seed);
  for (auto& v : t.data) v = rng.next_unit();
  return t;
}

void bm_forward_logits(benchmark::State& state) {
  int batch = static_cast<int>(state.range(0));
  MlpModel model = build_mlp(784, {300, 100}, 10, 1);
  Tensor x = random_batch(batch, 784, 2);
  for (auto _ : state) {
    Tensor logits = forward_logits(model, x);
    benchmark::DoNotOptimize(logits.data.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

void bm_forward_backward(benchmark::State& state) {
  int batch = static_cast<int>(state.range(0));
  MlpModel model = build_mlp(784, {300, 100}, 10, 1);
  Tensor x = random_batch(batch, 784, 2);
  std::vector<int> targets;
  for (int i = 0; i < batch; ++i) targets.push_back(i % 10);
  for (auto _ : state) {
    model.zero_grad();
    Tape tape;
    Value loss =
        tape.softmax_cross_entropy(forward(model, tape, tape.constant(x)),
                                   targets);
    tape.backward(loss);
    benchmark::DoNotOptimize(model.layers[0].weight.grad.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

void bm_train_epoch(benchmark::State& state) {
  LabeledDataset ds = synth_blobs(10, 100, 16, 0.15, 3);
  OptimizerPolicy policy;
  policy.epochs = 1;
  policy.batch_size = 128;
  policy.milestones = {};
  MlpModel model = build_mlp(16, {64, 32}, 10, 4);
  for (auto _ : state) {
    train(model, ds, nullptr, nullptr, policy, {}, nullptr, 5);
    benchmark::DoNotOptimize(model.layers[0].weight.data.data());
  }
  state.SetItemsProcessed(state.iterations() * ds.size());
}

void bm_magnitude_prune(benchmark::State& state) {
  for (auto _ : state) {
    state.PauseTiming();
    MlpModel model = build_mlp(784, {300, 100}, 10, 6);
    state.ResumeTiming();
    benchmark::DoNotOptimize(magnitude_prune(model, 0.2));
  }
  state.SetItemsProcessed(state.iterations() * 266200);
}

void bm_detect_sdd(benchmark::State& state) {
  SparsityCurve curve;
  Rng rng(9);
  double keep = 1.0;
  for (int i = 0; i < 64; ++i) {
    curve.points.push_back(
        {1.0 - keep, 0.9, 0.5 + 0.3 * rng.next_unit(), 0.5, 100 * (i + 1)});
    keep *= 0.9;
  }
  for (auto _ : state) {
    SddVerdict v = detect_sdd(curve, 0.02);
    benchmark::DoNotOptimize(v.classification);
  }
}

BENCHMARK(bm_forward_logits)->Arg(1)->Arg(128);
BENCHMARK(bm_forward_backward)->Arg(128);
BENCHMARK(bm_train_epoch)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_magnitude_prune)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_detect_sdd);

}  // namespace

int main(int argc, char** argv) {
  init_blas_runtime(argv);
  benchmark::Initialize(&argc, argv);
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
