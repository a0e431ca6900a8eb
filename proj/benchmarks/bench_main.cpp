#include <random>

#include <benchmark/benchmark.h>

#include "embeval/classifier.hpp"
#include "embeval/metrics.hpp"
#include "embeval/optim.hpp"
#include "embeval/retrieval.hpp"
#include "support/toys.hpp"

using namespace embeval;

namespace {

void BM_AffineSoftmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(1);
  const Matrix x = toys::random_matrix(n, 300, gen);
  const Matrix w = toys::random_matrix(5, 300, gen, 0.05);
  const std::vector<double> b(5, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(affine_softmax(w, b, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AffineSoftmax)->Arg(64)->Arg(1024);

void BM_AdamStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(2);
  auto params = toys::normals(n, gen);
  const auto grads = toys::normals(n, gen);
  AdamState adam(n);
  for (auto _ : state) {
    adam_step(adam, params, grads);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AdamStep)->Arg(1 << 10)->Arg(1 << 16);

// One evaluation epoch of logistic regression on 2000 x 300.
void BM_TrainEpoch(benchmark::State& state) {
  const auto data = toys::separable(2000, 300, 3);
  const Split train_set = toys::as_split(data);
  ClassifierConfig cfg = ClassifierConfig::default_profile();
  cfg.max_epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(cfg, 1e-4, train_set, train_set, 7));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_Spearman(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 gen(4);
  const auto x = toys::normals(n, gen), y = toys::normals(n, gen);
  for (auto _ : state) benchmark::DoNotOptimize(spearman(x, y));
}
BENCHMARK(BM_Spearman)->Arg(1000)->Arg(10000);

void BM_RetrievalEval(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto set = toys::aligned_pairs(n, 5, 64, 0.5, 5);
  std::mt19937_64 gen(6);
  const RetrievalModel m{toys::random_matrix(32, 64, gen), toys::random_matrix(32, 64, gen), 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_retrieval(m, set));
}
BENCHMARK(BM_RetrievalEval)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
