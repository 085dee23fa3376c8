// Microbenchmarks for the hot paths: neighbor queries, density scans,
// clustering, scoring and one training epoch.

#include <benchmark/benchmark.h>

#include <vector>

#include "lanid/kmeans.hpp"
#include "lanid/metrics.hpp"
#include "lanid/pairs.hpp"
#include "lanid/rng.hpp"
#include "lanid/trainer.hpp"

using namespace lanid;

namespace {

EmbeddingMatrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
  EmbeddingMatrix m(n, dim);
  auto rng = make_rng(seed);
  for (double& v : m.data()) v = gaussian(rng);
  return m;
}

std::vector<int> random_labels(std::size_t n, int k, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::vector<int> out(n);
  for (auto& v : out) v = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(k)));
  return out;
}

void BM_knn_query(benchmark::State& state) {
  auto matrix = random_matrix(static_cast<std::size_t>(state.range(0)), 64, 1);
  int query = static_cast<int>(matrix.size() / 2);
  for (auto _ : state) benchmark::DoNotOptimize(knn_query(matrix, query, 50));
}
BENCHMARK(BM_knn_query)->Arg(512)->Arg(2048);

void BM_dbscan(benchmark::State& state) {
  auto matrix = random_matrix(static_cast<std::size_t>(state.range(0)), 16, 2);
  double eps = auto_eps(matrix, 4);
  for (auto _ : state) benchmark::DoNotOptimize(dbscan(matrix, eps, 4));
}
BENCHMARK(BM_dbscan)->Arg(256)->Arg(1024);

void BM_kmeans(benchmark::State& state) {
  auto matrix = random_matrix(static_cast<std::size_t>(state.range(0)), 32, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(matrix, 10, 7));
}
BENCHMARK(BM_kmeans)->Arg(512)->Arg(2048);

void BM_scoring(benchmark::State& state) {
  auto truth = random_labels(2000, 20, 4);
  auto pred = random_labels(2000, 20, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmi(truth, pred));
    benchmark::DoNotOptimize(ari(truth, pred));
    benchmark::DoNotOptimize(hungarian_acc(truth, pred));
  }
}
BENCHMARK(BM_scoring);

void BM_adapter_transform(benchmark::State& state) {
  auto matrix = random_matrix(2048, 64, 6);
  Adapter adapter(64, 64, 11);
  auto rng = make_rng(12);
  for (double& p : adapter.params()) p += 0.1 * gaussian(rng);
  for (auto _ : state) benchmark::DoNotOptimize(adapter.transform(matrix));
}
BENCHMARK(BM_adapter_transform);

void BM_train_epoch(benchmark::State& state) {
  auto base = random_matrix(512, 32, 8);
  Adapter adapter(32, 64, 13);
  auto rng = make_rng(14);
  std::vector<Triplet> triplets(500);
  for (auto& t : triplets) {
    auto ids = sample_without_replacement(rng, base.size(), 3);
    t = {static_cast<int>(ids[0]), static_cast<int>(ids[1]), static_cast<int>(ids[2])};
  }
  TrainConfig config;
  config.margin = 1.0;
  config.learning_rate = 1e-3;
  config.batch_size = 64;
  std::size_t epoch = 0;
  for (auto _ : state) benchmark::DoNotOptimize(train_epoch(adapter, triplets, base, config, epoch++));
}
BENCHMARK(BM_train_epoch);

}  // namespace

BENCHMARK_MAIN();
