// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to the
// number of cores to compare.

#include <benchmark/benchmark.h>

#include <random>

#include "hli/binn.hpp"
#include "hli/features.hpp"
#include "hli/kernels.hpp"
#include "hli/metrics.hpp"

namespace {

using hli::Exec;

hli::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  hli::Matrix m(r, c);
  for (double& v : m.values()) v = g(rng);
  return m;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) == 0 ? Exec::kSerial : Exec::kParallel; }

void BM_GemmNt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  hli::Matrix c(n, n);
  for (auto _ : state) {
    hli::kernels::gemm_nt(exec_of(state), a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_GemmNt)->ArgsProduct({{0, 1}, {128, 512}})->ArgNames({"omp", "n"});

void BM_GemmTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto a = random_matrix(n, n, 3), b = random_matrix(n, n, 4);
  hli::Matrix c(n, n);
  for (auto _ : state) {
    hli::kernels::gemm_tn(exec_of(state), a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_GemmTn)->ArgsProduct({{0, 1}, {128, 512}})->ArgNames({"omp", "n"});

void BM_BinnBatchGrad(benchmark::State& state) {
  const std::vector<std::size_t> sizes{25, 200};
  const std::size_t dim = 64, batch = 256;
  const auto params = hli::init_params(sizes, dim, 1);
  const auto inputs = random_matrix(batch, dim, 5);
  std::vector<hli::LayerLabels> labels(batch, hli::LayerLabels{{1, 7}, {3, 120}});
  for (auto _ : state) {
    auto r = hli::batch_loss_grad(params, inputs, labels, exec_of(state));
    benchmark::DoNotOptimize(r.loss);
  }
}
BENCHMARK(BM_BinnBatchGrad)->ArgsProduct({{0, 1}, {256}})->ArgNames({"omp", "batch"});

void BM_PcaWhitening(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto m = random_matrix(n, 64, 6);
  std::vector<hli::VideoFeature> data;
  for (std::size_t i = 0; i < n; ++i) data.emplace_back(m.row(i).begin(), m.row(i).end());
  for (auto _ : state) {
    auto s = hli::fit_pca_whitening(data, hli::kDefaultNormEpsilon, true, exec_of(state));
    benchmark::DoNotOptimize(s.transform.data());
  }
}
BENCHMARK(BM_PcaWhitening)->ArgsProduct({{0, 1}, {4096}})->ArgNames({"omp", "rows"});

void BM_MeanAp(benchmark::State& state) {
  const std::size_t videos = 2000, classes = 200;
  hli::PredictionSet p{random_matrix(videos, classes, 7), {}};
  for (std::size_t v = 0; v < videos; ++v) p.truth.push_back({static_cast<hli::LabelIndex>(v % classes)});
  for (auto _ : state) {
    auto r = hli::mean_average_precision(p, exec_of(state));
    benchmark::DoNotOptimize(r.mean);
  }
}
BENCHMARK(BM_MeanAp)->ArgsProduct({{0, 1}, {2000}})->ArgNames({"omp", "videos"});

}  // namespace

BENCHMARK_MAIN();
