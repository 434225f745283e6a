#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "spml/eval.hpp"
#include "spml/kestim.hpp"
#include "spml/losses.hpp"
#include "spml/model.hpp"
#include "spml/role.hpp"

using namespace spml;

namespace {

struct Batch {
  MatrixD f;
  ObservedLabels z;
};

Batch make_batch(std::size_t n, std::size_t L) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Batch b{MatrixD(n, L), ObservedLabels(n, L, Obs::Unobserved)};
  for (auto& v : b.f.values()) v = u(rng);
  for (std::size_t r = 0; r < n; ++r) b.z(r, r % L) = Obs::Pos;
  return b;
}

void BM_WeightedBce(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)), 20);
  const auto c = build_coefficients(BceMode::AN, b.z, nullptr);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_bce(b.f, c));
}
BENCHMARK(BM_WeightedBce)->Arg(16)->Arg(256);

void BM_PairwiseRanking(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(loss_pairwise_ranking(b.f, b.z));
}
BENCHMARK(BM_PairwiseRanking)->Arg(16)->Arg(256);

void BM_Role(benchmark::State& state) {
  const auto b = make_batch(static_cast<std::size_t>(state.range(0)), 20);
  const auto e = make_batch(static_cast<std::size_t>(state.range(0)), 20).f;
  for (auto _ : state) benchmark::DoNotOptimize(loss_role(b.f, e, b.z, 2.0, 1.0));
}
BENCHMARK(BM_Role)->Arg(16)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  const std::size_t n = 16, d = static_cast<std::size_t>(state.range(0)), L = 20;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  FeatureMatrix x(n, d);
  for (auto& v : x.values()) v = static_cast<float>(normal(rng));
  const auto model = init_linear_model(d, L, 3);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const MatrixD grad(n, L, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, x, idx));
    benchmark::DoNotOptimize(backward(model, x, idx, grad));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(2048);

void BM_AveragePrecision(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<double> s(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    y[i] = i % 7 == 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(average_precision(s, y));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

void BM_KInterval(benchmark::State& state) {
  FullLabels y(5000, 20, 0);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t i = 0; i <= r % 3; ++i) y(r, i) = 1;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(k_confidence_interval(y, static_cast<std::size_t>(state.range(0)), 10000, 0.9, 1));
  }
}
BENCHMARK(BM_KInterval)->Arg(5)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
