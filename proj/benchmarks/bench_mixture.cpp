#include <benchmark/benchmark.h>

#include <vector>

#include "amid/mixture.hpp"
#include "amid/rng.hpp"
#include "amid/simplex.hpp"

namespace {

amid::LogCategorical random_dist(std::size_t k, std::uint64_t seed) {
  amid::SplitMix64 rng(seed);
  std::vector<double> logits(k);
  for (double& v : logits) v = rng.next_normal();
  return amid::normalize(logits);
}

void BM_AlphaMixture(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 1);
  const auto q = random_dist(k, 2);
  const amid::AlphaLambda params{-3.0, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::alpha_mixture(p, q, params));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AlphaMixture)->Range(8, 8192)->Complexity();

void BM_AlphaMixtureGeometric(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 3);
  const auto q = random_dist(k, 4);
  const amid::AlphaLambda params{1.0, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::alpha_mixture(p, q, params));
  }
}
BENCHMARK(BM_AlphaMixtureGeometric)->Range(8, 8192);

void BM_GridMixture(benchmark::State& state) {
  const amid::GaussianMixture1D teacher({amid::GaussianComponent{0.7, -3.0, 2.0},
                                         amid::GaussianComponent{0.3, 3.0, 0.8}});
  const amid::GaussianMixture1D student({amid::GaussianComponent{1.0, 0.0, 1.0}});
  const auto p = amid::discretize(teacher, -10.0, 10.0, 2048);
  const auto q = amid::discretize(student, -10.0, 10.0, 2048);
  const amid::AlphaLambda params{3.0, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::alpha_mixture_grid(p, q, params));
  }
}
BENCHMARK(BM_GridMixture);

}  // namespace
