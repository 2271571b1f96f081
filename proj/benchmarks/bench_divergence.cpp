#include <benchmark/benchmark.h>

#include <vector>

#include "amid/divergence.hpp"
#include "amid/rng.hpp"
#include "amid/simplex.hpp"

namespace {

amid::LogCategorical random_dist(std::size_t k, std::uint64_t seed) {
  amid::SplitMix64 rng(seed);
  std::vector<double> logits(k);
  for (double& v : logits) v = rng.next_normal();
  return amid::normalize(logits);
}

void BM_Kl(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 5);
  const auto q = random_dist(k, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::kl(p, q));
  }
}
BENCHMARK(BM_Kl)->Range(8, 8192);

void BM_AlphaDiv(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 7);
  const auto q = random_dist(k, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::alpha_div(p, q, -2.5));
  }
}
BENCHMARK(BM_AlphaDiv)->Range(8, 8192);

void BM_AbDiv(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 9);
  const auto q = random_dist(k, 10);
  const amid::ABParams params{0.2, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::ab_div(p, q, params));
  }
}
BENCHMARK(BM_AbDiv)->Range(8, 1024);

}  // namespace
