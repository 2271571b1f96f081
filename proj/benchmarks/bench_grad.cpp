#include <benchmark/benchmark.h>

#include <vector>

#include "amid/grad.hpp"
#include "amid/rng.hpp"

namespace {

amid::LogCategorical random_dist(std::size_t k, std::uint64_t seed) {
  amid::SplitMix64 rng(seed);
  std::vector<double> logits(k);
  for (double& v : logits) v = rng.next_normal();
  return amid::normalize(logits);
}

amid::StudentLogits random_logits(std::size_t k, std::uint64_t seed) {
  amid::SplitMix64 rng(seed);
  amid::StudentLogits s;
  s.theta.resize(k);
  for (double& v : s.theta) v = rng.next_normal();
  return s;
}

void BM_AnalyticGrad(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 11);
  const auto student = random_logits(k, 12);
  const amid::AlphaLambda params{-2.5, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        amid::amid_grad_analytic(p, student, params, amid::kl_generator()));
  }
}
BENCHMARK(BM_AnalyticGrad)->Range(8, 1024);

void BM_FiniteDiffGrad(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(k, 13);
  const auto student = random_logits(k, 14);
  const amid::AlphaLambda params{-2.5, 0.3};
  const auto loss = [&](std::span<const double> t) {
    return amid::amid_loss(p, amid::StudentLogits{{t.begin(), t.end()}},
                           params, amid::kl_generator(),
                           amid::Direction::kTeacher)
        .value;
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(amid::finite_diff_grad(loss, student.theta, 1e-6));
  }
}
BENCHMARK(BM_FiniteDiffGrad)->Range(8, 256);

}  // namespace
