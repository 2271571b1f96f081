#include "amid/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "amid/errors.hpp"
#include "amid/rng.hpp"
#include "support/test_util.hpp"

namespace amid {
namespace {

using testing::random_distribution;

TEST(Adam, DeterministicUpdates) {
  const AdamConfig cfg{0.1, 0.9, 0.999, 1e-8, 10};
  std::vector<double> a{1.0, -2.0};
  std::vector<double> b{1.0, -2.0};
  AdamOptimizer opt_a(2, cfg);
  AdamOptimizer opt_b(2, cfg);
  const std::vector<double> grad{0.3, -0.7};
  for (int i = 0; i < 10; ++i) {
    opt_a.step(grad, a);
    opt_b.step(grad, b);
  }
  EXPECT_EQ(a, b);
  // First step moves each coordinate by ~lr against the gradient sign.
  EXPECT_LT(a[0], 1.0);
  EXPECT_GT(a[1], -2.0);
}

TEST(Adam, ConfigValidation) {
  EXPECT_THROW(validate(AdamConfig{0.0, 0.9, 0.999, 1e-8, 10}), DomainError);
  EXPECT_THROW(validate(AdamConfig{0.1, 1.0, 0.999, 1e-8, 10}), DomainError);
  EXPECT_THROW(validate(AdamConfig{0.1, 0.9, 0.999, 1e-8, 0}), DomainError);
}

TEST(FitSimplex, FixedPointStaysPut) {
  SplitMix64 rng(91);
  const auto p = random_distribution(6, rng);
  const StudentLogits theta0{{p.log_probs().begin(), p.log_probs().end()}};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 300};
  for (Direction dir : {Direction::kTeacher, Direction::kStudent}) {
    const FitResult fit =
        fit_simplex(p, theta0, {-2.0, 0.3}, kl_generator(), dir, opt);
    EXPECT_FALSE(fit.diverged);
    for (const auto& rec : fit.trajectory) {
      EXPECT_NEAR(rec.loss, 0.0, 1e-12);
      EXPECT_NEAR(rec.tv, 0.0, 1e-9);
    }
  }
}

TEST(FitSimplex, ConvergesToTeacher) {
  SplitMix64 rng(92);
  const auto p = random_distribution(10, rng);
  const StudentLogits theta0{std::vector<double>(10, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 5000};
  const FitResult fit = fit_simplex(p, theta0, {-5.0, 0.1}, kl_generator(),
                                    Direction::kTeacher, opt);
  EXPECT_FALSE(fit.diverged);
  EXPECT_LT(fit.trajectory.back().tv, 1e-3);
}

TEST(FitSimplex, StudentSideConverges) {
  SplitMix64 rng(93);
  const auto p = random_distribution(8, rng);
  const StudentLogits theta0{std::vector<double>(8, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 5000};
  const FitResult fit = fit_simplex(p, theta0, {0.0, 0.5}, kl_generator(),
                                    Direction::kStudent, opt, 1e-3);
  EXPECT_FALSE(fit.diverged);
  EXPECT_LT(fit.trajectory.back().tv, 1e-3);
}

TEST(FitSimplex, LossMonotoneOverWindows) {
  SplitMix64 rng(94);
  const auto p = random_distribution(10, rng);
  const StudentLogits theta0{std::vector<double>(10, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 1500};
  // Adam may oscillate inside a window but must not give ground across one.
  for (double alpha : {-5.0, -1.0, 0.5}) {
    for (double lambda : {0.1, 0.9}) {
      const FitResult fit = fit_simplex(p, theta0, {alpha, lambda},
                                        kl_generator(), Direction::kTeacher,
                                        opt);
      ASSERT_FALSE(fit.diverged);
      const auto& traj = fit.trajectory;
      for (std::size_t t = 0; t + 50 < traj.size(); ++t) {
        EXPECT_LE(traj[t + 50].loss, traj[t].loss + 1e-6)
            << "alpha=" << alpha << " lambda=" << lambda << " window at " << t;
      }
    }
  }
}

// rkl against the alpha = 1 mixture with a teacher holding entries near the
// underflow edge: the mixture crushes those coordinates, the gradient there
// drops under Adam's resolution, and the run stalls instead of converging.
TEST(FitSimplex, RklAlphaOneStallsOnNearZeroTeacher) {
  std::vector<double> logits(10, 0.0);
  SplitMix64 rng(95);
  for (double& v : logits) v = rng.next_normal();
  logits[0] = logits[3] = logits[6] = -300.0;
  const auto p = normalize(logits);
  const StudentLogits theta0{std::vector<double>(10, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 5000};
  const FitResult fit = fit_simplex(p, theta0, {1.0, 0.1}, rkl_generator(),
                                    Direction::kTeacher, opt, 1e-3);
  const bool converged = !fit.diverged && fit.trajectory.back().tv < 1e-3;
  EXPECT_FALSE(converged);
  // The stall is a TV plateau: the student keeps its init mass on the
  // teacher's dead coordinates.
  if (!fit.diverged) {
    EXPECT_GT(fit.trajectory.back().tv, 0.05);
  }
}

TEST(FitSimplex, NonFiniteLossIsReportedNotThrown) {
  // rkl-generator loss against a hard-zero teacher: the mixture keeps the
  // student's mass alive where the teacher is zero, so the loss is +inf
  // from the very first step.
  const auto p =
      LogCategorical::from_probs(std::vector<double>{0.5, 0.5, 0.0});
  const StudentLogits theta0{std::vector<double>(3, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 50};
  const FitResult fit = fit_simplex(p, theta0, {-1.0, 0.5}, rkl_generator(),
                                    Direction::kTeacher, opt);
  EXPECT_TRUE(fit.diverged);
  EXPECT_FALSE(fit.failure.empty());
  ASSERT_EQ(fit.trajectory.size(), 1u);
  EXPECT_TRUE(std::isinf(fit.trajectory.front().loss));
}

TEST(FitSimplex, EarlyStopActivates) {
  SplitMix64 rng(96);
  const auto p = random_distribution(6, rng);
  const StudentLogits theta0{std::vector<double>(6, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 5000};
  const FitResult fit = fit_simplex(p, theta0, {-1.0, 0.1}, kl_generator(),
                                    Direction::kTeacher, opt, 1e-3);
  EXPECT_LT(fit.steps_run, 5000);
  EXPECT_LT(fit.trajectory.back().tv, 1e-3);
}

TEST(ToyFit, FixedPointStaysPut) {
  const GaussianMixture1D teacher({GaussianComponent{1.0, 0.5, 1.5}});
  const ToyStudent1D init{0.5, 0.5 * std::log(1.5)};
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 200};
  const ToyResult result =
      toy_gaussian_fit(teacher, init, {-1.0, 0.3}, GridSpec{}, opt);
  EXPECT_FALSE(result.diverged);
  EXPECT_NEAR(result.final_student.mu, 0.5, 1e-6);
  EXPECT_NEAR(result.final_student.log_sigma, 0.5 * std::log(1.5), 1e-6);
  EXPECT_NEAR(result.trajectory.back().loss, 0.0, 1e-9);
}

TEST(ToyFit, SmallAlphaSeeksAMode) {
  const GaussianMixture1D teacher({GaussianComponent{0.7, -3.0, 2.0},
                                   GaussianComponent{0.3, 3.0, 0.8}});
  const ToyStudent1D init{0.0, 0.0};
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 5000};
  const ToyResult result =
      toy_gaussian_fit(teacher, init, {-3.0, 0.3}, GridSpec{}, opt);
  EXPECT_FALSE(result.diverged);
  const double mu = result.final_student.mu;
  const bool near_mode = std::abs(mu + 3.0) < 0.5 || std::abs(mu - 3.0) < 0.5;
  EXPECT_TRUE(near_mode) << "mu = " << mu;
}

TEST(ToyFit, LargeAlphaCoversBothModes) {
  const GaussianMixture1D teacher({GaussianComponent{0.7, -3.0, 2.0},
                                   GaussianComponent{0.3, 3.0, 0.8}});
  const ToyStudent1D init{0.0, 0.0};
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 5000};
  const ToyResult covering =
      toy_gaussian_fit(teacher, init, {3.0, 0.3}, GridSpec{}, opt);
  const ToyResult seeking =
      toy_gaussian_fit(teacher, init, {-3.0, 0.3}, GridSpec{}, opt);
  EXPECT_FALSE(covering.diverged);
  EXPECT_GT(covering.final_student.mu, -3.0);
  EXPECT_LT(covering.final_student.mu, 3.0);
  EXPECT_GT(std::exp(covering.final_student.log_sigma),
            std::exp(seeking.final_student.log_sigma));
}

TEST(Generate, PointMassChainRepeats) {
  TabularLM model = uniform_tabular_lm(4, 5);
  // One-hot-ish rows: a deterministic cycle 0 -> 1 -> 2 -> 3 -> 0.
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      model.transition_logits[r * 4 + c] = (c == (r + 1) % 4) ? 50.0 : -50.0;
    }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    model.start_logits[c] = (c == 2) ? 50.0 : -50.0;
  }
  const auto batch = generate(model, 5, 20, 5);
  for (const auto& seq : batch) {
    EXPECT_EQ(seq, (std::vector<std::size_t>{2, 3, 0, 1, 2}));
  }
}

TEST(Generate, DeterministicPerSeed) {
  const TabularLM model = random_tabular_lm(6, 4, 77);
  EXPECT_EQ(generate(model, 9, 50, 4), generate(model, 9, 50, 4));
  EXPECT_NE(generate(model, 9, 50, 4), generate(model, 10, 50, 4));
}

TEST(Generate, UniformFrequencies) {
  const TabularLM model = uniform_tabular_lm(4, 5);
  std::vector<int> counts(4, 0);
  std::size_t total = 0;
  for (const auto& seq : generate(model, 123, 20000, 5)) {
    for (std::size_t token : seq) {
      counts[token]++;
      ++total;
    }
  }
  for (int c : counts) {
    EXPECT_NEAR(static_cast<double>(c) / static_cast<double>(total), 0.25,
                0.01);
  }
}

TEST(Generate, LengthValidation) {
  const TabularLM model = uniform_tabular_lm(4, 3);
  EXPECT_THROW(generate(model, 1, 5, 4), DomainError);
  EXPECT_THROW(generate(model, 1, 0, 2), DomainError);
}

TEST(SgoStrategy, ParseRoundTrip) {
  for (const char* name :
       {"fixed", "on-policy", "mixed", "adaptive-off-policy"}) {
    const auto s = SGOStrategy::parse(name);
    ASSERT_TRUE(s.has_value()) << name;
    EXPECT_EQ(s->name(), name);
  }
  EXPECT_FALSE(SGOStrategy::parse("offline").has_value());
}

TEST(Distill, TeacherAsStudentIsAFixedPoint) {
  const TabularLM teacher = random_tabular_lm(6, 4, 11);
  SGOStrategy strategy;
  strategy.kind = SGOStrategy::Kind::kOnPolicy;
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 50};
  const DistillResult result =
      distill_tabular(teacher, teacher, strategy, {-3.0, 0.1}, kl_generator(),
                      Direction::kTeacher, opt, 8, 3);
  EXPECT_FALSE(result.diverged);
  for (const auto& rec : result.trajectory) {
    EXPECT_NEAR(rec.loss, 0.0, 1e-12);
    EXPECT_NEAR(rec.mean_tv, 0.0, 1e-9);
  }
}

TEST(Distill, OnPolicyConverges) {
  const TabularLM teacher = random_tabular_lm(8, 6, 42);
  const TabularLM student0 = uniform_tabular_lm(8, 6);
  SGOStrategy strategy;
  strategy.kind = SGOStrategy::Kind::kOnPolicy;
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 2000};
  const DistillResult result =
      distill_tabular(teacher, student0, strategy, {-3.0, 0.1}, kl_generator(),
                      Direction::kTeacher, opt, 16, 7);
  EXPECT_FALSE(result.diverged);
  EXPECT_LT(result.trajectory.back().mean_tv, 0.05);
}

TEST(Distill, AllStrategiesComplete) {
  const TabularLM teacher = random_tabular_lm(6, 4, 5);
  const TabularLM student0 = uniform_tabular_lm(6, 4);
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 300};
  for (const char* name :
       {"fixed", "on-policy", "mixed", "adaptive-off-policy"}) {
    const auto strategy = SGOStrategy::parse(name);
    ASSERT_TRUE(strategy.has_value());
    const DistillResult result =
        distill_tabular(teacher, student0, *strategy, {-1.0, 0.1},
                        kl_generator(), Direction::kTeacher, opt, 8, 19);
    EXPECT_FALSE(result.diverged) << name;
    EXPECT_EQ(result.trajectory.size(), 300u) << name;
  }
}

// Paired run: dropping the assistant (lambda = 0) should not beat the
// assisted run by more than the tie margin. The values are recorded so a
// tie shows up in the test log.
TEST(Distill, StudentSideRuns) {
  const TabularLM teacher = random_tabular_lm(5, 3, 23);
  const TabularLM student0 = uniform_tabular_lm(5, 3);
  SGOStrategy strategy;
  strategy.kind = SGOStrategy::Kind::kOnPolicy;
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 400};
  const DistillResult result =
      distill_tabular(teacher, student0, strategy, {0.0, 0.5}, kl_generator(),
                      Direction::kStudent, opt, 8, 13);
  EXPECT_FALSE(result.diverged) << result.failure;
  EXPECT_LT(result.trajectory.back().mean_tv,
            result.trajectory.front().mean_tv);
}

TEST(Distill, NoAssistantComparison) {
  const TabularLM teacher = random_tabular_lm(8, 6, 42);
  const TabularLM student0 = uniform_tabular_lm(8, 6);
  SGOStrategy strategy;
  strategy.kind = SGOStrategy::Kind::kOnPolicy;
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 2000};
  const DistillResult with_assistant =
      distill_tabular(teacher, student0, strategy, {-3.0, 0.1}, kl_generator(),
                      Direction::kTeacher, opt, 16, 7);
  const DistillResult without =
      distill_tabular(teacher, student0, strategy, {-3.0, 0.0}, kl_generator(),
                      Direction::kTeacher, opt, 16, 7);
  ASSERT_FALSE(with_assistant.diverged);
  ASSERT_FALSE(without.diverged);
  const double tv_with = with_assistant.trajectory.back().mean_tv;
  const double tv_without = without.trajectory.back().mean_tv;
  RecordProperty("final_tv_lambda_0.1", std::to_string(tv_with));
  RecordProperty("final_tv_lambda_0", std::to_string(tv_without));
  EXPECT_GE(tv_without, tv_with - 0.01);
}

TEST(Distill, DeterministicTrajectories) {
  const TabularLM teacher = random_tabular_lm(5, 3, 2);
  const TabularLM student0 = uniform_tabular_lm(5, 3);
  SGOStrategy strategy;
  strategy.kind = SGOStrategy::Kind::kMixed;
  strategy.mix_prob = 0.5;
  const AdamConfig opt{5e-2, 0.9, 0.999, 1e-8, 120};
  const auto a = distill_tabular(teacher, student0, strategy, {-1.0, 0.2},
                                 kl_generator(), Direction::kTeacher, opt, 4,
                                 99);
  const auto b = distill_tabular(teacher, student0, strategy, {-1.0, 0.2},
                                 kl_generator(), Direction::kTeacher, opt, 4,
                                 99);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory[i].loss, b.trajectory[i].loss);
    EXPECT_EQ(a.trajectory[i].mean_tv, b.trajectory[i].mean_tv);
  }
  EXPECT_EQ(a.student.transition_logits, b.student.transition_logits);
}

TEST(Sweep, SingleCellMatchesDirectRun) {
  SweepSpec spec;
  spec.divergences = {"kl"};
  spec.directions = {Direction::kTeacher};
  spec.alphas = {-1.0};
  spec.lambdas = {0.1};
  spec.teachers_per_cell = 1;
  spec.opt.steps = 800;
  spec.seed = 31;
  spec.parallel = false;
  const auto cells = run_fit_sweep(spec);
  ASSERT_EQ(cells.size(), 1u);

  // Rebuild the same teacher and run fit_simplex directly.
  SplitMix64 rng(derive_seed(31, 1000));
  std::vector<double> logits(10);
  for (double& v : logits) {
    const double z = rng.next_normal();
    const double g = 0.5 * z * z;
    v = g > 0.0 ? std::log(g) : -745.0;
  }
  const auto teacher = normalize(logits);
  const FitResult fit = fit_simplex(
      teacher, StudentLogits{std::vector<double>(10, 0.0)}, {-1.0, 0.1},
      kl_generator(), Direction::kTeacher, spec.opt, spec.tv_threshold);
  EXPECT_EQ(cells[0].final_loss, fit.trajectory.back().loss);
  EXPECT_EQ(cells[0].final_tv, fit.trajectory.back().tv);
}

// At alpha = -1 with the KL generator, the fit objective is the skew KL by
// construction; check the identity along a trajectory.
TEST(Sweep, LossMatchesSkewKlIdentity) {
  SplitMix64 rng(97);
  const auto p = random_distribution(10, rng);
  const StudentLogits theta0{std::vector<double>(10, 0.0)};
  const AdamConfig opt{0.1, 0.9, 0.999, 1e-8, 500};
  const FitResult fit = fit_simplex(p, theta0, {-1.0, 0.1}, kl_generator(),
                                    Direction::kTeacher, opt);
  const auto q_final = normalize(fit.final_theta);
  EXPECT_NEAR(fit.trajectory.back().loss, skew_kl(p, q_final, 0.1).value,
              1e-12);
}

TEST(Sweep, ParallelAndSequentialAgree) {
  SweepSpec spec;
  spec.divergences = {"kl"};
  spec.directions = {Direction::kTeacher};
  spec.alphas = {-1.0, 0.0};
  spec.lambdas = {0.1, 0.5};
  spec.teachers_per_cell = 2;
  spec.opt.steps = 300;
  spec.seed = 12;
  spec.parallel = false;
  const auto sequential = run_fit_sweep(spec);
  spec.parallel = true;
  const auto parallel = run_fit_sweep(spec);
  ASSERT_EQ(sequential.size(), parallel.size());
  for (std::size_t i = 0; i < sequential.size(); ++i) {
    EXPECT_EQ(sequential[i].final_loss, parallel[i].final_loss);
    EXPECT_EQ(sequential[i].final_tv, parallel[i].final_tv);
    EXPECT_EQ(sequential[i].stable, parallel[i].stable);
  }
}

TEST(Sweep, RklAlphaOneCellFlaggedUnstable) {
  SweepSpec spec;
  spec.divergences = {"rkl"};
  spec.directions = {Direction::kTeacher};
  spec.alphas = {1.0};
  spec.lambdas = {0.1};
  spec.teachers_per_cell = 2;
  spec.opt.steps = 1500;
  spec.seed = 8;
  const auto cells = run_fit_sweep(spec);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_FALSE(cells[0].stable);
  EXPECT_EQ(cells[0].steps_to_threshold, -1);
}

}  // namespace
}  // namespace amid
