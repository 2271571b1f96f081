#pragma once
// The assistant-mixture distillation loss over a logit-parameterized student
// and its analytic gradient, with a central-difference oracle.
//
// For the teacher-side loss D_f(p || r) with r the alpha-mixture of p and
// q = softmax(theta), the gradient over theta is
//
//   E_r[ w * (psi_f(p/r) - E_r[psi_f(p/r)]) * grad_theta log q ],
//
// where w(k) = (1-lambda) q^c / (lambda p^c + (1-lambda) q^c), c = (1-alpha)/2,
// psi_f(v) = f(v) - v f'(v), and grad log q is the exact softmax Jacobian
// (no sampling; expectations are exact sums over the vocabulary).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "amid/divergence.hpp"
#include "amid/mixture.hpp"
#include "amid/simplex.hpp"

namespace amid {

// Unnormalized student log weights; q = softmax(theta). Entries must be
// finite, so the student always has full support.
struct StudentLogits {
  std::vector<double> theta;
};

enum class Direction { kTeacher, kStudent };

// Teacher side: D_f(p || r); student side: D_f(q || r). Support violations
// come back as flagged infinities, never exceptions.
DivValue amid_loss(const LogCategorical& p, const StudentLogits& student,
                   const AlphaLambda& params, const FGenerator& gen,
                   Direction direction);

// Entrywise mixture weight w in [0, 1], computed in log domain. lambda = 0
// gives all ones and lambda = 1 all zeros. Indices where both inputs are
// hard zeros are indeterminate; at alpha = 1 so are one-sided hard zeros,
// because the limits from alpha < 1 and alpha > 1 disagree there.
std::vector<double> mixture_weight_w(const LogCategorical& p,
                                     const LogCategorical& q,
                                     const AlphaLambda& params);

// Analytic teacher-side gradient over theta (the formula above).
std::vector<double> amid_grad_analytic(const LogCategorical& p,
                                       const StudentLogits& student,
                                       const AlphaLambda& params,
                                       const FGenerator& gen);

// Central differences (loss(theta + h e_j) - loss(theta - h e_j)) / (2h).
// Throws NonFiniteLoss if any stencil evaluation is not finite.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& loss,
    std::span<const double> theta, double h);

struct GradReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_abs_err{};
  // max_j |a_j - n_j| / (1e-8 + max-norm over both vectors); the 1e-8 floor
  // avoids spurious failures near optima.
  double max_rel_err{};
};

// Runs both gradient paths (analytic vs central differences at h = 1e-6)
// and reports the discrepancies. Propagates IndeterminateWeight and
// NonFiniteLoss from the paths.
GradReport grad_check(const LogCategorical& p, const StudentLogits& student,
                      const AlphaLambda& params, const FGenerator& gen);

// ---------------------------------------------------------------------------
// Seeded verification suite: 100 deterministic instances cycling
// K in {3, 17, 64}, alpha in {-5, -1, 0, 0.5, 1}, lambda in {0.05, 0.3, 0.9},
// with designated p = q, lambda = 1 and hard-zero instances mixed in.
// All instances use the KL generator.

enum class GradCaseStatus {
  kChecked,   // compared against the relative-error bound
  kZeroCase,  // p = q or lambda = 1; both gradients must be ~0
  kTagged,    // indeterminate or non-finite; reported, not compared
};

struct GradCaseResult {
  std::size_t index{};
  std::size_t k{};
  double alpha{};
  double lambda{};
  bool hard_zeros{};
  bool p_equals_q{};
  bool lambda_one{};
  GradCaseStatus status{};
  std::string tag_reason;
  double max_abs_err{};
  double max_rel_err{};
  double analytic_max_norm{};
  double numeric_max_norm{};
  bool passed{};
};

struct GradSuiteResult {
  std::vector<GradCaseResult> cases;
  bool all_passed{};
};

GradSuiteResult run_grad_suite(std::uint64_t seed, double rel_tol = 1e-5,
                               double zero_tol = 1e-9);

}  // namespace amid
