#include "amid/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "amid/divergence.hpp"
#include "amid/errors.hpp"
#include "amid/fmean.hpp"

namespace amid {

void validate(const AlphaLambda& params) {
  if (!std::isfinite(params.alpha)) {
    throw DomainError("alpha must be finite");
  }
  if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
    throw DomainError("lambda must lie in [0, 1]");
  }
}

namespace {

// Unnormalized log mixture value at one support point. Hard zeros short
// circuit the log-domain formula so the support rules hold exactly instead
// of surfacing as NaN from 0 * inf products.
double log_mixture_entry(double lp, double lq, double alpha, double lambda) {
  if (lambda == 1.0) return lp;
  if (lambda == 0.0) return lq;
  const bool zp = (lp == kNegInf);
  const bool zq = (lq == kNegInf);
  if (zp && zq) return kNegInf;

  if (is_alpha_one(alpha)) {
    if (zp || zq) return kNegInf;  // intersection support
    return lambda * lp + (1.0 - lambda) * lq;
  }

  const double c = alpha_exponent(alpha);
  if (zp || zq) {
    if (c < 0.0) return kNegInf;  // alpha > 1: intersection support
    // alpha < 1: the surviving side carries the whole mean,
    // r~ = (weight * u^c)^(1/c) = weight^(1/c) * u.
    return zp ? std::log1p(-lambda) / c + lq : std::log(lambda) / c + lp;
  }

  const double a = std::log(lambda) + c * lp;
  const double b = std::log1p(-lambda) + c * lq;
  const double m = std::max(a, b);
  return (m + std::log(std::exp(a - m) + std::exp(b - m))) / c;
}

}  // namespace

MixtureResult alpha_mixture(const LogCategorical& p, const LogCategorical& q,
                            const AlphaLambda& params) {
  validate(params);
  if (p.size() != q.size()) throw LengthMismatch("alpha_mixture: sizes differ");

  std::vector<double> log_unnorm(p.size());
  bool any_support = false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    log_unnorm[k] = log_mixture_entry(p.log_prob(k), q.log_prob(k),
                                      params.alpha, params.lambda);
    any_support |= (log_unnorm[k] != kNegInf);
  }
  if (!any_support) {
    throw EmptySupport("alpha_mixture: all mixture entries are zero");
  }
  const double log_z = log_sum_exp(log_unnorm);
  return MixtureResult{normalize(log_unnorm), log_z};
}

GridMixtureResult alpha_mixture_grid(const Grid1D& p, const Grid1D& q,
                                     const AlphaLambda& params) {
  validate(params);
  if (!p.same_grid(q)) throw GridMismatch("alpha_mixture_grid: grids differ");

  constexpr double kHardZero = 1e-300;
  const std::size_t n = p.size();
  std::vector<double> log_unnorm(n);
  bool any_support = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double lp = p.density(i) < kHardZero ? kNegInf : std::log(p.density(i));
    const double lq = q.density(i) < kHardZero ? kNegInf : std::log(q.density(i));
    log_unnorm[i] = log_mixture_entry(lp, lq, params.alpha, params.lambda);
    any_support |= (log_unnorm[i] != kNegInf);
  }
  if (!any_support) {
    throw EmptySupport("alpha_mixture_grid: all mixture values are zero");
  }

  // log of the trapezoid integral of r~, via logsumexp over weighted samples.
  const double log_dx = std::log(p.dx());
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i + 1 == n) ? std::log(0.5) : 0.0;
    terms[i] = log_unnorm[i] == kNegInf ? kNegInf : log_unnorm[i] + log_dx + w;
  }
  const double log_z = log_sum_exp(terms);

  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) {
    density[i] =
        log_unnorm[i] == kNegInf ? 0.0 : std::exp(log_unnorm[i] - log_z);
  }
  return GridMixtureResult{
      Grid1D::from_density(p.x_min(), p.x_max(), std::move(density)), log_z};
}

LogCategorical taid_logit_mixture(std::span<const double> teacher_logits,
                                  std::span<const double> student_logits,
                                  double lambda) {
  if (teacher_logits.size() != student_logits.size()) {
    throw LengthMismatch("taid_logit_mixture: sizes differ");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("taid_logit_mixture: lambda must lie in [0, 1]");
  }
  std::vector<double> mixed(teacher_logits.size());
  for (std::size_t k = 0; k < mixed.size(); ++k) {
    if (!std::isfinite(teacher_logits[k]) || !std::isfinite(student_logits[k])) {
      throw DomainError("taid_logit_mixture: logits must be finite");
    }
    mixed[k] = lambda * teacher_logits[k] + (1.0 - lambda) * student_logits[k];
  }
  return normalize(mixed);
}

double weighted_alpha_div_objective(const LogCategorical& r_cand,
                                    const LogCategorical& p,
                                    const LogCategorical& q,
                                    const AlphaLambda& params) {
  validate(params);
  // Zero-weight terms are skipped so an infinite divergence on the unused
  // side cannot poison the objective through 0 * inf.
  double objective = 0.0;
  if (params.lambda > 0.0) {
    objective += params.lambda * alpha_div(p, r_cand, params.alpha).value;
  }
  if (params.lambda < 1.0) {
    objective += (1.0 - params.lambda) * alpha_div(q, r_cand, params.alpha).value;
  }
  return objective;
}

}  // namespace amid
