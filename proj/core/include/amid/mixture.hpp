#pragma once
// The alpha-mixture assistant distribution: an f_alpha-mean interpolation
// between two distributions p and q, with interpolation weight lambda on p.
//
// Entrywise, for alpha != 1,
//   log r~(k) = (2/(1-alpha)) * log(lambda*p(k)^c + (1-lambda)*q(k)^c),
//   c = (1-alpha)/2,
// and at alpha = 1, log r~(k) = lambda*log p(k) + (1-lambda)*log q(k).
// r is r~ normalized; log_z is the log of the normalizer.
//
// Support rules are exact: for alpha < 1 the support of r is the union of
// the input supports, for alpha >= 1 the intersection. lambda = 1 returns p
// and lambda = 0 returns q regardless of alpha.

#include <span>

#include "amid/simplex.hpp"

namespace amid {

struct AlphaLambda {
  double alpha{};
  double lambda{};
};

// alpha must be finite, lambda in [0, 1].
void validate(const AlphaLambda& params);

struct MixtureResult {
  LogCategorical r;
  double log_z;
};

struct GridMixtureResult {
  Grid1D r;
  double log_z;
};

MixtureResult alpha_mixture(const LogCategorical& p, const LogCategorical& q,
                            const AlphaLambda& params);

// Same entrywise formula on density values; the normalizer is a trapezoid
// quadrature. Density values below 1e-300 are treated as hard zeros.
GridMixtureResult alpha_mixture_grid(const Grid1D& p, const Grid1D& q,
                                     const AlphaLambda& params);

// softmax(lambda * teacher_logits + (1-lambda) * student_logits); equals the
// alpha = 1 mixture of the two softmax distributions.
LogCategorical taid_logit_mixture(std::span<const double> teacher_logits,
                                  std::span<const double> student_logits,
                                  double lambda);

// lambda * D_alpha(p || r_cand) + (1-lambda) * D_alpha(q || r_cand). The
// closed-form mixture is the unique minimizer of this objective over r_cand.
double weighted_alpha_div_objective(const LogCategorical& r_cand,
                                    const LogCategorical& p,
                                    const LogCategorical& q,
                                    const AlphaLambda& params);

}  // namespace amid
