#pragma once
// The homogeneous generalized f-mean family.
//
// f_alpha(u) = u^((1-alpha)/2) for alpha != 1 and log(u) at alpha = 1 is the
// unique generator class whose f-mean is scale free. alpha = -1, 1, 3 give
// the weighted arithmetic, geometric and harmonic means; alpha -> -inf/+inf
// approach max/min.

#include <span>

namespace amid {

// Branch threshold around alpha = 1. Within it the geometric (log) branch is
// used: the exponent 2/(1-alpha) amplifies rounding error, and the crossover
// error is O(|1-alpha| * Var(log u)), below 1e-8 at this width.
inline constexpr double kAlphaOneTol = 1e-6;

inline bool is_alpha_one(double alpha) {
  return alpha >= 1.0 - kAlphaOneTol && alpha <= 1.0 + kAlphaOneTol;
}

// Exponent of the power branch.
inline double alpha_exponent(double alpha) { return 0.5 * (1.0 - alpha); }

double f_alpha(double u, double alpha);

// Inverse of f_alpha(., alpha) on its range; exp at alpha = 1, v^(2/(1-alpha))
// otherwise (requires v > 0 there).
double f_alpha_inv(double v, double alpha);

// f_alpha_inv(sum_i w_i f_alpha(u_i)), evaluated in log domain so large
// |alpha| and tiny inputs do not overflow. Weights must be non-negative and
// sum to 1 within 1e-12; inputs must be positive.
double generalized_f_mean(std::span<const double> weights,
                          std::span<const double> inputs, double alpha);

}  // namespace amid
