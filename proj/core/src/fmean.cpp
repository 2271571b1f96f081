#include "amid/fmean.hpp"

#include <cmath>
#include <vector>

#include "amid/errors.hpp"
#include "amid/simplex.hpp"

namespace amid {

double f_alpha(double u, double alpha) {
  if (!(u > 0.0)) throw DomainError("f_alpha: u must be positive");
  if (!std::isfinite(alpha)) throw DomainError("f_alpha: alpha must be finite");
  if (is_alpha_one(alpha)) return std::log(u);
  return std::exp(alpha_exponent(alpha) * std::log(u));
}

double f_alpha_inv(double v, double alpha) {
  if (!std::isfinite(alpha)) {
    throw DomainError("f_alpha_inv: alpha must be finite");
  }
  if (is_alpha_one(alpha)) {
    if (std::isnan(v)) throw DomainError("f_alpha_inv: v is NaN");
    return std::exp(v);
  }
  if (!(v > 0.0)) {
    throw DomainError("f_alpha_inv: v outside range of f_alpha");
  }
  return std::exp(std::log(v) / alpha_exponent(alpha));
}

double generalized_f_mean(std::span<const double> weights,
                          std::span<const double> inputs, double alpha) {
  if (weights.size() != inputs.size()) {
    throw LengthMismatch("generalized_f_mean: sizes differ");
  }
  if (weights.empty()) throw DomainError("generalized_f_mean: empty input");
  if (!std::isfinite(alpha)) {
    throw DomainError("generalized_f_mean: alpha must be finite");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (std::isnan(w) || w < 0.0) {
      throw DomainError("generalized_f_mean: weights must be non-negative");
    }
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw DomainError("generalized_f_mean: weights must sum to 1");
  }
  for (double u : inputs) {
    if (!(u > 0.0) || !std::isfinite(u)) {
      throw DomainError("generalized_f_mean: inputs must be positive finite");
    }
  }

  if (is_alpha_one(alpha)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (weights[i] > 0.0) acc += weights[i] * std::log(inputs[i]);
    }
    return std::exp(acc);
  }

  // exp((1/c) * logsumexp_i(log w_i + c log u_i)) with c = (1-alpha)/2.
  const double c = alpha_exponent(alpha);
  std::vector<double> terms;
  terms.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (weights[i] > 0.0) {
      terms.push_back(std::log(weights[i]) + c * std::log(inputs[i]));
    }
  }
  return std::exp(log_sum_exp(terms) / c);
}

}  // namespace amid
