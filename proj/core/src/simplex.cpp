#include "amid/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "amid/errors.hpp"
#include "amid/rng.hpp"

namespace amid {

double log_sum_exp(std::span<const double> v) {
  double max_arg = kNegInf;
  for (double x : v) max_arg = std::max(max_arg, x);
  if (max_arg == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : v) {
    if (x != kNegInf) sum += std::exp(x - max_arg);
  }
  return max_arg + std::log(sum);
}

double trapezoid(std::span<const double> values, double dx) {
  if (values.size() < 2) throw DomainError("trapezoid: need at least 2 samples");
  double sum = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  return sum * dx;
}

namespace {

void check_log_weights(std::span<const double> log_weights) {
  if (log_weights.size() < 2) {
    throw DomainError("log weights: need at least 2 entries");
  }
  bool any_finite = false;
  for (double w : log_weights) {
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
      throw DomainError("log weights must be finite or -inf");
    }
    any_finite |= (w != kNegInf);
  }
  if (!any_finite) throw AllZero("every log weight is -inf");
}

}  // namespace

LogCategorical LogCategorical::from_log_probs(std::vector<double> log_probs) {
  check_log_weights(log_probs);
  const double lse = log_sum_exp(log_probs);
  if (std::abs(lse) > 1e-9) {
    throw DomainError("log probs not normalized: logsumexp = " +
                      std::to_string(lse));
  }
  for (double lp : log_probs) {
    if (lp > 0.0) throw DomainError("log prob above 0");
  }
  return LogCategorical(std::move(log_probs));
}

LogCategorical LogCategorical::from_probs(std::span<const double> probs) {
  std::vector<double> lp(probs.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (std::isnan(probs[k]) || probs[k] < 0.0) {
      throw DomainError("probabilities must be non-negative");
    }
    lp[k] = probs[k] == 0.0 ? kNegInf : std::log(probs[k]);
  }
  return normalize(lp);
}

double LogCategorical::prob(std::size_t k) const {
  return std::exp(log_probs_[k]);
}

std::vector<double> LogCategorical::probs() const {
  std::vector<double> out(log_probs_.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = prob(k);
  return out;
}

LogCategorical normalize(std::span<const double> log_weights) {
  check_log_weights(log_weights);
  const double lse = log_sum_exp(log_weights);
  std::vector<double> out(log_weights.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = log_weights[k] == kNegInf ? kNegInf : log_weights[k] - lse;
  }
  return LogCategorical(std::move(out));
}

double total_variation(const LogCategorical& p, const LogCategorical& q) {
  if (p.size() != q.size()) {
    throw LengthMismatch("total_variation: sizes differ");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    sum += std::abs(p.prob(k) - q.prob(k));
  }
  return 0.5 * sum;
}

std::vector<std::size_t> sample(const LogCategorical& p, std::uint64_t seed,
                                std::size_t count) {
  if (count < 1) throw DomainError("sample: count must be >= 1");
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p.prob(k);
    cdf[k] = acc;
  }
  cdf.back() = 1.0;

  SplitMix64 rng(seed);
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rng.next_double();
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    // The walk stops at the first k with u < cdf[k]; that cell has positive
    // CDF width, so hard zeros are never drawn.
    out[i] = k;
  }
  return out;
}

GaussianMixture1D::GaussianMixture1D(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw DomainError("gaussian mixture: need at least one component");
  }
  double weight_sum = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0) || c.weight > 1.0) {
      throw DomainError("gaussian mixture: weight must be in (0, 1]");
    }
    if (!(c.variance > 0.0)) {
      throw DomainError("gaussian mixture: variance must be positive");
    }
    if (!std::isfinite(c.mean)) {
      throw DomainError("gaussian mixture: mean must be finite");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw DomainError("gaussian mixture: weights must sum to 1");
  }
}

double GaussianMixture1D::pdf(double x) const {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  double value = 0.0;
  for (const auto& c : components_) {
    const double z = (x - c.mean);
    value += c.weight * kInvSqrt2Pi / std::sqrt(c.variance) *
             std::exp(-0.5 * z * z / c.variance);
  }
  return value;
}

namespace {

std::vector<double> checked_density(double x_min, double x_max,
                                    const std::vector<double>& density) {
  if (!(x_min < x_max)) throw DomainError("grid: x_min must be < x_max");
  if (density.size() < 64) throw DomainError("grid: need at least 64 points");
  for (double d : density) {
    if (std::isnan(d) || d < 0.0) {
      throw DomainError("grid: density must be non-negative");
    }
  }
  return density;
}

}  // namespace

Grid1D Grid1D::from_density(double x_min, double x_max,
                            std::vector<double> density) {
  checked_density(x_min, x_max, density);
  Grid1D g(x_min, x_max, std::move(density));
  if (std::abs(g.integral() - 1.0) > 1e-6) {
    throw DomainError("grid: density does not integrate to 1");
  }
  return g;
}

Grid1D Grid1D::from_unnormalized(double x_min, double x_max,
                                 std::vector<double> density) {
  checked_density(x_min, x_max, density);
  const double dx = (x_max - x_min) / static_cast<double>(density.size() - 1);
  const double z = trapezoid(density, dx);
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError("grid: cannot normalize, integral is not positive");
  }
  for (double& d : density) d /= z;
  return Grid1D(x_min, x_max, std::move(density));
}

Grid1D discretize(const GaussianMixture1D& m, double x_min, double x_max,
                  std::size_t n) {
  if (n < 64) throw DomainError("discretize: need n >= 64");
  if (!(x_min < x_max)) throw DomainError("discretize: x_min must be < x_max");
  const double dx = (x_max - x_min) / static_cast<double>(n - 1);
  std::vector<double> density(n);
  for (std::size_t i = 0; i < n; ++i) {
    density[i] = m.pdf(x_min + dx * static_cast<double>(i));
  }
  const double mass = trapezoid(density, dx);
  if (mass < 0.999) {
    throw InsufficientCoverage("discretize: grid captures only " +
                               std::to_string(mass) + " of the mass");
  }
  return Grid1D::from_unnormalized(x_min, x_max, std::move(density));
}

}  // namespace amid
