#pragma once
// Numerically stable representations of discrete and gridded 1-D probability
// distributions.
//
// All probability arithmetic happens in log domain with log-sum-exp. Exact
// zeros are stored as -inf log probabilities rather than large negative
// floats, so support bookkeeping downstream is exact set algebra instead of
// a threshold game.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace amid {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(v[i])), max-shifted. -inf entries drop out; all -inf gives -inf.
double log_sum_exp(std::span<const double> v);

// Trapezoid rule over uniformly spaced samples.
double trapezoid(std::span<const double> values, double dx);

// A finite distribution held as natural-log probabilities. Entries lie in
// [-inf, 0], at least one is finite, and they log-sum-exp to 0 within 1e-9.
class LogCategorical {
 public:
  // Accepts an already normalized vector; validates the invariants.
  static LogCategorical from_log_probs(std::vector<double> log_probs);
  static LogCategorical from_probs(std::span<const double> probs);

  std::size_t size() const { return log_probs_.size(); }
  double log_prob(std::size_t k) const { return log_probs_[k]; }
  double prob(std::size_t k) const;
  bool is_hard_zero(std::size_t k) const { return log_probs_[k] == kNegInf; }
  std::span<const double> log_probs() const { return log_probs_; }
  std::vector<double> probs() const;

 private:
  friend LogCategorical normalize(std::span<const double>);
  explicit LogCategorical(std::vector<double> log_probs)
      : log_probs_(std::move(log_probs)) {}

  std::vector<double> log_probs_;
};

// Softmax in log domain: log_weights - logsumexp(log_weights). Entries may be
// -inf (hard zeros); +inf and NaN are rejected. Throws AllZero when every
// entry is -inf.
LogCategorical normalize(std::span<const double> log_weights);

// Half the L1 distance between two equally sized distributions, in [0, 1].
double total_variation(const LogCategorical& p, const LogCategorical& q);

// Draws `count` indices by inverse CDF on a SplitMix64 stream. Deterministic
// per seed; hard zeros are never drawn.
std::vector<std::size_t> sample(const LogCategorical& p, std::uint64_t seed,
                                std::size_t count);

struct GaussianComponent {
  double weight;
  double mean;
  double variance;
};

// A finite mixture of 1-D Gaussians. Weights must sum to 1 within 1e-12 and
// each variance must be positive.
class GaussianMixture1D {
 public:
  explicit GaussianMixture1D(std::vector<GaussianComponent> components);

  double pdf(double x) const;
  std::span<const GaussianComponent> components() const { return components_; }

 private:
  std::vector<GaussianComponent> components_;
};

// A density sampled on a uniform grid over [x_min, x_max], n >= 64 points,
// trapezoid-normalized to 1 within 1e-6.
class Grid1D {
 public:
  // Validates that the trapezoid integral is already 1 within 1e-6.
  static Grid1D from_density(double x_min, double x_max,
                             std::vector<double> density);
  // Rescales an arbitrary non-negative sample vector to integrate to 1.
  static Grid1D from_unnormalized(double x_min, double x_max,
                                  std::vector<double> density);

  std::size_t size() const { return density_.size(); }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double dx() const {
    return (x_max_ - x_min_) / static_cast<double>(density_.size() - 1);
  }
  double x(std::size_t i) const { return x_min_ + dx() * static_cast<double>(i); }
  double density(std::size_t i) const { return density_[i]; }
  std::span<const double> densities() const { return density_; }
  double integral() const { return trapezoid(density_, dx()); }
  bool same_grid(const Grid1D& other) const {
    return size() == other.size() && x_min_ == other.x_min_ &&
           x_max_ == other.x_max_;
  }

 private:
  Grid1D(double x_min, double x_max, std::vector<double> density)
      : x_min_(x_min), x_max_(x_max), density_(std::move(density)) {}

  double x_min_;
  double x_max_;
  std::vector<double> density_;
};

// Samples the mixture pdf on a uniform grid and renormalizes. Throws
// InsufficientCoverage when the grid captures less than 0.999 of the mass.
Grid1D discretize(const GaussianMixture1D& m, double x_min, double x_max,
                  std::size_t n);

}  // namespace amid
