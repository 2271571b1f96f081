#include "amid/divergence.hpp"

#include <cmath>
#include <limits>

#include "amid/errors.hpp"
#include "amid/fmean.hpp"
#include "amid/mixture.hpp"

namespace amid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sizes(const LogCategorical& p, const LogCategorical& q,
                 const char* who) {
  if (p.size() != q.size()) throw LengthMismatch(std::string(who) + ": sizes differ");
}

void check_lambda(double lambda, const char* who) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError(std::string(who) + ": lambda must lie in [0, 1]");
  }
}

}  // namespace

DivValue kl(const LogCategorical& p, const LogCategorical& q) {
  check_sizes(p, q, "kl");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p.is_hard_zero(k)) continue;
    if (q.is_hard_zero(k)) return DivValue{kInf, true};
    sum += p.prob(k) * (p.log_prob(k) - q.log_prob(k));
  }
  return DivValue{sum, false};
}

DivValue rkl(const LogCategorical& p, const LogCategorical& q) {
  return kl(q, p);
}

DivValue skew_kl(const LogCategorical& p, const LogCategorical& q,
                 double lambda) {
  check_sizes(p, q, "skew_kl");
  check_lambda(lambda, "skew_kl");
  return kl(p, alpha_mixture(p, q, AlphaLambda{-1.0, lambda}).r);
}

DivValue skew_rkl(const LogCategorical& p, const LogCategorical& q,
                  double lambda) {
  check_sizes(p, q, "skew_rkl");
  check_lambda(lambda, "skew_rkl");
  return kl(q, alpha_mixture(p, q, AlphaLambda{-1.0, lambda}).r);
}

DivValue gjs(const LogCategorical& p, const LogCategorical& q, double lambda) {
  check_sizes(p, q, "gjs");
  check_lambda(lambda, "gjs");
  const LogCategorical m = alpha_mixture(p, q, AlphaLambda{-1.0, lambda}).r;
  double sum = 0.0;
  bool violation = false;
  if (lambda > 0.0) {
    const DivValue dp = kl(p, m);
    sum += lambda * dp.value;
    violation |= dp.support_violation;
  }
  if (lambda < 1.0) {
    const DivValue dq = kl(q, m);
    sum += (1.0 - lambda) * dq.value;
    violation |= dq.support_violation;
  }
  return DivValue{sum, violation};
}

DivValue alpha_div(const LogCategorical& p, const LogCategorical& q,
                   double alpha) {
  check_sizes(p, q, "alpha_div");
  if (!std::isfinite(alpha)) throw DomainError("alpha_div: alpha must be finite");
  constexpr double kPoleTol = 1e-6;
  if (std::abs(alpha + 1.0) <= kPoleTol) return kl(p, q);
  if (std::abs(alpha - 1.0) <= kPoleTol) return kl(q, p);

  const double c1 = 0.5 * (1.0 - alpha);
  const double c2 = 0.5 * (1.0 + alpha);
  // For alpha < -1 a negative exponent sits on q, so p mass outside supp(q)
  // blows up; symmetrically for alpha > 1.
  for (std::size_t k = 0; k < p.size(); ++k) {
    const bool zp = p.is_hard_zero(k);
    const bool zq = q.is_hard_zero(k);
    if (alpha < -1.0 && zq && !zp) return DivValue{kInf, true};
    if (alpha > 1.0 && zp && !zq) return DivValue{kInf, true};
  }

  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p.is_hard_zero(k) || q.is_hard_zero(k)) continue;
    sum += std::exp(c1 * p.log_prob(k) + c2 * q.log_prob(k));
  }
  return DivValue{4.0 / (1.0 - alpha * alpha) * (1.0 - sum), false};
}

DivValue ab_div(const LogCategorical& p, const LogCategorical& q,
                const ABParams& params) {
  check_sizes(p, q, "ab_div");
  const double a = params.a;
  const double b = params.b;
  constexpr double kZeroTol = 1e-12;
  if (std::abs(a) <= kZeroTol || std::abs(b) <= kZeroTol ||
      std::abs(a + b) <= kZeroTol) {
    throw DegenerateParams("ab_div: a, b and a+b must be nonzero");
  }

  // pow with a negative exponent on a hard zero diverges; flag rather than
  // return NaN arithmetic.
  auto power = [](double log_u, double e) {
    if (log_u == kNegInf) return e > 0.0 ? 0.0 : kInf;
    return std::exp(e * log_u);
  };

  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double lp = p.log_prob(k);
    const double lq = q.log_prob(k);
    if (lp == kNegInf && lq == kNegInf) continue;
    const double cross = (lp == kNegInf || lq == kNegInf)
                             ? (a > 0.0 && b > 0.0 ? 0.0 : kInf)
                             : std::exp(a * lp + b * lq);
    sum += cross - a / (a + b) * power(lp, a + b) - b / (a + b) * power(lq, a + b);
  }
  const double value = -sum / (a * b);
  return DivValue{value, !std::isfinite(value)};
}

namespace {

FGenerator make_kl_generator() {
  FGenerator g;
  g.name = "kl";
  g.f = [](double t) { return t * std::log(t); };
  g.f_prime = [](double t) { return std::log(t) + 1.0; };
  g.psi = [](double v) { return -v; };
  g.f_at_zero = 0.0;
  g.slope_at_inf = kInf;
  return g;
}

FGenerator make_rkl_generator() {
  FGenerator g;
  g.name = "rkl";
  g.f = [](double t) { return -std::log(t); };
  g.f_prime = [](double t) { return -1.0 / t; };
  g.psi = [](double v) { return 1.0 - std::log(v); };
  g.f_at_zero = kInf;
  g.slope_at_inf = 0.0;
  return g;
}

FGenerator make_jeffreys_generator() {
  FGenerator g;
  g.name = "jeffreys";
  g.f = [](double t) { return (t - 1.0) * std::log(t); };
  g.f_prime = [](double t) { return std::log(t) + 1.0 - 1.0 / t; };
  g.psi = [](double v) { return 1.0 - v - std::log(v); };
  g.f_at_zero = kInf;
  g.slope_at_inf = kInf;
  return g;
}

}  // namespace

const FGenerator& kl_generator() {
  static const FGenerator g = make_kl_generator();
  return g;
}

const FGenerator& rkl_generator() {
  static const FGenerator g = make_rkl_generator();
  return g;
}

const FGenerator& jeffreys_generator() {
  static const FGenerator g = make_jeffreys_generator();
  return g;
}

const FGenerator* find_generator(std::string_view name) {
  if (name == "kl") return &kl_generator();
  if (name == "rkl") return &rkl_generator();
  if (name == "jeffreys") return &jeffreys_generator();
  return nullptr;
}

DivValue f_div(const LogCategorical& p, const LogCategorical& q,
               const FGenerator& gen) {
  check_sizes(p, q, "f_div");
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const bool zp = p.is_hard_zero(k);
    const bool zq = q.is_hard_zero(k);
    if (zp && zq) continue;
    double term;
    if (zq) {
      // lim_{q->0} q f(p/q) = p * lim f(t)/t.
      term = p.prob(k) * gen.slope_at_inf;
    } else if (zp) {
      term = q.prob(k) * gen.f_at_zero;
    } else {
      term = q.prob(k) * gen.f(std::exp(p.log_prob(k) - q.log_prob(k)));
    }
    if (term == kInf) return DivValue{kInf, true};
    sum += term;
  }
  return DivValue{sum, !std::isfinite(sum)};
}

DivValue kl_grid(const Grid1D& p, const Grid1D& q) {
  if (!p.same_grid(q)) throw GridMismatch("kl_grid: grids differ");
  constexpr double kHardZero = 1e-300;
  std::vector<double> integrand(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.density(i);
    const double qi = q.density(i);
    if (pi < kHardZero) {
      integrand[i] = 0.0;
    } else if (qi < kHardZero) {
      return DivValue{kInf, true};
    } else {
      integrand[i] = pi * (std::log(pi) - std::log(qi));
    }
  }
  return DivValue{trapezoid(integrand, p.dx()), false};
}

}  // namespace amid
