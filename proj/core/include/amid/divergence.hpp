#pragma once
// The divergence zoo: KL and friends, alpha- and alpha-beta-divergences, and
// generic f-divergence machinery.
//
// Support violations do not abort. A divergence evaluated where its support
// condition fails returns an infinite value carrying a violation flag, so
// training loops can detect and report blow-ups instead of crashing.

#include <cmath>
#include <functional>
#include <string>
#include <string_view>

#include "amid/simplex.hpp"

namespace amid {

// A divergence value. Converts implicitly to double; `support_violation` is
// set when the value is infinite because mass sits outside the allowed
// support.
struct DivValue {
  double value{};
  bool support_violation{false};

  operator double() const { return value; }
  bool finite() const { return std::isfinite(value); }
};

// sum_k p(k) (log p(k) - log q(k)), with 0 log 0 = 0. Requires
// supp(p) <= supp(q); otherwise returns a flagged +inf.
DivValue kl(const LogCategorical& p, const LogCategorical& q);

// kl with the roles swapped: kl(q, p).
DivValue rkl(const LogCategorical& p, const LogCategorical& q);

// kl(p, m) and kl(q, m) with m the arithmetic mixture lambda*p + (1-lambda)*q,
// built through alpha_mixture at alpha = -1 so the composition is exact.
DivValue skew_kl(const LogCategorical& p, const LogCategorical& q,
                 double lambda);
DivValue skew_rkl(const LogCategorical& p, const LogCategorical& q,
                  double lambda);

// lambda*kl(p, m) + (1-lambda)*kl(q, m); m as above. For lambda in (0, 1)
// the mixture dominates both inputs, so the value is always finite.
DivValue gjs(const LogCategorical& p, const LogCategorical& q, double lambda);

// 4/(1-alpha^2) * (1 - sum_k p(k)^((1-alpha)/2) q(k)^((1+alpha)/2)) away from
// alpha = +-1; within 1e-6 of the poles it returns the KL limits, with the
// convention alpha = -1 -> kl(p, q) and alpha = +1 -> kl(q, p). Under this
// convention the arithmetic mixture minimizes the lambda-weighted sum of
// D_alpha(.||r) at alpha = -1 and the geometric mixture at alpha = +1.
DivValue alpha_div(const LogCategorical& p, const LogCategorical& q,
                   double alpha);

struct ABParams {
  double a{};
  double b{};
};

// -1/(a b) sum_k [p^a q^b - a/(a+b) p^(a+b) - b/(a+b) q^(a+b)].
// Only the region a != 0, b != 0, a + b != 0 is supported; the limiting
// cases throw DegenerateParams.
DivValue ab_div(const LogCategorical& p, const LogCategorical& q,
                const ABParams& params);

// An f-divergence generator: convex f on (0, inf) with f(1) = 0, its
// derivative, and psi(v) = f(v) - v f'(v). The two boundary descriptors give
// the limits needed to evaluate sum_k q f(p/q) where p or q vanishes:
// f_at_zero = lim f(t) as t -> 0+, slope_at_inf = lim f(t)/t as t -> inf.
struct FGenerator {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> psi;
  double f_at_zero{};
  double slope_at_inf{};
};

const FGenerator& kl_generator();        // f(t) = t log t
const FGenerator& rkl_generator();       // f(t) = -log t
const FGenerator& jeffreys_generator();  // f(t) = (t - 1) log t

// Shipped generator by name ("kl", "rkl", "jeffreys"); nullptr if unknown.
const FGenerator* find_generator(std::string_view name);

// sum_k q(k) f(p(k)/q(k)). Boundary terms use the generator descriptors:
// q = 0 contributes p * slope_at_inf, p = 0 contributes q * f_at_zero.
DivValue f_div(const LogCategorical& p, const LogCategorical& q,
               const FGenerator& gen);

// Trapezoid quadrature of p log(p/q) for gridded densities; flagged +inf
// where q vanishes against positive p mass.
DivValue kl_grid(const Grid1D& p, const Grid1D& q);

}  // namespace amid
