#ifndef SVRHMC_THEORY_HPP
#define SVRHMC_THEORY_HPP

// Step-size rule and the non-asymptotic W2 upper bound for SVR-HMC with
// u = 1/L, gamma = 2 on a mu-strongly convex, L-smooth finite sum.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "svrhmc/errors.hpp"

namespace svrhmc {

struct StepSizeChoice {
  double eta;
  std::size_t epoch_length;
};

// m = n and eta = c * min(eps / (kappa sqrt(d)), eps^{2/3} / (kappa^{1/3} d^{1/3} n^{2/3})).
inline StepSizeChoice select_step_size(double epsilon, double kappa, std::size_t d,
                                       std::size_t n, double c = 1.0) {
  if (!(epsilon > 0) || !(kappa > 0) || d == 0 || n == 0 || !(c > 0))
    throw usage_error("select_step_size: all arguments must be positive");
  const double dd = static_cast<double>(d), nn = static_cast<double>(n);
  const double first = epsilon / (kappa * std::sqrt(dd));
  const double second =
      std::pow(epsilon, 2.0 / 3.0) / (std::cbrt(kappa) * std::cbrt(dd) * std::pow(nn, 2.0 / 3.0));
  return {c * std::min(first, second), n};
}

struct TheoryBoundInputs {
  double w0;     // W2 of the initial law to the target
  double eta;
  double m;      // epoch length
  double K;      // iterations
  double kappa;  // L / mu
  double L;
  double mu;
  double d;
  double u;
  double Uv;     // caller-supplied; only their orders are known
  double Uf;
};

struct TheoryBoundTerms {
  double D1;
  double D2;
  double D3;
  double contraction;     // e^{-K eta / (2 kappa)} w0
  double discretization;  // 4 eta kappa (2 sqrt(D1) + sqrt(D2))
  double variance;        // 2 sqrt(kappa D3) m eta^{3/2}
  double total;
};

inline TheoryBoundTerms theory_bound_terms(const TheoryBoundInputs& in) {
  const double vals[] = {in.w0, in.eta, in.m, in.K, in.kappa, in.L, in.mu, in.d, in.u, in.Uv, in.Uf};
  for (double v : vals)
    if (!(v > 0) || !std::isfinite(v))
      throw usage_error("theory_bound: all inputs must be finite and > 0");
  if (std::abs(in.kappa - in.L / in.mu) > 1e-9 * in.kappa)
    throw usage_error("theory_bound: kappa must equal L / mu");

  TheoryBoundTerms t{};
  const double eta = in.eta, L = in.L, d = in.d;
  t.D1 = (8.0 * eta * eta / 5.0 + 4.0 / 3.0) * in.Uv + 4.0 / (3.0 * L) * in.Uf +
         16.0 * d * eta / (3.0 * L);
  t.D2 = 13.0 * in.Uv + 8.0 * in.Uf / L + 28.0 * d * eta / L;
  t.D3 = in.Uv + 4.0 * in.u * d;
  t.contraction = std::exp(-in.K * eta / (2.0 * in.kappa)) * in.w0;
  t.discretization = 4.0 * eta * in.kappa * (2.0 * std::sqrt(t.D1) + std::sqrt(t.D2));
  t.variance = 2.0 * std::sqrt(in.kappa * t.D3) * in.m * std::pow(eta, 1.5);
  t.total = t.contraction + t.discretization + t.variance;
  return t;
}

inline double theory_bound(const TheoryBoundInputs& in) { return theory_bound_terms(in).total; }

}  // namespace svrhmc

#endif  // SVRHMC_THEORY_HPP
