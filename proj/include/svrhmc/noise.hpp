#ifndef SVRHMC_NOISE_HPP
#define SVRHMC_NOISE_HPP

// Correlated Gaussian increments (eps_x, eps_v) of the exactly-integrated
// Ornstein-Uhlenbeck part of underdamped Langevin dynamics over one step of
// length eta. Per coordinate the pair has covariance
//
//   [ sigma_xx  sigma_vx ]      sigma_vv = u (1 - e^{-2 g eta})
//   [ sigma_vx  sigma_vv ]      sigma_xx = (u / g^2)(2 g eta + 4 e^{-g eta} - e^{-2 g eta} - 3)
//                               sigma_vx = (u / g)(1 - 2 e^{-g eta} + e^{-2 g eta})
//
// and coordinates are independent. The pair is drawn as
// eps_x = l11 z1, eps_v = l21 z1 + l22 z2 (x first in the Cholesky ordering).

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <random>
#include <sstream>
#include <utility>

#include "svrhmc/errors.hpp"
#include "svrhmc/random.hpp"

namespace svrhmc {

struct NoiseModel {
  double gamma = 0;
  double u = 0;
  double eta = 0;
  double sigma_xx = 0;
  double sigma_vx = 0;
  double sigma_vv = 0;
  double chol_l11 = 0;
  double chol_l21 = 0;
  double chol_l22 = 0;
};

namespace detail {

// 2h + 4e^{-h} - e^{-2h} - 3, which is (2/3)h^3 + O(h^4). The direct form
// cancels catastrophically for small h, so below h = 1 the Taylor series
// sum_{k>=3} (-1)^k (4 - 2^k) h^k / k! is used instead.
inline double ou_position_kernel(double h) {
  if (h >= 1.0) {
    const double a = std::expm1(-h);  // e^{-h} - 1
    return 2.0 * (h + a) - a * a;
  }
  double power = 1.0;  // (-h)^k / k!
  double two_k = 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 60; ++k) {
    power *= -h / k;
    two_k *= 2.0;
    if (k < 3) continue;
    const double term = (4.0 - two_k) * power;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace detail

inline NoiseModel build_noise_model(double gamma, double u, double eta) {
  if (!(gamma > 0) || !(u > 0) || !(eta > 0) || !std::isfinite(gamma) ||
      !std::isfinite(u) || !std::isfinite(eta))
    throw usage_error("build_noise_model: gamma, u and eta must be finite and > 0");
  NoiseModel m;
  m.gamma = gamma;
  m.u = u;
  m.eta = eta;
  const double h = gamma * eta;
  const double em1 = std::expm1(-h);  // e^{-h} - 1
  m.sigma_vv = -u * std::expm1(-2.0 * h);
  m.sigma_vx = (u / gamma) * em1 * em1;
  m.sigma_xx = (u / (gamma * gamma)) * detail::ou_position_kernel(h);

  const double det = m.sigma_xx * m.sigma_vv - m.sigma_vx * m.sigma_vx;
  if (!(m.sigma_xx > 0) || !(m.sigma_vv > 0) || !(det > 0) || !std::isfinite(det)) {
    std::ostringstream os;
    os << "noise covariance is not positive definite (gamma=" << gamma
       << ", u=" << u << ", eta=" << eta << ", sigma_xx=" << m.sigma_xx
       << ", sigma_vx=" << m.sigma_vx << ", sigma_vv=" << m.sigma_vv << ")";
    throw numeric_error(os.str());
  }
  m.chol_l11 = std::sqrt(m.sigma_xx);
  m.chol_l21 = m.sigma_vx / m.chol_l11;
  // l22^2 = det / sigma_xx avoids subtracting two nearly equal numbers.
  m.chol_l22 = std::sqrt(det / m.sigma_xx);
  return m;
}

// Writes one correlated draw into eps_x / eps_v (resized to d).
inline void sample_noise_pair_into(const NoiseModel& model, std::size_t d, Engine& rng,
                                   Eigen::VectorXd& eps_x, Eigen::VectorXd& eps_v) {
  std::normal_distribution<double> normal;
  eps_x.resize(static_cast<Eigen::Index>(d));
  eps_v.resize(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    eps_x(j) = model.chol_l11 * z1;
    eps_v(j) = model.chol_l21 * z1 + model.chol_l22 * z2;
  }
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_noise_pair(
    const NoiseModel& model, std::size_t d, Engine& rng) {
  std::pair<Eigen::VectorXd, Eigen::VectorXd> out;
  sample_noise_pair_into(model, d, rng, out.first, out.second);
  return out;
}

}  // namespace svrhmc

#endif  // SVRHMC_NOISE_HPP
