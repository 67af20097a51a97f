#ifndef SVRHMC_MODEL_HPP
#define SVRHMC_MODEL_HPP

// Finite-sum potentials f(x) = (1/n) sum_i f_i(x) and the concrete target
// families used by the experiments. Every potential is immutable after
// construction, so one instance can be shared by any number of chains.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "svrhmc/errors.hpp"
#include "svrhmc/random.hpp"

namespace svrhmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A potential exposes its component count, dimension, an unchecked
// per-component gradient written into `out`, the value of the average f up to
// a documented constant, and optional smoothness / strong-convexity constants.
template <class P>
concept FiniteSumPotential =
    requires(const P& p, std::size_t i, const Vector& x, Vector& out) {
      { p.size() } -> std::convertible_to<std::size_t>;
      { p.dim() } -> std::convertible_to<std::size_t>;
      p.component_gradient(i, x, out);
      { p.value(x) } -> std::convertible_to<double>;
      { p.smoothness() } -> std::same_as<std::optional<double>>;
      { p.strong_convexity() } -> std::same_as<std::optional<double>>;
    };

namespace detail {

inline void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite()) throw numeric_error(std::string(what) + ": non-finite input");
}

template <class P>
void require_dim(const P& p, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != p.dim())
    throw usage_error("dimension mismatch: potential has d=" +
                      std::to_string(p.dim()) + ", got " +
                      std::to_string(x.size()));
}

// log(1 + exp(t)) without overflow.
inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

// 1 / (1 + exp(-t)) without overflow.
inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Ascending.
inline Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generic operations over any FiniteSumPotential.

template <FiniteSumPotential P>
Vector grad_component(const P& p, std::size_t i, const Vector& x) {
  if (i >= p.size())
    throw usage_error("component index " + std::to_string(i) +
                      " out of range [0, " + std::to_string(p.size()) + ")");
  detail::require_dim(p, x);
  detail::require_finite(x, "grad_component");
  Vector out(x.size());
  p.component_gradient(i, x, out);
  return out;
}

// Averages the component gradients over `indices` in the given order. grad_full
// is this routine applied to 0..n-1, so an enumerated full minibatch reproduces
// the full gradient bit for bit.
template <FiniteSumPotential P>
void average_gradient_into(const P& p, std::span<const std::size_t> indices,
                           const Vector& x, Vector& out, Vector& scratch) {
  out.setZero(x.size());
  scratch.resize(x.size());
  for (std::size_t i : indices) {
    p.component_gradient(i, x, scratch);
    out += scratch;
  }
  out /= static_cast<double>(indices.size());
}

template <FiniteSumPotential P>
void grad_full_into(const P& p, const Vector& x, Vector& out, Vector& scratch) {
  out.setZero(x.size());
  scratch.resize(x.size());
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    p.component_gradient(i, x, scratch);
    out += scratch;
  }
  out /= static_cast<double>(n);
}

template <FiniteSumPotential P>
Vector grad_full(const P& p, const Vector& x) {
  detail::require_dim(p, x);
  detail::require_finite(x, "grad_full");
  Vector out, scratch;
  grad_full_into(p, x, out, scratch);
  return out;
}

template <FiniteSumPotential P>
double potential_value(const P& p, const Vector& x) {
  detail::require_dim(p, x);
  detail::require_finite(x, "potential_value");
  return p.value(x);
}

// ---------------------------------------------------------------------------

struct TargetGaussian {
  Vector mean;
  Matrix covariance;
};

// f_i(x) = (x - a_i)^T Sigma (x - a_i) / 2.
//
// value() returns (x - abar)^T Sigma (x - abar) / 2, i.e. f(x) shifted so that
// its minimum is 0.
class QuadraticPotential {
 public:
  // `centers` holds one a_i per column (d x n).
  QuadraticPotential(Matrix sigma, Matrix centers)
      : sigma_(std::move(sigma)), centers_(std::move(centers)) {
    const auto d = sigma_.rows();
    if (d == 0 || sigma_.cols() != d)
      throw usage_error("QuadraticPotential: Sigma must be square and non-empty");
    if (centers_.rows() != d || centers_.cols() == 0)
      throw usage_error("QuadraticPotential: centers must be d x n with n >= 1");
    if (!sigma_.allFinite() || !centers_.allFinite())
      throw numeric_error("QuadraticPotential: non-finite parameters");
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, sigma_.cwiseAbs().maxCoeff()))
      throw usage_error("QuadraticPotential: Sigma must be symmetric");
    const Vector eig = detail::symmetric_eigenvalues(sigma_);
    if (eig(0) <= 0)
      throw usage_error("QuadraticPotential: Sigma must be positive definite");
    mu_ = eig(0);
    L_ = eig(d - 1);
    mean_center_ = centers_.rowwise().mean();
  }

  std::size_t size() const { return static_cast<std::size_t>(centers_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(sigma_.rows()); }

  void component_gradient(std::size_t i, const Vector& x, Vector& out) const {
    out.noalias() = sigma_ * (x - centers_.col(static_cast<Eigen::Index>(i)));
  }

  double value(const Vector& x) const {
    const Vector r = x - mean_center_;
    return 0.5 * r.dot(sigma_ * r);
  }

  std::optional<double> smoothness() const { return L_; }
  std::optional<double> strong_convexity() const { return mu_; }

  const Matrix& sigma() const { return sigma_; }
  const Matrix& centers() const { return centers_; }
  const Vector& mean_center() const { return mean_center_; }

  // pi ∝ exp(-(x - abar)^T Sigma (x - abar) / 2) has covariance Sigma^{-1}.
  TargetGaussian target() const {
    return {mean_center_, sigma_.llt().solve(Matrix::Identity(sigma_.rows(), sigma_.cols()))};
  }

 private:
  Matrix sigma_;
  Matrix centers_;
  Vector mean_center_;
  double mu_ = 0;
  double L_ = 0;
};

// Bayesian logistic regression with prior N(0, lambda^{-1} I):
//   f_i(x) = n log(1 + exp(-y_i x^T a_i)) + (lambda/2) ||x||^2,  y_i in {-1,+1}.
//
// value() returns (1/n) sum_i f_i(x) exactly (no constant dropped), i.e. the
// summed negative log-likelihood plus the ridge term.
class LogisticPotential {
 public:
  // `features` is n x d, one example per row.
  LogisticPotential(const Matrix& features, Vector labels, double lambda)
      : features_t_(features.transpose()), labels_(std::move(labels)), lambda_(lambda) {
    if (features.rows() == 0 || features.cols() == 0)
      throw usage_error("LogisticPotential: empty design matrix");
    if (labels_.size() != features.rows())
      throw usage_error("LogisticPotential: label count does not match rows");
    if (!(lambda_ >= 0) || !std::isfinite(lambda_))
      throw usage_error("LogisticPotential: lambda must be finite and >= 0");
    if (!features.allFinite()) throw numeric_error("LogisticPotential: non-finite features");
    for (Eigen::Index i = 0; i < labels_.size(); ++i)
      if (labels_(i) != 1.0 && labels_(i) != -1.0)
        throw usage_error("LogisticPotential: labels must be -1 or +1");
    const double n = static_cast<double>(size());
    L_ = n * features_t_.colwise().squaredNorm().maxCoeff() / 4.0 + lambda_;
  }

  std::size_t size() const { return static_cast<std::size_t>(features_t_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(features_t_.rows()); }

  void component_gradient(std::size_t i, const Vector& x, Vector& out) const {
    const auto idx = static_cast<Eigen::Index>(i);
    const auto a = features_t_.col(idx);
    const double y = labels_(idx);
    const double s = detail::sigmoid(-y * a.dot(x));
    out.noalias() = (-static_cast<double>(size()) * y * s) * a;
    if (lambda_ != 0) out.noalias() += lambda_ * x;
  }

  double value(const Vector& x) const {
    const Vector margins = (features_t_.transpose() * x).cwiseProduct(labels_);
    double total = 0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) total += detail::softplus(-margins(i));
    return total + 0.5 * lambda_ * x.squaredNorm();
  }

  std::optional<double> smoothness() const { return L_; }
  std::optional<double> strong_convexity() const {
    return lambda_ > 0 ? std::optional<double>(lambda_) : std::nullopt;
  }

  double lambda() const { return lambda_; }

 private:
  Matrix features_t_;  // d x n
  Vector labels_;
  double lambda_;
  double L_ = 0;
};

// Bayesian linear regression, likelihood N(x^T a_i, sigma_a^2), prior
// N(0, lambda^{-1} I):
//   f_i(x) = n (y_i - x^T a_i)^2 / (2 sigma_a^2) + (lambda/2) ||x||^2.
//
// value() returns (1/n) sum_i f_i(x) exactly.
class LinearRegressionPotential {
 public:
  LinearRegressionPotential(const Matrix& features, Vector responses,
                            double sigma_a_sq, double lambda)
      : features_t_(features.transpose()),
        responses_(std::move(responses)),
        sigma_a_sq_(sigma_a_sq),
        lambda_(lambda) {
    if (features.rows() == 0 || features.cols() == 0)
      throw usage_error("LinearRegressionPotential: empty design matrix");
    if (responses_.size() != features.rows())
      throw usage_error("LinearRegressionPotential: response count does not match rows");
    if (!(sigma_a_sq_ > 0) || !std::isfinite(sigma_a_sq_))
      throw usage_error("LinearRegressionPotential: sigma_a_sq must be > 0");
    if (!(lambda_ >= 0) || !std::isfinite(lambda_))
      throw usage_error("LinearRegressionPotential: lambda must be finite and >= 0");
    if (!features.allFinite() || !responses_.allFinite())
      throw numeric_error("LinearRegressionPotential: non-finite data");
    const double n = static_cast<double>(size());
    L_ = n * features_t_.colwise().squaredNorm().maxCoeff() / sigma_a_sq_ + lambda_;
    // Hessian of f is A^T A / sigma_a^2 + lambda I.
    const Vector eig = detail::symmetric_eigenvalues(features_t_ * features_t_.transpose());
    mu_ = std::max(eig(0), 0.0) / sigma_a_sq_ + lambda_;
  }

  std::size_t size() const { return static_cast<std::size_t>(features_t_.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(features_t_.rows()); }

  void component_gradient(std::size_t i, const Vector& x, Vector& out) const {
    const auto idx = static_cast<Eigen::Index>(i);
    const auto a = features_t_.col(idx);
    const double r = responses_(idx) - a.dot(x);
    out.noalias() = (-static_cast<double>(size()) * r / sigma_a_sq_) * a;
    if (lambda_ != 0) out.noalias() += lambda_ * x;
  }

  double value(const Vector& x) const {
    const Vector r = responses_ - features_t_.transpose() * x;
    return r.squaredNorm() / (2.0 * sigma_a_sq_) + 0.5 * lambda_ * x.squaredNorm();
  }

  std::optional<double> smoothness() const { return L_; }
  std::optional<double> strong_convexity() const {
    return mu_ > 0 ? std::optional<double>(mu_) : std::nullopt;
  }

  // Exact Gaussian posterior: precision A^T A / sigma_a^2 + lambda I.
  TargetGaussian posterior() const {
    const Index d = static_cast<Index>(dim());
    const Matrix precision = features_t_ * features_t_.transpose() / sigma_a_sq_ +
                             lambda_ * Matrix::Identity(d, d);
    const auto llt = precision.llt();
    if (llt.info() != Eigen::Success)
      throw numeric_error("LinearRegressionPotential: posterior precision not PD");
    return {llt.solve(features_t_ * responses_ / sigma_a_sq_),
            llt.solve(Matrix::Identity(d, d))};
  }

 private:
  using Index = Eigen::Index;

  Matrix features_t_;  // d x n
  Vector responses_;
  double sigma_a_sq_;
  double lambda_;
  double L_ = 0;
  double mu_ = 0;
};

// Adds (lambda/2)||x||^2 to every component. Turns a convex L-smooth base into
// a lambda-strongly convex, (L + lambda)-smooth potential.
template <FiniteSumPotential Base>
class RidgeWrapped {
 public:
  RidgeWrapped(Base base, double lambda) : base_(std::move(base)), lambda_(lambda) {
    if (!(lambda_ > 0) || !std::isfinite(lambda_))
      throw usage_error("ridge_wrap: lambda must be finite and > 0");
  }

  std::size_t size() const { return base_.size(); }
  std::size_t dim() const { return base_.dim(); }

  void component_gradient(std::size_t i, const Vector& x, Vector& out) const {
    base_.component_gradient(i, x, out);
    out.noalias() += lambda_ * x;
  }

  double value(const Vector& x) const {
    return base_.value(x) + 0.5 * lambda_ * x.squaredNorm();
  }

  std::optional<double> smoothness() const {
    if (auto L = base_.smoothness()) return *L + lambda_;
    return std::nullopt;
  }
  std::optional<double> strong_convexity() const {
    return base_.strong_convexity().value_or(0.0) + lambda_;
  }

  const Base& base() const { return base_; }
  double lambda() const { return lambda_; }

 private:
  Base base_;
  double lambda_;
};

template <FiniteSumPotential Base>
RidgeWrapped<Base> ridge_wrap(Base base, double lambda) {
  return RidgeWrapped<Base>(std::move(base), lambda);
}

// ---------------------------------------------------------------------------
// Synthetic Gaussian target.

struct SyntheticQuadraticOptions {
  double center_mean = 2.0;
  // Second parameter of N(2, 4). Read as a variance unless
  // `spread_is_variance` is false, in which case it is the standard deviation.
  double center_spread = 4.0;
  bool spread_is_variance = true;
  double min_eigenvalue = 2.0 / 3.0;
  double max_eigenvalue = 1.5;
};

struct SyntheticQuadratic {
  QuadraticPotential potential;
  TargetGaussian target;
};

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs of
// R's diagonal folded into Q.
inline Matrix random_orthogonal(Eigen::Index d, Engine& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

// Centers a_i with entries i.i.d. N(mean, spread); Sigma = Q diag(lambda) Q^T
// with eigenvalues linearly spaced over [min, max] (both endpoints included)
// and Q a seeded random rotation. For d = 1 Sigma is the scalar max eigenvalue.
inline SyntheticQuadratic synthetic_quadratic(std::int64_t n, std::int64_t d,
                                              std::uint64_t seed,
                                              const SyntheticQuadraticOptions& opts = {}) {
  if (n <= 0 || d <= 0) throw usage_error("synthetic_quadratic: n and d must be >= 1");
  if (!(opts.min_eigenvalue > 0) || !(opts.max_eigenvalue >= opts.min_eigenvalue))
    throw usage_error("synthetic_quadratic: need 0 < min_eigenvalue <= max_eigenvalue");
  Engine rng(seed);
  const double sd = opts.spread_is_variance ? std::sqrt(opts.center_spread) : opts.center_spread;
  std::normal_distribution<double> normal(opts.center_mean, sd);
  Matrix centers(d, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) centers(j, i) = normal(rng);

  Vector eig(d);
  if (d == 1) {
    eig(0) = opts.max_eigenvalue;
  } else {
    for (Eigen::Index k = 0; k < d; ++k)
      eig(k) = opts.min_eigenvalue + (opts.max_eigenvalue - opts.min_eigenvalue) *
                                         static_cast<double>(k) / static_cast<double>(d - 1);
    eig(d - 1) = opts.max_eigenvalue;
  }
  const Matrix q = random_orthogonal(d, rng);
  Matrix sigma = q * eig.asDiagonal() * q.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  Matrix cov = q * eig.cwiseInverse().asDiagonal() * q.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();

  QuadraticPotential potential(std::move(sigma), std::move(centers));
  TargetGaussian target{potential.mean_center(), std::move(cov)};
  return {std::move(potential), std::move(target)};
}

}  // namespace svrhmc

#endif  // SVRHMC_MODEL_HPP
