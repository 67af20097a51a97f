#ifndef SVRHMC_METRICS_HPP
#define SVRHMC_METRICS_HPP

// Evaluation quantities: cross-chain moments, the closed-form 2-Wasserstein
// distance between Gaussians (Bures metric), test-set metrics for the
// regression experiments, and the burn-in path average.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "svrhmc/errors.hpp"
#include "svrhmc/model.hpp"

namespace svrhmc {

// Eigenvalues in [-kPsdTolerance, 0) are treated as roundoff and clamped.
inline constexpr double kPsdTolerance = 1e-10;

struct GaussianMoments {
  Vector mean;
  Matrix covariance;
  std::size_t sample_count = 0;
};

// Streaming mean/scatter accumulator (Welford), mergeable with Chan's pairwise
// update so per-worker partials can be combined.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Eigen::Index d) : mean_(Vector::Zero(d)), scatter_(Matrix::Zero(d, d)) {}

  void add(const Vector& x) {
    if (x.size() != mean_.size()) throw usage_error("MomentAccumulator: dimension mismatch");
    ++count_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    scatter_.noalias() += delta * (x - mean_).transpose();
  }

  void merge(const MomentAccumulator& other) {
    if (other.mean_.size() != mean_.size())
      throw usage_error("MomentAccumulator: dimension mismatch");
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count_), nb = static_cast<double>(other.count_);
    const double total = na + nb;
    const Vector delta = other.mean_ - mean_;
    mean_ += delta * (nb / total);
    scatter_ += other.scatter_ + (na * nb / total) * (delta * delta.transpose());
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }

  // Unbiased (divisor count - 1).
  GaussianMoments moments() const {
    if (count_ < 2) throw usage_error("empirical moments need at least 2 samples");
    Matrix cov = scatter_ / static_cast<double>(count_ - 1);
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {mean_, std::move(cov), count_};
  }

 private:
  Vector mean_;
  Matrix scatter_;
  std::size_t count_ = 0;
};

// Two-pass mean and unbiased covariance of the columns of `samples` (d x N).
// Columns are accumulated in lexicographic order, so the result is
// bit-identical under any permutation of the columns.
inline GaussianMoments empirical_moments(const Matrix& samples) {
  const Eigen::Index count = samples.cols();
  if (count < 2) throw usage_error("empirical moments need at least 2 samples");
  if (!samples.allFinite()) throw numeric_error("empirical moments: non-finite sample");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < samples.rows(); ++j)
      if (samples(j, a) != samples(j, b)) return samples(j, a) < samples(j, b);
    return false;
  });
  const Eigen::Index d = samples.rows();
  Vector mean = Vector::Zero(d);
  for (Eigen::Index c : order) mean += samples.col(c);
  mean /= static_cast<double>(count);
  Matrix cov = Matrix::Zero(d, d);
  for (Eigen::Index c : order) {
    const Vector r = samples.col(c) - mean;
    cov.noalias() += r * r.transpose();
  }
  cov /= static_cast<double>(count - 1);
  cov = 0.5 * (cov + cov.transpose()).eval();
  if (!mean.allFinite() || !cov.allFinite()) throw numeric_error("empirical moments: overflow");
  return {std::move(mean), std::move(cov), static_cast<std::size_t>(count)};
}

inline GaussianMoments empirical_moments(std::span<const Vector> samples) {
  if (samples.size() < 2) throw usage_error("empirical moments need at least 2 samples");
  Matrix m(samples.front().size(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].size() != m.rows()) throw usage_error("empirical moments: ragged samples");
    m.col(static_cast<Eigen::Index>(i)) = samples[i];
  }
  return empirical_moments(m);
}

// Principal square root of a symmetric PSD matrix via eigendecomposition.
inline Matrix sqrtm_psd(const Matrix& c) {
  if (c.rows() != c.cols()) throw usage_error("sqrtm_psd: matrix must be square");
  const Matrix sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw numeric_error("sqrtm_psd: eigendecomposition failed");
  Vector ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -kPsdTolerance * scale)
      throw numeric_error("sqrtm_psd: matrix is not positive semidefinite (eigenvalue " +
                          std::to_string(ev(i)) + ")");
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// W2(N(ma, Ca), N(mb, Cb))^2 = |ma - mb|^2 + tr(Ca + Cb - 2 (Cb^{1/2} Ca Cb^{1/2})^{1/2}).
inline double gaussian_w2(const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b,
                          const Matrix& cov_b) {
  const auto d = mean_a.size();
  if (mean_b.size() != d || cov_a.rows() != d || cov_a.cols() != d || cov_b.rows() != d ||
      cov_b.cols() != d)
    throw usage_error("gaussian_w2: dimension mismatch");
  // tr((Cb^{1/2} Ca Cb^{1/2})^{1/2}) is the nuclear norm of Ca^{1/2} Cb^{1/2}.
  const Matrix product = sqrtm_psd(cov_a) * sqrtm_psd(cov_b);
  const double cross = Eigen::JacobiSVD<Matrix>(product).singularValues().sum();
  const double trace_term = cov_a.trace() + cov_b.trace() - 2.0 * cross;
  const double sq = (mean_a - mean_b).squaredNorm() + trace_term;
  return std::sqrt(std::max(sq, 0.0));
}

inline double gaussian_w2(const GaussianMoments& a, const GaussianMoments& b) {
  return gaussian_w2(a.mean, a.covariance, b.mean, b.covariance);
}

// Moment-matched W2 between same-iteration snapshots (columns, d x chains) and
// a Gaussian target. Exact for Gaussian chain laws; an approximation otherwise.
inline double w2_to_target(const Matrix& snapshots, const TargetGaussian& target) {
  const GaussianMoments m = empirical_moments(snapshots);
  return gaussian_w2(m.mean, m.covariance, target.mean, target.covariance);
}

struct ClassificationMetrics {
  double nll;         // mean over test rows of log(1 + exp(-y x^T a))
  double error_rate;  // sign(x^T a) != y, with sign(0) = +1
};

// `features` n_test x d, labels in {-1,+1}.
inline ClassificationMetrics logistic_test_metrics(const Vector& x, const Matrix& features,
                                                   const Vector& labels) {
  if (features.rows() == 0) throw usage_error("logistic_test_metrics: empty test set");
  if (labels.size() != features.rows() || x.size() != features.cols())
    throw usage_error("logistic_test_metrics: dimension mismatch");
  const Vector scores = features * x;
  double nll = 0;
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double y = labels(i);
    if (y != 1.0 && y != -1.0) throw usage_error("logistic_test_metrics: labels must be -1 or +1");
    nll += detail::softplus(-y * scores(i));
    const double predicted = scores(i) >= 0 ? 1.0 : -1.0;
    if (predicted != y) ++wrong;
  }
  const double n = static_cast<double>(scores.size());
  return {nll / n, static_cast<double>(wrong) / n};
}

inline double linear_test_mse(const Vector& x, const Matrix& features, const Vector& responses) {
  if (features.rows() == 0) throw usage_error("linear_test_mse: empty test set");
  if (responses.size() != features.rows() || x.size() != features.cols())
    throw usage_error("linear_test_mse: dimension mismatch");
  return (responses - features * x).squaredNorm() / static_cast<double>(features.rows());
}

// Running mean of the iterates that follow the first `burn_in` ones.
class PathAverage {
 public:
  explicit PathAverage(std::size_t burn_in = 0) : burn_in_(burn_in) {}

  void add(const Vector& x) {
    ++seen_;
    if (seen_ <= burn_in_) return;
    const std::size_t k = seen_ - burn_in_;
    if (k == 1)
      mean_ = x;
    else
      mean_ += (x - mean_) / static_cast<double>(k);
  }

  std::size_t seen() const { return seen_; }
  std::size_t averaged() const { return seen_ > burn_in_ ? seen_ - burn_in_ : 0; }
  bool ready() const { return averaged() > 0; }

  const Vector& value() const {
    if (!ready())
      throw usage_error("path average: need more than burn_in = " + std::to_string(burn_in_) +
                        " iterates");
    return mean_;
  }

 private:
  std::size_t burn_in_;
  std::size_t seen_ = 0;
  Vector mean_;
};

inline Vector path_average(std::span<const Vector> iterates, std::size_t burn_in) {
  PathAverage avg(burn_in);
  for (const auto& x : iterates) avg.add(x);
  return avg.value();
}

}  // namespace svrhmc

#endif  // SVRHMC_METRICS_HPP
