#ifndef SVRHMC_ACCOUNTING_HPP
#define SVRHMC_ACCOUNTING_HPP

// Component-gradient bookkeeping. One "evaluation" is one call of grad f_i;
// a data pass is n evaluations.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "svrhmc/errors.hpp"

namespace svrhmc {

enum class SamplerKind { svrhmc, hmc, sghmc, lmc, sgld, vrsgld };

inline constexpr SamplerKind kAllSamplers[] = {SamplerKind::svrhmc, SamplerKind::hmc,
                                               SamplerKind::sghmc,  SamplerKind::lmc,
                                               SamplerKind::sgld,   SamplerKind::vrsgld};

constexpr std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::svrhmc: return "svrhmc";
    case SamplerKind::hmc: return "hmc";
    case SamplerKind::sghmc: return "sghmc";
    case SamplerKind::lmc: return "lmc";
    case SamplerKind::sgld: return "sgld";
    case SamplerKind::vrsgld: return "vrsgld";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(std::string_view name) {
  for (SamplerKind k : kAllSamplers)
    if (to_string(k) == name) return k;
  throw usage_error("unknown sampler '" + std::string(name) +
                    "' (expected svrhmc, hmc, sghmc, lmc, sgld or vrsgld)");
}

// Position/velocity dynamics (HMC family) vs. overdamped Langevin.
constexpr bool is_underdamped(SamplerKind k) {
  return k == SamplerKind::svrhmc || k == SamplerKind::hmc || k == SamplerKind::sghmc;
}

constexpr bool is_variance_reduced(SamplerKind k) {
  return k == SamplerKind::svrhmc || k == SamplerKind::vrsgld;
}

constexpr bool uses_minibatch(SamplerKind k) {
  return k == SamplerKind::sghmc || k == SamplerKind::sgld;
}

// Accumulates evaluation events from a running chain:
//   full gradient          -> n
//   semi-stochastic grad   -> 2 (grad f_i at x_k and at the snapshot; the
//                                stored full gradient is free)
//   minibatch gradient     -> batch size
class GradientAccountant {
 public:
  explicit GradientAccountant(std::size_t n) : n_(n) {
    if (n == 0) throw usage_error("GradientAccountant: n must be >= 1");
  }

  void full_gradient() { evaluations_ += n_; }
  void semi_stochastic_gradient() { evaluations_ += 2; }
  void minibatch_gradient(std::size_t batch) { evaluations_ += batch; }

  std::size_t evaluations() const { return evaluations_; }
  std::size_t components() const { return n_; }
  double data_passes() const {
    return static_cast<double>(evaluations_) / static_cast<double>(n_);
  }

 private:
  std::size_t n_;
  std::size_t evaluations_ = 0;
};

// Closed-form evaluation count after `iterations` steps. `batch` is the
// effective minibatch size (n when the batch is enumerated).
constexpr std::size_t expected_evaluations(SamplerKind kind, std::size_t iterations,
                                           std::size_t n, std::size_t epoch_length,
                                           std::size_t batch) {
  switch (kind) {
    case SamplerKind::svrhmc:
    case SamplerKind::vrsgld: {
      const std::size_t epochs = (iterations + epoch_length - 1) / epoch_length;
      return epochs * n + 2 * iterations;
    }
    case SamplerKind::hmc:
    case SamplerKind::lmc: return iterations * n;
    case SamplerKind::sghmc:
    case SamplerKind::sgld: return iterations * batch;
  }
  return 0;
}

// Largest K whose evaluation count stays within `passes` data passes.
inline std::size_t iterations_for_budget(SamplerKind kind, double passes, std::size_t n,
                                         std::size_t epoch_length, std::size_t batch) {
  if (!(passes > 0) || n == 0 || epoch_length == 0 || batch == 0)
    throw usage_error("iterations_for_budget: arguments must be positive");
  const auto budget = static_cast<std::size_t>(passes * static_cast<double>(n) + 1e-9);
  std::size_t lo = 0, hi = budget + 1;  // every iteration costs >= 1 evaluation
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (expected_evaluations(kind, mid, n, epoch_length, batch) <= budget)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace svrhmc

#endif  // SVRHMC_ACCOUNTING_HPP
