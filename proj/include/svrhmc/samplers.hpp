#ifndef SVRHMC_SAMPLERS_HPP
#define SVRHMC_SAMPLERS_HPP

// Stochastic variance-reduced HMC and the five baselines it is compared with.
//
// Underdamped family (SVR-HMC, HMC, SG-HMC) share one kinetic update
//
//   x' = x + eta v + eps_x
//   v' = v - gamma eta v - eta u g + eps_v
//
// and differ only in the gradient estimate g. The overdamped family (LMC,
// SGLD, VR-SGLD) uses x' = x - eta g + sqrt(2 eta) eps.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "svrhmc/accounting.hpp"
#include "svrhmc/errors.hpp"
#include "svrhmc/model.hpp"
#include "svrhmc/noise.hpp"
#include "svrhmc/random.hpp"

namespace svrhmc {

struct KineticState {
  Vector x;
  Vector v;
};

struct SamplerConfig {
  double eta = 0;
  double gamma = 2.0;
  std::optional<double> u;                   // inverse mass; 1/L when unset
  std::optional<std::size_t> epoch_length;   // m; n when unset
  std::size_t iterations = 1;                // K
  std::uint64_t seed = 0;
  std::size_t batch_size = 1;
  // Test hooks.
  bool zero_noise = false;
  bool enumerate_batch = false;  // minibatch = all of 0..n-1, in order
};

// SamplerConfig with defaults filled in against a concrete potential.
struct ResolvedConfig {
  double eta;
  double gamma;
  double u;
  std::size_t epoch_length;
  std::size_t iterations;
  std::size_t batch_size;  // effective: n when enumerating
};

template <FiniteSumPotential P>
ResolvedConfig resolve(const SamplerConfig& cfg, const P& p) {
  if (!(cfg.eta > 0) || !std::isfinite(cfg.eta))
    throw usage_error("sampler config: eta must be finite and > 0");
  if (!(cfg.gamma > 0)) throw usage_error("sampler config: gamma must be > 0");
  if (cfg.iterations == 0) throw usage_error("sampler config: iterations must be >= 1");
  ResolvedConfig r{};
  r.eta = cfg.eta;
  r.gamma = cfg.gamma;
  if (cfg.u) {
    if (!(*cfg.u > 0)) throw usage_error("sampler config: u must be > 0");
    r.u = *cfg.u;
  } else if (auto L = p.smoothness()) {
    r.u = 1.0 / *L;
  } else {
    throw usage_error("sampler config: u must be given when the potential declares no L");
  }
  r.epoch_length = cfg.epoch_length.value_or(p.size());
  if (r.epoch_length == 0) throw usage_error("sampler config: epoch length must be >= 1");
  r.iterations = cfg.iterations;
  if (cfg.enumerate_batch) {
    r.batch_size = p.size();
  } else {
    if (cfg.batch_size == 0 || cfg.batch_size > p.size())
      throw usage_error("sampler config: batch size must be in [1, n]");
    r.batch_size = cfg.batch_size;
  }
  return r;
}

// Snapshot x~ of an epoch with the full gradient stored alongside.
struct EpochAnchor {
  Vector x_tilde;
  Vector g_tilde;
};

template <FiniteSumPotential P>
EpochAnchor make_anchor(const P& p, const Vector& x) {
  return {x, grad_full(p, x)};
}

namespace detail {

inline void check_finite_state(const KineticState& s, std::size_t k) {
  if (!s.x.allFinite()) throw divergence_error(k, "non-finite position");
  if (s.v.size() != 0 && !s.v.allFinite()) throw divergence_error(k, "non-finite velocity");
}

// g = grad f_i(x) - grad f_i(x~) + g~, evaluated as (a - b) + c.
template <FiniteSumPotential P>
void semi_stochastic_gradient_into(const P& p, const EpochAnchor& anchor, const Vector& x,
                                   std::size_t i, Vector& out, Vector& scratch) {
  out.resize(x.size());
  scratch.resize(x.size());
  p.component_gradient(i, x, out);
  p.component_gradient(i, anchor.x_tilde, scratch);
  out -= scratch;
  out += anchor.g_tilde;
}

inline std::size_t draw_index(std::size_t n, Engine& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Uniform with replacement, or 0..n-1 in order when enumerating.
inline void draw_minibatch(std::size_t n, std::size_t batch, bool enumerate, Engine& rng,
                           std::vector<std::size_t>& out) {
  if (enumerate) {
    out.resize(n);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return;
  }
  out.resize(batch);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (auto& i : out) i = pick(rng);
}

}  // namespace detail

template <FiniteSumPotential P>
Vector semi_stochastic_gradient(const P& p, const EpochAnchor& anchor, const Vector& x,
                                std::size_t i) {
  detail::require_dim(p, x);
  detail::require_dim(p, anchor.x_tilde);
  detail::require_dim(p, anchor.g_tilde);
  if (i >= p.size()) throw usage_error("semi_stochastic_gradient: index out of range");
  Vector out, scratch;
  detail::semi_stochastic_gradient_into(p, anchor, x, i, out, scratch);
  return out;
}

// One kinetic update given a gradient estimate g at state.x. Step size,
// friction and inverse mass are those the noise model was built with.
// x' is formed from the old velocity.
inline void svr_hmc_step(KineticState& state, const Vector& g, const NoiseModel& noise,
                         Engine& rng, bool zero_noise = false, std::size_t k = 0) {
  const double eta = noise.eta;
  if (zero_noise) {
    state.x += eta * state.v;
    state.v += -noise.gamma * eta * state.v - eta * noise.u * g;
  } else {
    Vector eps_x, eps_v;
    sample_noise_pair_into(noise, static_cast<std::size_t>(state.x.size()), rng, eps_x, eps_v);
    state.x += eta * state.v + eps_x;
    state.v += -noise.gamma * eta * state.v - eta * noise.u * g + eps_v;
  }
  detail::check_finite_state(state, k);
}

template <FiniteSumPotential P>
void hmc_step(KineticState& state, const P& p, const NoiseModel& noise, Engine& rng,
              bool zero_noise = false, std::size_t k = 0) {
  Vector g, scratch;
  grad_full_into(p, state.x, g, scratch);
  svr_hmc_step(state, g, noise, rng, zero_noise, k);
}

template <FiniteSumPotential P>
void sghmc_step(KineticState& state, const P& p, std::size_t batch, bool enumerate,
                const NoiseModel& noise, ChainStreams& streams, bool zero_noise = false,
                std::size_t k = 0) {
  std::vector<std::size_t> idx;
  detail::draw_minibatch(p.size(), batch, enumerate, streams.index, idx);
  Vector g, scratch;
  average_gradient_into(p, idx, state.x, g, scratch);
  svr_hmc_step(state, g, noise, streams.noise, zero_noise, k);
}

// Overdamped update x' = x - eta g + sqrt(2 eta) eps (inverse temperature 1).
inline void langevin_step(KineticState& state, const Vector& g, double eta, Engine& rng,
                          bool zero_noise = false, std::size_t k = 0) {
  state.x -= eta * g;
  if (!zero_noise) {
    std::normal_distribution<double> normal;
    const double scale = std::sqrt(2.0 * eta);
    for (Eigen::Index j = 0; j < state.x.size(); ++j) state.x(j) += scale * normal(rng);
  }
  detail::check_finite_state(state, k);
}

template <FiniteSumPotential P>
void lmc_step(KineticState& state, const P& p, double eta, Engine& rng,
              bool zero_noise = false, std::size_t k = 0) {
  Vector g, scratch;
  grad_full_into(p, state.x, g, scratch);
  langevin_step(state, g, eta, rng, zero_noise, k);
}

template <FiniteSumPotential P>
void sgld_step(KineticState& state, const P& p, double eta, std::size_t batch, bool enumerate,
               ChainStreams& streams, bool zero_noise = false, std::size_t k = 0) {
  std::vector<std::size_t> idx;
  detail::draw_minibatch(p.size(), batch, enumerate, streams.index, idx);
  Vector g, scratch;
  average_gradient_into(p, idx, state.x, g, scratch);
  langevin_step(state, g, eta, streams.noise, zero_noise, k);
}

template <FiniteSumPotential P>
void vr_sgld_step(KineticState& state, const P& p, const EpochAnchor& anchor, std::size_t i,
                  double eta, Engine& rng, bool zero_noise = false, std::size_t k = 0) {
  Vector g, scratch;
  detail::semi_stochastic_gradient_into(p, anchor, state.x, i, g, scratch);
  langevin_step(state, g, eta, rng, zero_noise, k);
}

// ---------------------------------------------------------------------------
// Chain driver.

// on_iterate receives (k, x_k, cumulative evaluations) for k = 1..K, i.e. after
// every step. on_epoch receives (j, x~_j, evaluations) right after the
// epoch's full gradient has been taken (variance-reduced samplers only).
struct ChainObserver {
  std::function<void(std::size_t, const Vector&, std::size_t)> on_iterate;
  std::function<void(std::size_t, const Vector&, std::size_t)> on_epoch;
};

struct RunResult {
  KineticState state;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
};

namespace detail {

template <FiniteSumPotential P>
class ChainRunner {
 public:
  ChainRunner(const P& p, SamplerKind kind, const SamplerConfig& cfg)
      : p_(p),
        kind_(kind),
        cfg_(cfg),
        rc_(resolve(cfg, p)),
        streams_(cfg.seed),
        accountant_(p.size()) {
    if (is_underdamped(kind)) noise_ = build_noise_model(rc_.gamma, rc_.u, rc_.eta);
  }

  RunResult run(KineticState state, const ChainObserver& obs) {
    require_dim(p_, state.x);
    require_finite(state.x, "initial position");
    if (is_underdamped(kind_)) {
      if (state.v.size() == 0) state.v = Vector::Zero(state.x.size());
      require_dim(p_, state.v);
      require_finite(state.v, "initial velocity");
    }
    const Index d = state.x.size();
    g_.resize(d);
    scratch_.resize(d);
    if (is_variance_reduced(kind_))
      run_variance_reduced(state, obs);
    else
      run_plain(state, obs);
    return {std::move(state), rc_.iterations, accountant_.evaluations()};
  }

 private:
  using Index = Eigen::Index;

  void advance(KineticState& state, std::size_t k) {
    if (is_underdamped(kind_))
      svr_hmc_step(state, g_, noise_, streams_.noise, cfg_.zero_noise, k);
    else
      langevin_step(state, g_, rc_.eta, streams_.noise, cfg_.zero_noise, k);
  }

  // Epochs of length m: full gradient at the snapshot, then semi-stochastic
  // steps; the last inner step writes x_{k+1} into the snapshot. Stops after
  // exactly K steps, possibly mid-epoch.
  void run_variance_reduced(KineticState& state, const ChainObserver& obs) {
    const std::size_t K = rc_.iterations, m = rc_.epoch_length, n = p_.size();
    EpochAnchor anchor{state.x, Vector()};
    std::size_t k = 0;
    for (std::size_t j = 0; k < K; ++j) {
      grad_full_into(p_, anchor.x_tilde, anchor.g_tilde, scratch_);
      accountant_.full_gradient();
      if (obs.on_epoch) obs.on_epoch(j, anchor.x_tilde, accountant_.evaluations());
      for (std::size_t l = 0; l < m && k < K; ++l, ++k) {
        const std::size_t i = draw_index(n, streams_.index);
        semi_stochastic_gradient_into(p_, anchor, state.x, i, g_, scratch_);
        accountant_.semi_stochastic_gradient();
        advance(state, k);
        if (l == m - 1) anchor.x_tilde = state.x;
        if (obs.on_iterate) obs.on_iterate(k + 1, state.x, accountant_.evaluations());
      }
    }
  }

  void run_plain(KineticState& state, const ChainObserver& obs) {
    const std::size_t K = rc_.iterations;
    for (std::size_t k = 0; k < K; ++k) {
      if (uses_minibatch(kind_)) {
        draw_minibatch(p_.size(), rc_.batch_size, cfg_.enumerate_batch, streams_.index, batch_);
        average_gradient_into(p_, batch_, state.x, g_, scratch_);
        accountant_.minibatch_gradient(batch_.size());
      } else {
        grad_full_into(p_, state.x, g_, scratch_);
        accountant_.full_gradient();
      }
      advance(state, k);
      if (obs.on_iterate) obs.on_iterate(k + 1, state.x, accountant_.evaluations());
    }
  }

  const P& p_;
  SamplerKind kind_;
  SamplerConfig cfg_;
  ResolvedConfig rc_;
  ChainStreams streams_;
  GradientAccountant accountant_;
  NoiseModel noise_{};
  Vector g_, scratch_;
  std::vector<std::size_t> batch_;
};

}  // namespace detail

template <FiniteSumPotential P>
RunResult run_chain(const P& p, SamplerKind kind, const SamplerConfig& cfg, KineticState init,
                    const ChainObserver& obs = {}) {
  detail::ChainRunner<P> runner(p, kind, cfg);
  return runner.run(std::move(init), obs);
}

template <FiniteSumPotential P>
RunResult svr_hmc_run(const P& p, const SamplerConfig& cfg, KineticState init,
                      const ChainObserver& obs = {}) {
  return run_chain(p, SamplerKind::svrhmc, cfg, std::move(init), obs);
}

// ---------------------------------------------------------------------------
// Initialisation.

struct InitOptions {
  // 100 gradient-descent steps with step 1/L from x0 = 0.
  bool warm_start = false;
  std::size_t warm_start_steps = 100;
  // v0 ~ N(0, u I) instead of v0 = 0.
  bool stationary_velocity = false;
};

template <FiniteSumPotential P>
Vector warm_start_position(const P& p, std::size_t steps = 100) {
  const auto L = p.smoothness();
  if (!L) throw usage_error("warm start needs a declared smoothness constant");
  Vector x = Vector::Zero(static_cast<Eigen::Index>(p.dim()));
  Vector g, scratch;
  for (std::size_t s = 0; s < steps; ++s) {
    grad_full_into(p, x, g, scratch);
    x -= g / *L;
  }
  if (!x.allFinite()) throw numeric_error("warm start produced a non-finite point");
  return x;
}

// Gradient evaluations spent by a warm start are not charged to the chain.
template <FiniteSumPotential P>
KineticState initial_state(const P& p, const SamplerConfig& cfg, const InitOptions& opts = {}) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  KineticState s{opts.warm_start ? warm_start_position(p, opts.warm_start_steps)
                                 : Vector(Vector::Zero(d)),
                 Vector::Zero(d)};
  if (opts.stationary_velocity) {
    const double u = resolve(cfg, p).u;
    Engine rng(derive_seed(cfg.seed, 0, 0, 3));
    std::normal_distribution<double> normal(0.0, std::sqrt(u));
    for (Eigen::Index j = 0; j < d; ++j) s.v(j) = normal(rng);
  }
  return s;
}

}  // namespace svrhmc

#endif  // SVRHMC_SAMPLERS_HPP
