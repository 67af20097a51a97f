#ifndef SVRHMC_HARNESS_HPP
#define SVRHMC_HARNESS_HPP

// Experiment drivers. Each driver is a pure function of ExperimentConfig: it
// builds the potential, runs independent chains with seeds derived from
// (seed, chain, repeat), and returns trace rows keyed by data passes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "svrhmc/accounting.hpp"
#include "svrhmc/data.hpp"
#include "svrhmc/errors.hpp"
#include "svrhmc/metrics.hpp"
#include "svrhmc/model.hpp"
#include "svrhmc/random.hpp"
#include "svrhmc/samplers.hpp"
#include "svrhmc/theory.hpp"

namespace svrhmc {

enum class Task { synthetic, logistic, linreg };

constexpr std::string_view to_string(Task t) {
  switch (t) {
    case Task::synthetic: return "synthetic";
    case Task::logistic: return "logistic";
    case Task::linreg: return "linreg";
  }
  return "?";
}

inline Task parse_task(std::string_view name) {
  for (Task t : {Task::synthetic, Task::logistic, Task::linreg})
    if (to_string(t) == name) return t;
  throw usage_error("unknown task '" + std::string(name) + "'");
}

struct ExperimentConfig {
  Task task = Task::synthetic;
  SamplerKind sampler = SamplerKind::svrhmc;

  // synthetic problem size
  std::size_t n = 50;
  std::size_t d = 2;
  // dataset for logistic / linreg
  std::string data_path;
  long response_column = -1;
  double split = 0.5;
  bool intercept = true;  // logistic only

  // sampler; eta is tuned on the step-size grid when neither eta nor epsilon is set
  std::optional<double> eta;
  std::optional<double> epsilon;  // step-size rule target accuracy (synthetic)
  double gamma = 2.0;
  std::optional<double> u;
  std::optional<std::size_t> epoch_length;
  std::optional<std::size_t> iterations;  // overrides the data-pass budget
  std::size_t batch = 1;
  bool zero_noise = false;
  bool warm_start = false;
  bool stationary_velocity = false;

  std::uint64_t seed = 0;
  std::size_t chains = 2000;
  std::size_t repeats = 1;
  std::size_t burn_in = 50;
  double data_passes = 10;
  double lambda = 1.0;
  double sigma_a_sq = 1.0;
  std::optional<std::size_t> stride;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct TraceRecord {
  std::string task;
  std::string sampler;
  std::uint64_t seed = 0;
  double data_pass = 0;
  std::size_t iteration = 0;
  std::string metric;
  double value = 0;
};

struct TuningResult {
  std::vector<double> grid;
  std::vector<double> scores;  // +inf for diverged settings
  double chosen = 0;
};

struct ExperimentResult {
  std::vector<TraceRecord> records;
  double eta = 0;
  std::size_t iterations = 0;
  std::size_t epoch_length = 0;
  std::optional<TuningResult> tuning;
  std::vector<std::string> notes;
};

// ---------------------------------------------------------------------------
// CSV.

inline constexpr std::string_view kCsvHeader = "task,sampler,seed,data_pass,iteration,metric,value";

inline void write_csv(std::ostream& out, const std::vector<TraceRecord>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows)
    out << r.task << ',' << r.sampler << ',' << r.seed << ',' << detail::format_double(r.data_pass)
        << ',' << r.iteration << ',' << r.metric << ',' << detail::format_double(r.value) << '\n';
}

inline std::vector<TraceRecord> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != kCsvHeader)
    throw parse_error(1, 0, "missing or unexpected CSV header");
  std::vector<TraceRecord> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto cells = detail::split_on(line, ',');
    if (cells.size() != 7) throw parse_error(line_no, 0, "expected 7 columns");
    TraceRecord r;
    r.task = cells[0];
    r.sampler = cells[1];
    const auto seed = detail::to_index(cells[2]);
    const auto pass = detail::to_double(cells[3]);
    const auto iter = detail::to_index(cells[4]);
    const auto value = detail::to_double(cells[6]);
    if (!seed) throw parse_error(line_no, 3, "bad seed");
    if (!pass) throw parse_error(line_no, 4, "bad data_pass");
    if (!iter) throw parse_error(line_no, 5, "bad iteration");
    if (!value) throw parse_error(line_no, 7, "bad value");
    r.seed = *seed;
    r.data_pass = *pass;
    r.iteration = *iter;
    r.metric = cells[5];
    r.value = *value;
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.chains == 0 || cfg.repeats == 0) throw usage_error("chains and repeats must be >= 1");
  if (cfg.task == Task::synthetic && (cfg.n == 0 || cfg.d == 0))
    throw usage_error("synthetic task needs n, d >= 1");
  if (cfg.task != Task::synthetic && cfg.data_path.empty())
    throw usage_error(std::string(to_string(cfg.task)) + " task needs --data");
  if (!(cfg.data_passes > 0)) throw usage_error("data passes must be > 0");
  if (cfg.eta && !(*cfg.eta > 0)) throw usage_error("eta must be > 0");
  if (cfg.epsilon && !(*cfg.epsilon > 0)) throw usage_error("epsilon must be > 0");
  if (cfg.batch == 0) throw usage_error("batch must be >= 1");
  if (cfg.stride && *cfg.stride == 0) throw usage_error("stride must be >= 1");
  if (cfg.epoch_length && *cfg.epoch_length == 0) throw usage_error("epoch length must be >= 1");
  if (cfg.iterations && *cfg.iterations == 0) throw usage_error("iterations must be >= 1");
  if (!(cfg.split > 0 && cfg.split < 1)) throw usage_error("split must be in (0, 1)");
  if (cfg.task == Task::linreg && !(cfg.sigma_a_sq > 0)) throw usage_error("sigma_a_sq must be > 0");
  if (cfg.task != Task::synthetic && !(cfg.lambda >= 0)) throw usage_error("lambda must be >= 0");
  if (cfg.zero_noise && cfg.chains > 1 && cfg.task == Task::synthetic)
    throw usage_error("zero-noise chains are identical; use --chains 1");
}

// Step-size grid {1e-1, 1e-2, 1e-3, 1e-4} in each sampler's natural unit:
// 1/L for the overdamped samplers, 1/(u L) for the underdamped ones (which is
// 1 at the default u = 1/L).
template <FiniteSumPotential P>
std::vector<double> step_size_grid(const P& p, SamplerKind kind, std::optional<double> u) {
  const auto L = p.smoothness();
  if (!L) throw usage_error("step-size grid needs a declared smoothness constant");
  const double unit = is_underdamped(kind) ? 1.0 / (u.value_or(1.0 / *L) * *L) : 1.0 / *L;
  return {1e-1 * unit, 1e-2 * unit, 1e-3 * unit, 1e-4 * unit};
}

template <FiniteSumPotential P>
SamplerConfig sampler_config(const ExperimentConfig& cfg, const P& p, double eta) {
  SamplerConfig sc;
  sc.eta = eta;
  sc.gamma = cfg.gamma;
  sc.u = cfg.u;
  sc.epoch_length = cfg.epoch_length.value_or(p.size());
  sc.batch_size = cfg.batch;
  sc.zero_noise = cfg.zero_noise;
  const std::size_t batch = std::min(cfg.batch, p.size());
  sc.iterations = cfg.iterations.value_or(iterations_for_budget(
      cfg.sampler, cfg.data_passes, p.size(), *sc.epoch_length, batch));
  if (sc.iterations == 0)
    throw usage_error("data-pass budget too small for a single iteration");
  return sc;
}

namespace detail {

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(t, jobs));
}

// Runs body(job) for job in [0, jobs) over contiguous blocks. Each job must
// write only to its own slots so the result does not depend on scheduling.
template <class F>
void parallel_for(std::size_t jobs, std::size_t threads, F&& body) {
  const std::size_t workers = worker_count(threads, jobs);
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) body(j);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (jobs + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t j = w * block; j < std::min(jobs, (w + 1) * block); ++j) body(j);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Iterations 1..K at which metrics are recorded: every stride-th plus K.
inline std::vector<std::size_t> record_points(std::size_t K, std::size_t stride) {
  std::vector<std::size_t> pts;
  for (std::size_t k = stride; k <= K; k += stride) pts.push_back(k);
  if (pts.empty() || pts.back() != K) pts.push_back(K);
  return pts;
}

struct MeanStd {
  double mean;
  double std;  // sample standard deviation; 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Synthetic Gaussian target: moment-matched W2 across chains per iteration.

struct SyntheticTrace {
  std::vector<std::size_t> iterations;
  std::vector<double> data_passes;
  std::vector<double> w2;
};

template <FiniteSumPotential P>
SyntheticTrace synthetic_w2_trace(const ExperimentConfig& cfg, const P& p,
                                  const TargetGaussian& target, const SamplerConfig& sc,
                                  std::uint64_t master_seed) {
  const std::size_t K = sc.iterations;
  const std::size_t stride = cfg.stride.value_or(std::max<std::size_t>(1, (K + 999) / 1000));
  const auto points = detail::record_points(K, stride);
  const auto d = static_cast<Eigen::Index>(p.dim());
  const auto C = static_cast<Eigen::Index>(cfg.chains);
  std::vector<Matrix> snapshots(points.size(), Matrix(d, C));
  std::vector<std::size_t> evals(points.size(), 0);

  detail::parallel_for(cfg.chains, cfg.threads, [&](std::size_t c) {
    SamplerConfig chain_cfg = sc;
    chain_cfg.seed = derive_seed(master_seed, c, 0);
    const KineticState init =
        initial_state(p, chain_cfg, {cfg.warm_start, 100, cfg.stationary_velocity});
    std::size_t next = 0;
    ChainObserver obs;
    obs.on_iterate = [&](std::size_t k, const Vector& x, std::size_t e) {
      if (next < points.size() && points[next] == k) {
        snapshots[next].col(static_cast<Eigen::Index>(c)) = x;
        if (c == 0) evals[next] = e;
        ++next;
      }
    };
    run_chain(p, cfg.sampler, chain_cfg, init, obs);
  });

  SyntheticTrace trace;
  for (std::size_t r = 0; r < points.size(); ++r) {
    trace.iterations.push_back(points[r]);
    trace.data_passes.push_back(static_cast<double>(evals[r]) / static_cast<double>(p.size()));
    trace.w2.push_back(cfg.chains >= 2 ? w2_to_target(snapshots[r], target)
                                       : std::numeric_limits<double>::quiet_NaN());
  }
  return trace;
}

inline SyntheticQuadratic synthetic_problem(const ExperimentConfig& cfg) {
  return synthetic_quadratic(static_cast<std::int64_t>(cfg.n), static_cast<std::int64_t>(cfg.d),
                             derive_seed(cfg.seed, 0, 0, 7));
}

// Final-iterate W2 for each grid step on a validation seed; picks the smallest.
inline TuningResult tune_synthetic(const ExperimentConfig& cfg, const SyntheticQuadratic& prob) {
  TuningResult t;
  t.grid = step_size_grid(prob.potential, cfg.sampler, cfg.u);
  const std::uint64_t validation_seed = derive_seed(cfg.seed, 0, 0, 99);
  double best = std::numeric_limits<double>::infinity();
  t.chosen = t.grid.front();
  for (double eta : t.grid) {
    double score = std::numeric_limits<double>::infinity();
    try {
      const SamplerConfig sc = sampler_config(cfg, prob.potential, eta);
      const auto trace = synthetic_w2_trace(cfg, prob.potential, prob.target, sc, validation_seed);
      if (std::isfinite(trace.w2.back())) score = trace.w2.back();
    } catch (const numeric_error&) {
    }
    t.scores.push_back(score);
    if (score < best) {
      best = score;
      t.chosen = eta;
    }
  }
  return t;
}

inline ExperimentResult run_synthetic(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.task != Task::synthetic) throw usage_error("run_synthetic: task must be synthetic");
  const SyntheticQuadratic prob = synthetic_problem(cfg);
  ExperimentResult res;
  if (cfg.eta) {
    res.eta = *cfg.eta;
  } else if (cfg.epsilon) {
    const double kappa = *prob.potential.smoothness() / *prob.potential.strong_convexity();
    const auto choice = select_step_size(*cfg.epsilon, kappa, cfg.d, cfg.n);
    res.eta = choice.eta;
    res.notes.push_back("eta from step-size rule with epsilon = " +
                        detail::format_double(*cfg.epsilon));
  } else {
    res.tuning = tune_synthetic(cfg, prob);
    res.eta = res.tuning->chosen;
  }
  ExperimentConfig run_cfg = cfg;
  if (cfg.epsilon && !cfg.eta && !cfg.epoch_length) run_cfg.epoch_length = cfg.n;
  const SamplerConfig sc = sampler_config(run_cfg, prob.potential, res.eta);
  res.iterations = sc.iterations;
  res.epoch_length = *sc.epoch_length;
  const auto trace = synthetic_w2_trace(run_cfg, prob.potential, prob.target, sc, cfg.seed);
  for (std::size_t r = 0; r < trace.iterations.size(); ++r)
    res.records.push_back({std::string(to_string(cfg.task)), std::string(to_string(cfg.sampler)),
                           cfg.seed, trace.data_passes[r], trace.iterations[r], "w2", trace.w2[r]});
  return res;
}

// ---------------------------------------------------------------------------
// Bayesian regression: path average after burn-in, test metrics per record.

namespace detail {

struct RepeatTrace {
  std::uint64_t seed;
  std::vector<std::size_t> iterations;
  std::vector<double> data_passes;
  std::vector<std::vector<double>> metrics;  // [metric][record]
};

// Runs one chain on `p`, feeding the burn-in path average to `evaluate` at the
// record points; `evaluate` returns one value per metric.
template <FiniteSumPotential P, class Eval>
RepeatTrace path_average_trace(const ExperimentConfig& cfg, const P& p, const SamplerConfig& sc,
                               std::uint64_t chain_seed, std::size_t metric_count,
                               Eval&& evaluate) {
  const std::size_t K = sc.iterations;
  const std::size_t stride =
      cfg.stride.value_or(std::max<std::size_t>(1, (p.size() + 9) / 10));
  const auto points = record_points(K, stride);
  RepeatTrace t{chain_seed, {}, {}, std::vector<std::vector<double>>(metric_count)};
  SamplerConfig chain_cfg = sc;
  chain_cfg.seed = chain_seed;
  PathAverage avg(cfg.burn_in);
  std::size_t next = 0;
  ChainObserver obs;
  obs.on_iterate = [&](std::size_t k, const Vector& x, std::size_t e) {
    avg.add(x);
    while (next < points.size() && points[next] < k) ++next;
    if (next < points.size() && points[next] == k && avg.ready()) {
      const std::vector<double> values = evaluate(avg.value());
      t.iterations.push_back(k);
      t.data_passes.push_back(static_cast<double>(e) / static_cast<double>(p.size()));
      for (std::size_t m = 0; m < metric_count; ++m) t.metrics[m].push_back(values[m]);
    }
  };
  const KineticState init = initial_state(p, chain_cfg, {cfg.warm_start, 100, cfg.stationary_velocity});
  run_chain(p, cfg.sampler, chain_cfg, init, obs);
  if (t.iterations.empty())
    throw usage_error("run too short: " + std::to_string(K) + " iterations do not exceed burn-in " +
                      std::to_string(cfg.burn_in));
  return t;
}

inline void emit_repeats(ExperimentResult& res, const ExperimentConfig& cfg,
                         const std::vector<RepeatTrace>& traces,
                         const std::vector<std::string>& metric_names) {
  const std::string task(to_string(cfg.task)), sampler(to_string(cfg.sampler));
  for (const auto& t : traces)
    for (std::size_t r = 0; r < t.iterations.size(); ++r)
      for (std::size_t m = 0; m < metric_names.size(); ++m)
        res.records.push_back(
            {task, sampler, t.seed, t.data_passes[r], t.iterations[r], metric_names[m], t.metrics[m][r]});
  // Summary rows over repeats.
  const auto& first = traces.front();
  for (std::size_t r = 0; r < first.iterations.size(); ++r) {
    for (std::size_t m = 0; m < metric_names.size(); ++m) {
      std::vector<double> vals;
      for (const auto& t : traces)
        if (r < t.iterations.size()) vals.push_back(t.metrics[m][r]);
      const auto s = mean_std(vals);
      res.records.push_back({task, sampler, cfg.seed, first.data_passes[r], first.iterations[r],
                             metric_names[m] + "_mean", s.mean});
      res.records.push_back({task, sampler, cfg.seed, first.data_passes[r], first.iterations[r],
                             metric_names[m] + "_std", s.std});
    }
  }
}

}  // namespace detail

struct RegressionSplit {
  Dataset train;
  Dataset test;
};

// Split for repeat r: its own shuffle seed, features standardised with
// training statistics (and responses too for linreg), intercept appended for
// logistic when requested.
inline RegressionSplit prepare_split(const ExperimentConfig& cfg, const Dataset& ds,
                                     std::uint64_t split_seed) {
  SplitOptions so;
  so.normalize_features = true;
  so.normalize_responses = cfg.task == Task::linreg;
  auto parts = split(ds, cfg.split, split_seed, so);
  if (cfg.task == Task::logistic && cfg.intercept) {
    parts.train = with_intercept(parts.train);
    parts.test = with_intercept(parts.test);
  }
  return {std::move(parts.train), std::move(parts.test)};
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.task == Task::logistic) return parse_libsvm_file(cfg.data_path);
  DelimitedOptions opts;
  opts.response_column = cfg.response_column;
  return parse_delimited_file(cfg.data_path, opts);
}

namespace detail {

template <class MakePotential, class Evaluate>
ExperimentResult run_regression(const ExperimentConfig& cfg, const Dataset& ds,
                                MakePotential&& make_potential, Evaluate&& evaluate,
                                const std::vector<std::string>& metric_names,
                                std::size_t tuning_metric) {
  ExperimentResult res;
  res.notes = ds.notes;

  auto run_repeat = [&](std::size_t r, std::optional<double> eta_override,
                        std::uint64_t master) -> std::pair<RepeatTrace, SamplerConfig> {
    const RegressionSplit parts = prepare_split(cfg, ds, derive_seed(master, 0, r, 11));
    const auto p = make_potential(parts.train);
    const double eta = eta_override.value_or(res.eta);
    const SamplerConfig sc = sampler_config(cfg, p, eta);
    auto trace = path_average_trace(cfg, p, sc, derive_seed(master, 0, r, 0), metric_names.size(),
                                    [&](const Vector& x) { return evaluate(x, parts.test); });
    return {std::move(trace), sc};
  };

  if (cfg.eta) {
    res.eta = *cfg.eta;
  } else {
    // Grid search on a validation split/seed that none of the reported
    // repeats use.
    const RegressionSplit parts = prepare_split(cfg, ds, derive_seed(cfg.seed, 0, 0, 98));
    TuningResult t;
    t.grid = step_size_grid(make_potential(parts.train), cfg.sampler, cfg.u);
    double best = std::numeric_limits<double>::infinity();
    t.chosen = t.grid.front();
    const std::uint64_t validation_master = derive_seed(cfg.seed, 0, 0, 99);
    for (double eta : t.grid) {
      double score = std::numeric_limits<double>::infinity();
      try {
        const auto [trace, sc] = run_repeat(0, eta, validation_master);
        const double v = trace.metrics[tuning_metric].back();
        if (std::isfinite(v)) score = v;
      } catch (const numeric_error&) {
      }
      t.scores.push_back(score);
      if (score < best) {
        best = score;
        t.chosen = eta;
      }
    }
    res.eta = t.chosen;
    res.tuning = t;
  }

  std::vector<RepeatTrace> traces(cfg.repeats);
  std::vector<SamplerConfig> configs(cfg.repeats);
  parallel_for(cfg.repeats, cfg.threads, [&](std::size_t r) {
    auto [trace, sc] = run_repeat(r, std::nullopt, cfg.seed);
    traces[r] = std::move(trace);
    configs[r] = sc;
  });
  res.iterations = configs.front().iterations;
  res.epoch_length = *configs.front().epoch_length;
  emit_repeats(res, cfg, traces, metric_names);
  return res;
}

}  // namespace detail

inline ExperimentResult run_logistic(const ExperimentConfig& cfg, const Dataset& ds) {
  validate(cfg);
  if (cfg.task != Task::logistic) throw usage_error("run_logistic: task must be logistic");
  if (ds.task != TaskType::classification) throw usage_error("run_logistic: need a classification dataset");
  return detail::run_regression(
      cfg, ds,
      [&](const Dataset& train) { return LogisticPotential(train.features, train.labels, cfg.lambda); },
      [](const Vector& x, const Dataset& test) {
        const auto m = logistic_test_metrics(x, test.features, test.labels);
        return std::vector<double>{m.nll, m.error_rate};
      },
      {"test_nll", "test_error"}, 0);
}

inline ExperimentResult run_logistic(const ExperimentConfig& cfg) {
  validate(cfg);
  return run_logistic(cfg, load_dataset(cfg));
}

inline ExperimentResult run_linreg(const ExperimentConfig& cfg, const Dataset& ds) {
  validate(cfg);
  if (cfg.task != Task::linreg) throw usage_error("run_linreg: task must be linreg");
  return detail::run_regression(
      cfg, ds,
      [&](const Dataset& train) {
        return LinearRegressionPotential(train.features, train.labels, cfg.sigma_a_sq, cfg.lambda);
      },
      [](const Vector& x, const Dataset& test) {
        return std::vector<double>{linear_test_mse(x, test.features, test.labels)};
      },
      {"test_mse"}, 0);
}

inline ExperimentResult run_linreg(const ExperimentConfig& cfg) {
  validate(cfg);
  return run_linreg(cfg, load_dataset(cfg));
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.task) {
    case Task::synthetic: return run_synthetic(cfg);
    case Task::logistic: return run_logistic(cfg);
    case Task::linreg: return run_linreg(cfg);
  }
  throw usage_error("unknown task");
}

}  // namespace svrhmc

#endif  // SVRHMC_HARNESS_HPP
