#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "svrhmc/harness.hpp"

using namespace svrhmc;

namespace {

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream out;
  write_csv(out, r.records);
  return out.str();
}

ExperimentConfig small_synthetic() {
  ExperimentConfig cfg;
  cfg.task = Task::synthetic;
  cfg.n = 20;
  cfg.d = 2;
  cfg.chains = 64;
  cfg.data_passes = 4;
  cfg.eta = 0.1;
  cfg.seed = 5;
  cfg.threads = 1;
  return cfg;
}

Dataset toy_classification(std::size_t n, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> normal;
  Dataset ds;
  ds.task = TaskType::classification;
  ds.features.resize(static_cast<Eigen::Index>(n), 3);
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) ds.features(i, j) = normal(rng);
    const double score = 2 * ds.features(i, 0) - ds.features(i, 1) + 0.5 * normal(rng);
    ds.labels(i) = score >= 0 ? 1.0 : -1.0;
  }
  return ds;
}

Dataset toy_regression(std::size_t n, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> normal;
  Dataset ds;
  ds.task = TaskType::regression;
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    ds.features(i, 0) = normal(rng);
    ds.features(i, 1) = normal(rng);
    ds.labels(i) = 1.5 * ds.features(i, 0) - 0.7 * ds.features(i, 1) + 0.3 * normal(rng);
  }
  return ds;
}

}  // namespace

TEST(Csv, RoundTrip) {
  std::vector<TraceRecord> rows{{"synthetic", "svrhmc", 3, 1.04, 1, "w2", 0.1 + 0.2},
                                {"logistic", "sgld", 7, 10, 500, "test_error", 1.0 / 3.0},
                                {"linreg", "hmc", 0, 0.5, 2, "test_mse", 1e-300}};
  std::ostringstream out;
  write_csv(out, rows);
  std::istringstream in(out.str());
  const auto back = read_csv(in);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].task, rows[i].task);
    EXPECT_EQ(back[i].sampler, rows[i].sampler);
    EXPECT_EQ(back[i].seed, rows[i].seed);
    EXPECT_EQ(back[i].data_pass, rows[i].data_pass);
    EXPECT_EQ(back[i].iteration, rows[i].iteration);
    EXPECT_EQ(back[i].metric, rows[i].metric);
    EXPECT_EQ(back[i].value, rows[i].value);
  }
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "task,sampler,seed,data_pass,iteration,metric,value");
}

TEST(Csv, RejectsMalformedRows) {
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(read_csv(bad_header), parse_error);
  std::istringstream bad_row(std::string(kCsvHeader) + "\nsynthetic,svrhmc,1,x,1,w2,0\n");
  try {
    read_csv(bad_row);
    FAIL();
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 4u);
  }
}

TEST(Synthetic, FixedSeedGivesIdenticalBytes) {
  const auto cfg = small_synthetic();
  EXPECT_EQ(csv_of(run_synthetic(cfg)), csv_of(run_synthetic(cfg)));
}

TEST(Synthetic, ParallelMatchesSerial) {
  auto cfg = small_synthetic();
  const auto serial = csv_of(run_synthetic(cfg));
  cfg.threads = 4;
  EXPECT_EQ(csv_of(run_synthetic(cfg)), serial);
}

TEST(Synthetic, DataPassColumnFollowsAccounting) {
  auto cfg = small_synthetic();
  const auto r = run_synthetic(cfg);
  ASSERT_FALSE(r.records.empty());
  for (const auto& row : r.records) {
    const auto evals = expected_evaluations(SamplerKind::svrhmc, row.iteration, 20, 20, 1);
    EXPECT_DOUBLE_EQ(row.data_pass, static_cast<double>(evals) / 20.0);
  }
  EXPECT_LE(r.records.back().data_pass, 4.0);
  EXPECT_EQ(r.records.back().iteration, r.iterations);
}

TEST(Synthetic, AddingChainsKeepsExistingChains) {
  // With two chains the W2 estimate depends only on chains 0 and 1; compare
  // final iterates indirectly through a one-record run.
  auto cfg = small_synthetic();
  cfg.chains = 2;
  cfg.stride = 1000;
  const double two = run_synthetic(cfg).records.back().value;
  const auto prob = synthetic_problem(cfg);
  const auto sc = sampler_config(cfg, prob.potential, *cfg.eta);
  Matrix finals(2, 2);
  for (std::size_t c = 0; c < 2; ++c) {
    SamplerConfig chain = sc;
    chain.seed = derive_seed(cfg.seed, c, 0);
    finals.col(static_cast<Eigen::Index>(c)) =
        run_chain(prob.potential, SamplerKind::svrhmc, chain, {Vector::Zero(2), Vector()}).state.x;
  }
  EXPECT_EQ(two, w2_to_target(finals, prob.target));
}

TEST(Synthetic, StepSizeRuleShrinksW2TenfoldWithinTwentyPasses) {
  ExperimentConfig cfg;
  cfg.n = 50;
  cfg.d = 2;
  cfg.chains = 2000;
  cfg.data_passes = 20;
  cfg.epsilon = 0.5;
  cfg.seed = 11;
  const auto r = run_synthetic(cfg);
  EXPECT_EQ(r.epoch_length, 50u);
  const double first = r.records.front().value;
  double best = first;
  for (const auto& row : r.records) best = std::min(best, row.value);
  EXPECT_LT(best, first / 10) << "eta = " << r.eta;
}

TEST(Synthetic, EpochLengthOneReproducesHmcCurve) {
  auto cfg = small_synthetic();
  cfg.epoch_length = 1;
  cfg.iterations = 40;
  auto hmc = cfg;
  hmc.sampler = SamplerKind::hmc;
  const auto a = run_synthetic(cfg), b = run_synthetic(hmc);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].value, b.records[i].value);
}

TEST(Synthetic, GridTuningRecordsGrid) {
  auto cfg = small_synthetic();
  cfg.eta.reset();
  cfg.sampler = SamplerKind::sgld;
  const auto r = run_synthetic(cfg);
  ASSERT_TRUE(r.tuning.has_value());
  ASSERT_EQ(r.tuning->grid.size(), 4u);
  EXPECT_NEAR(r.tuning->grid[0] * 1.5, 0.1, 1e-12);
  EXPECT_EQ(r.tuning->scores.size(), 4u);
  EXPECT_EQ(r.eta, r.tuning->chosen);
}

TEST(Logistic, DeterministicAndThreadIndependent) {
  const auto ds = toy_classification(120, 1);
  ExperimentConfig cfg;
  cfg.task = Task::logistic;
  cfg.data_path = "in-memory";
  cfg.repeats = 3;
  cfg.eta = 0.05;
  cfg.threads = 1;
  const auto a = csv_of(run_logistic(cfg, ds));
  EXPECT_EQ(a, csv_of(run_logistic(cfg, ds)));
  cfg.threads = 3;
  EXPECT_EQ(a, csv_of(run_logistic(cfg, ds)));
}

TEST(Logistic, LearnsSeparableSignalAndWritesSummaries) {
  const auto ds = toy_classification(300, 2);
  ExperimentConfig cfg;
  cfg.task = Task::logistic;
  cfg.data_path = "in-memory";
  cfg.repeats = 4;
  cfg.seed = 3;
  const auto r = run_logistic(cfg, ds);
  double final_mean = -1;
  for (const auto& row : r.records)
    if (row.metric == "test_error_mean") final_mean = row.value;
  EXPECT_GE(final_mean, 0.0);
  EXPECT_LT(final_mean, 0.12);
}

TEST(Logistic, StrongPriorGivesBaseRate) {
  auto ds = toy_classification(200, 4);
  ExperimentConfig cfg;
  cfg.task = Task::logistic;
  cfg.data_path = "in-memory";
  cfg.lambda = 1e7;
  cfg.eta = 1e-3;
  cfg.intercept = false;
  const auto r = run_logistic(cfg, ds);
  const auto parts = prepare_split(cfg, ds, derive_seed(cfg.seed, 0, 0, 11));
  const double base = (parts.test.labels.array() < 0).cast<double>().mean();
  double last_nll = 0, last_err = 0;
  for (const auto& row : r.records) {
    if (row.metric == "test_nll" ) last_nll = row.value;
    if (row.metric == "test_error") last_err = row.value;
  }
  EXPECT_NEAR(last_nll, std::log(2.0), 1e-2);
  EXPECT_NEAR(last_err, base, 0.1);
}

TEST(Logistic, TooShortRunIsAUsageError) {
  const auto ds = toy_classification(40, 5);
  ExperimentConfig cfg;
  cfg.task = Task::logistic;
  cfg.data_path = "in-memory";
  cfg.eta = 0.01;
  cfg.iterations = 10;
  EXPECT_THROW(run_logistic(cfg, ds), usage_error);
}

TEST(Linreg, MseFallsBelowZeroWeightBaseline) {
  const auto ds = toy_regression(400, 6);
  ExperimentConfig cfg;
  cfg.task = Task::linreg;
  cfg.data_path = "in-memory";
  cfg.data_passes = 20;
  cfg.burn_in = 10;
  cfg.seed = 7;
  const auto r = run_linreg(cfg, ds);
  const auto parts = prepare_split(cfg, ds, derive_seed(cfg.seed, 0, 0, 11));
  const double baseline = linear_test_mse(Vector::Zero(2), parts.test.features, parts.test.labels);
  double last = baseline;
  for (const auto& row : r.records)
    if (row.metric == "test_mse") last = row.value;
  EXPECT_LT(last, 0.5 * baseline);
}

TEST(Config, ValidationErrors) {
  ExperimentConfig cfg;
  cfg.chains = 0;
  EXPECT_THROW(run_synthetic(cfg), usage_error);
  cfg = ExperimentConfig{};
  cfg.task = Task::logistic;
  EXPECT_THROW(run_logistic(cfg), usage_error);
  cfg = small_synthetic();
  cfg.split = 1.5;
  EXPECT_THROW(run_synthetic(cfg), usage_error);
  EXPECT_EQ(parse_task("linreg"), Task::linreg);
  EXPECT_THROW(parse_task("probit"), usage_error);
}

TEST(Synthetic, DivergentStepSurfacesAsError) {
  auto cfg = small_synthetic();
  cfg.sampler = SamplerKind::lmc;
  cfg.eta = 10.0;
  cfg.iterations = 2000;
  EXPECT_THROW(run_synthetic(cfg), divergence_error);
}
