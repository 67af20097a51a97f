// svrhmc: run the sampler experiments and write a CSV trace.
//
//   svrhmc synthetic --sampler svrhmc --n 50 --d 2 --chains 2000 --out w2.csv
//   svrhmc logistic --data data/pima.libsvm --repeats 20 --out pima.csv
//   svrhmc linreg --data housing.csv --out housing.csv

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "svrhmc/harness.hpp"

namespace {

using svrhmc::ExperimentConfig;
using svrhmc::ExperimentResult;

struct Options {
  ExperimentConfig cfg;
  std::string sampler = "svrhmc";
  std::string out;
  bool no_intercept = false;
};

void add_common(CLI::App& sub, Options& o) {
  auto& c = o.cfg;
  sub.add_option("--sampler", o.sampler, "svrhmc, hmc, sghmc, lmc, sgld or vrsgld");
  sub.add_option("--eta", c.eta, "step size (default: tuned on the step-size grid)");
  sub.add_option("--gamma", c.gamma, "friction")->capture_default_str();
  sub.add_option("--u", c.u, "inverse mass (default 1/L)");
  sub.add_option("--epoch-len", c.epoch_length, "epoch length m (default n)");
  sub.add_option("--iters", c.iterations, "iterations (default: from --data-passes)");
  sub.add_option("--data-passes", c.data_passes, "gradient budget in passes over the data")
      ->capture_default_str();
  sub.add_option("--repeats", c.repeats, "independent repeats")->capture_default_str();
  sub.add_option("--seed", c.seed, "master seed")->capture_default_str();
  sub.add_option("--batch", c.batch, "minibatch size for sgld / sghmc")->capture_default_str();
  sub.add_option("--stride", c.stride, "record every stride-th iteration");
  sub.add_option("--threads", c.threads, "worker threads (0: all cores)")->capture_default_str();
  sub.add_flag("--zero-noise", c.zero_noise, "drop the injected noise");
  sub.add_flag("--warm-start", c.warm_start, "start from 100 gradient-descent steps");
  sub.add_flag("--stationary-velocity", c.stationary_velocity, "draw v0 from N(0, u I)");
  sub.add_option("--out", o.out, "output CSV (default: stdout)");
}

void add_regression(CLI::App& sub, Options& o) {
  auto& c = o.cfg;
  sub.add_option("--data", c.data_path, "dataset path")->required();
  sub.add_option("--split", c.split, "training fraction")->capture_default_str();
  sub.add_option("--burn-in", c.burn_in, "iterates dropped from the path average")
      ->capture_default_str();
  sub.add_option("--lambda", c.lambda, "ridge precision")->capture_default_str();
}

void write_outputs(const Options& o, const ExperimentResult& res) {
  nlohmann::json meta;
  meta["task"] = std::string(svrhmc::to_string(o.cfg.task));
  meta["sampler"] = o.sampler;
  meta["seed"] = o.cfg.seed;
  meta["eta"] = res.eta;
  meta["iterations"] = res.iterations;
  meta["epoch_length"] = res.epoch_length;
  if (res.tuning) {
    meta["step_size_grid"] = res.tuning->grid;
    nlohmann::json scores = nlohmann::json::array();
    for (double s : res.tuning->scores)
      scores.push_back(std::isfinite(s) ? nlohmann::json(s) : nlohmann::json(nullptr));
    meta["grid_scores"] = scores;
  }
  meta["notes"] = res.notes;

  if (o.out.empty()) {
    svrhmc::write_csv(std::cout, res.records);
    std::cerr << meta.dump() << '\n';
    return;
  }
  std::ofstream csv(o.out);
  if (!csv) throw svrhmc::usage_error("cannot open '" + o.out + "' for writing");
  svrhmc::write_csv(csv, res.records);
  std::ofstream(o.out + ".meta.json") << meta.dump(2) << '\n';
}

// Unsectioned keys belong to the subcommand named on the command line.
struct SectionedConfig : CLI::ConfigINI {
  std::string section;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    if (!section.empty())
      for (auto& item : items)
        if (item.parents.empty()) item.parents.push_back(section);
    return items;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic variance-reduced Hamiltonian Monte Carlo experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.allow_config_extras(false);
  auto formatter = std::make_shared<SectionedConfig>();
  for (int i = 1; i < argc; ++i)
    for (const char* name : {"synthetic", "logistic", "linreg"})
      if (formatter->section.empty() && std::string_view(argv[i]) == name) formatter->section = name;
  app.config_formatter(formatter);

  Options syn, logi, lin;
  syn.cfg.task = svrhmc::Task::synthetic;
  logi.cfg.task = svrhmc::Task::logistic;
  logi.cfg.chains = 1;
  lin.cfg.task = svrhmc::Task::linreg;
  lin.cfg.chains = 1;

  auto* s = app.add_subcommand("synthetic", "Gaussian target from a random quadratic finite sum");
  auto* l = app.add_subcommand("logistic", "Bayesian logistic regression on a libsvm file");
  auto* r = app.add_subcommand("linreg", "Bayesian linear regression on a delimited file");
  add_common(*s, syn);
  s->add_option("--n", syn.cfg.n, "components")->capture_default_str();
  s->add_option("--d", syn.cfg.d, "dimension")->capture_default_str();
  s->add_option("--chains", syn.cfg.chains, "parallel chains for the W2 estimate")
      ->capture_default_str();
  s->add_option("--epsilon", syn.cfg.epsilon, "target accuracy for the step-size rule");

  add_common(*l, logi);
  add_regression(*l, logi);
  l->add_flag("--no-intercept", logi.no_intercept, "do not append a constant feature");

  add_common(*r, lin);
  add_regression(*r, lin);
  r->add_option("--sigma-a-sq", lin.cfg.sigma_a_sq, "noise variance")->capture_default_str();
  r->add_option("--response-column", lin.cfg.response_column, "response column (-1: last)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  Options& o = s->parsed() ? syn : l->parsed() ? logi : lin;
  try {
    o.cfg.sampler = svrhmc::parse_sampler_kind(o.sampler);
    o.cfg.intercept = !o.no_intercept;
    write_outputs(o, svrhmc::run_experiment(o.cfg));
  } catch (const svrhmc::divergence_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const svrhmc::parse_error& e) {
    std::cerr << o.cfg.data_path << ": " << e.what() << '\n';
    return 4;
  } catch (const svrhmc::usage_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
