// rhejko: run the preset experiments or a custom configuration.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rhe/config.hpp"
#include "rhe/errors.hpp"
#include "rhe/experiment.hpp"
#include "rhe/flow.hpp"
#include "rhe/io.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kSolverError = 3;

struct Flags {
  std::string config;
  std::string out;
  std::string resolution;
  std::string steps;
  std::string epsilon;
  std::string tau;
  std::string tol;
  bool log_domain = false;
  bool full_scale = false;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "key = value file applied over the preset");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--resolution", f.resolution, "cells per axis, e.g. 200 or 50x150");
  sub->add_option("--steps", f.steps, "number of steps");
  sub->add_option("--epsilon", f.epsilon, "entropic regularization");
  sub->add_option("--tau", f.tau, "time step");
  sub->add_option("--tol", f.tol, "Dykstra stopping tolerance");
  sub->add_flag("--log-domain", f.log_domain, "iterate on log-scaled factors");
  sub->add_flag("--full-scale", f.full_scale, "use the published grid resolution");
  sub->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

std::vector<rhe::Setting> collect(const std::string& experiment, const Flags& f) {
  std::vector<rhe::Setting> s;
  if (!f.config.empty()) {
    std::vector<rhe::Setting> file = rhe::read_settings_file(f.config);
    s.insert(s.end(), file.begin(), file.end());
  }
  if (experiment != "custom") {
    // The subcommand wins over an experiment key in the file.
    s.push_back({"experiment", experiment, "command line"});
  }
  for (const std::string& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw rhe::ConfigError("--set: expected key=value, got '" + kv + "'");
    s.push_back({kv.substr(0, eq), kv.substr(eq + 1), "--set"});
  }
  auto flag = [&](const char* key, const std::string& value, const char* name) {
    if (!value.empty()) s.push_back({key, value, name});
  };
  flag("output.dir", f.out, "--out");
  flag("grid.resolution", f.resolution, "--resolution");
  flag("steps", f.steps, "--steps");
  flag("epsilon", f.epsilon, "--epsilon");
  flag("tau", f.tau, "--tau");
  flag("solver.tol", f.tol, "--tol");
  if (f.log_domain) s.push_back({"solver.log_domain", "true", "--log-domain"});
  for (auto& e : s) {
    if (e.key.find_first_of(" \t") != std::string::npos) {
      throw rhe::ConfigError(e.origin + ": malformed key '" + e.key + "'");
    }
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized JKO solver for flux-limited diffusion"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"speed", "obstacle", "compare", "border", "probe", "custom"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    add_common(sub, flags);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string experiment = app.get_subcommands().front()->get_name();
  if (experiment == "custom" && flags.config.empty()) {
    std::cerr << "error: custom needs --config <path>\n";
    return kConfigError;
  }

  rhe::ExperimentConfig cfg;
  try {
    cfg = rhe::resolve_config(collect(experiment, flags), flags.full_scale);
  } catch (const rhe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    rhe::run_experiment(cfg, std::cout);
  } catch (const rhe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const rhe::FlowFailure& e) {
    std::cerr << "solver failure at " << e.what() << '\n';
    return kSolverError;
  } catch (const rhe::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverError;
  }
  return 0;
}
