#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "criteria.hpp"
#include "mlab/harness.hpp"
#include "mlab/resonance.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mlab::ConfigError(0, path, "cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& path, const std::string& output) {
  std::string text = slurp(path);
  mlab::ExperimentConfig c = mlab::parse_config(text);
  if (!output.empty()) c.output = output;
  auto r = mlab::run_experiment(c, text);
  for (const auto& f : r.failures) std::cerr << "invariant failure: " << f << '\n';
  std::cout << c.experiment << ": " << (r.exit_code == 0 ? "ok" : "FAILED") << " -> " << c.output << '\n';
  return r.exit_code;
}

int atlas(const std::string& path, const std::string& output) {
  std::string text = slurp(path);
  mlab::ExperimentConfig c = mlab::parse_config(text);
  c.experiment = "resonance-atlas";
  if (!output.empty()) c.output = output;
  auto r = mlab::run_experiment(c, text);
  std::cout << r.csv["atlas.csv"];
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlab: interaction Morawetz laboratory"};
  app.require_subcommand(1);
  std::string config, output, suite;

  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config");
  run_cmd->add_option("config", config, "config file")->required();
  run_cmd->add_option("-o,--output", output, "override the output directory");

  auto* atlas_cmd = app.add_subcommand("atlas", "resonance atlas for the config's metric");
  atlas_cmd->add_option("config", config, "config file")->required();
  atlas_cmd->add_option("-o,--output", output, "override the output directory");

  auto* validate_cmd = app.add_subcommand("validate", "parse and check a config");
  validate_cmd->add_option("config", config, "config file")->required();

  auto* oracle_cmd = app.add_subcommand("oracle", "run an acceptance/oracle suite");
  std::string names = "all, calibrate";
  for (const auto& c : mlab::criteria()) names += ", " + c.key;
  oracle_cmd->add_option("suite", suite, "one of: " + names)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return run(config, output);
    if (*atlas_cmd) return atlas(config, output);
    if (*validate_cmd) {
      mlab::ExperimentConfig c = mlab::parse_config(slurp(config));
      std::cout << mlab::serialize_config(c);
      bool known = false;
      for (const auto& n : mlab::experiment_names()) known = known || n == c.experiment;
      if (!known) {
        std::cerr << "unknown experiment '" << c.experiment << "'\n";
        return 2;
      }
      return 0;
    }
    if (*oracle_cmd) {
      if (suite == "calibrate") {
        std::cout << mlab::calibration_report();
        return 0;
      }
      bool found = false, ok = true;
      for (const auto& c : mlab::criteria()) {
        if (suite != "all" && suite != c.key) continue;
        found = true;
        auto res = mlab::run_criterion(c);
        std::cout << mlab::format_result(c, res) << std::endl;
        ok = ok && res.pass;
      }
      if (!found) {
        std::cerr << "unknown suite '" << suite << "'\n";
        return 2;
      }
      return ok ? 0 : 1;
    }
  } catch (const mlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
