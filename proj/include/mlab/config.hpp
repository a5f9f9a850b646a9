#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlab/flows.hpp"

namespace mlab {

struct ConfigError : Error {
  int line;
  std::string field;
  ConfigError(int line, std::string field, const std::string& msg);
};

struct DataRecipe {
  enum Kind { random_shell, plane_wave, packet, null_pair } kind = random_shell;
  int shell = 3;
  double l2 = 1.0;
  std::vector<int> wavenumber;  // plane wave, lattice units
  RVec center, frequency;       // first packet
  RVec center_v, frequency_v;   // second packet; null_pair uses frequency_v as the partner
  double width = 0.5;
  double amplitude = 1.0;
  bool operator==(const DataRecipe&) const = default;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 7;
  int seeds = 1;
  std::string output = "out";
  Grid grid;
  RVec g0 = {1.0, 0.0, 0.0, 1.0};
  RVec h;
  Model::Kind model = Model::linear;
  double sigma = 0.0;
  DataRecipe data;
  double T = 0.5;
  double dt = 5e-4;
  int save_every = 1;
  RVec r;
  std::vector<int> j;
  std::vector<RVec> x0;
  RVec eps;
  RVec widths;
  std::vector<RVec> pairs;  // Strichartz exponents (p, q); inf allowed for p
  double s = 2.0;           // envelope regularity
  double delta = 0.1;       // envelope slowness
  int radius = 8;           // resonance lattice radius
  double tolerance = 1e-3;

  bool operator==(const ExperimentConfig&) const = default;
  Metric metric() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& c);
// Checks ranges beyond syntax; throws ConfigError naming the field.
void validate_config(const ExperimentConfig& c);
std::uint64_t config_hash(const std::string& text);

}  // namespace mlab
