#pragma once

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "mlab/geometry.hpp"

namespace mlab {

using Vec = std::vector<double>;

// Four covectors with conjugation signs; on-shell means sum sigma_i xi^i = 0.
struct Quadruple {
  std::array<Vec, 4> xi;
  std::array<int, 4> signs{+1, -1, +1, -1};
  double tol = 1e-9;

  // Throws Error unless the momentum relation holds within tol * max|xi|.
  static Quadruple make(std::array<Vec, 4> xi, std::array<int, 4> signs, double tol = 1e-9);
  bool phase_rotation() const;
  double max_norm() const;
};

enum class InteractionClass {
  doubly_resonant,
  transversal_resonant,
  weakly_transversal,
  nonresonant,
  low_frequency,
};
std::string to_string(InteractionClass c);

struct Classification {
  InteractionClass cls = InteractionClass::nonresonant;
  bool ambiguous = false;  // a decision sat within the gray band of a threshold
};

struct ClassifyParams {
  double separation = 0.25;    // "gap of size ~ lambda" pinned to lambda/4
  double low_cutoff = 1.0;     // max|xi| <= this is low frequency
  double gray = 0.05;          // relative half-width of the ambiguity band
  double diag_threshold = 0.0; // sum|xi^i - xi^j| <= this * sum<xi^i> counts as diagonal
};

double resonance_defect(const Metric& m, const Quadruple& q);
Classification classify(const Metric& m, const Quadruple& q, const ClassifyParams& p = {});

using CubicSymbol = std::function<std::complex<double>(const Vec&, const Vec&, const Vec&)>;
struct ConservativeReport {
  bool conservative = true;
  double max_imag = 0.0;
};
ConservativeReport is_conservative(const CubicSymbol& c, const std::vector<Vec>& samples,
                                   double tol = 1e-12);

struct Ball {
  Vec center;
  double radius = 0.0;
};
// mu-ball first; requires |center_mu| <= |center_lambda|.
bool unbalanced_pair(const Ball& mu, const Ball& lambda, double delta);

struct AtlasRow {
  int shell_k = 0;
  InteractionClass cls{};
  long long count = 0;
};
struct Atlas {
  std::vector<AtlasRow> rows;
  long long ambiguous = 0;
  long long total = 0;
  long long count(InteractionClass c) const;
  // weakly transversal quadruples whose repeated frequency is nonzero
  long long weakly_transversal_nonzero = 0;
};

// The sign patterns enumerated by the atlas: (+,-,+,-), (+,+,+,-), (+,-,-,-), (-,-,-,-).
const std::vector<std::array<int, 4>>& atlas_sign_patterns();

// Exhaustive enumeration of integer quadruples with all |xi^i| <= radius.
// `visit`, when set, sees every enumerated quadruple and its classification.
Atlas resonance_atlas(const Metric& m, int radius, const ClassifyParams& p = {},
                      const std::function<void(const Quadruple&, const Classification&)>& visit = {});
std::string atlas_csv(const Atlas& a);

}  // namespace mlab
