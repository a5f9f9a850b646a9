#pragma once

#include <string>

#include "mlab/geometry.hpp"
#include "mlab/spectral.hpp"

namespace mlab {

struct Model {
  enum Kind { linear, semilinear, quasilinear, source } kind = linear;
  double sigma = 0.0;  // semilinear coupling
  int shell = 0;       // LP shell of a source trajectory
};

std::string model_name(const Model& m);

struct Trajectory {
  Grid grid;
  Metric metric;
  Model model;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Field> slices;

  std::size_t size() const { return slices.size(); }
  double time(std::size_t m) const { return t0 + dt * static_cast<double>(m); }
};

// n x n real coefficient fields g^{jk}(x), row-major in (j,k).
struct FieldMetric {
  Grid grid;
  int n = 2;
  std::vector<RVec> g;
  const RVec& at(int j, int k) const { return g[j * n + k]; }
};

FieldMetric constant_field_metric(const Metric& m, const Grid& grid);
// g_{[<lambda]} = P_{<k} g(u_{<k}) for the shell k.
FieldMetric truncated_metric(const Metric& m, const Field& u, int k);

// Largest stable step, 0.5 / max |xi|^2_g over the dealiased lattice.
double dt_max(const Metric& m, const Grid& g);

Field evolve_linear_flat(const Metric& m, const Field& u0, double t);
Trajectory linear_trajectory(const Metric& m, const Field& u0, double T, double dt,
                             int save_every = 1);

struct StepOptions {
  int save_every = 1;
  double amplitude_cap = 10.0;
  // Exponential filter exp(-alpha (|k|/k_max)^order) after each step; 0 disables.
  double filter_alpha = 0.0;
  int filter_order = 36;
  // RK4 on the interaction-picture variable exp(-i t Delta_{g0}) u.
  bool integrating_factor = false;
};

// i u_t + Delta_g u = sigma |u|^2 u by Strang splitting.
Trajectory evolve_semilinear(const Metric& m, double sigma, const Field& u0, double T,
                             double dt, const StepOptions& opt = {});

// i u_t + d_j (g0 + h|u|^2)^{jk} d_k u = 0 by RK4.
Trajectory evolve_quasilinear(const Metric& m, const Field& u0, double T, double dt,
                              const StepOptions& opt = {});

// Right-hand side of the quasilinear flow, u_t = i d_j g^{jk}(u) d_k u.
Field quasilinear_rhs(const Metric& m, const Field& u);

// f_k = i d_t u_k + d_j g_{[<k]}^{jk} d_k u_k on the interior slices 2..M-3,
// with d_t by fourth-order centered differences.
Trajectory paradifferential_source(const Trajectory& traj, int k);

// f = i d_t u + Delta_{g0} u on the interior slices 2..M-3, so that any flow is
// read as the constant-metric equation with a forcing term.
Trajectory equation_source(const Trajectory& traj);

void write_trajectory(const std::string& dir, const Trajectory& t);
Trajectory read_trajectory(const std::string& dir);

}  // namespace mlab
