#pragma once

#include <functional>
#include <string>

#include "mlab/flows.hpp"

namespace mlab {

// Densities of a field, evaluated on the doubled grid so quadratic products
// carry no aliasing. E[k*n + j] is E^{kj}, with k the divergence index.
struct DensitySet {
  Grid grid;
  int n = 2;
  RVec M;
  std::vector<RVec> P;    // P_j = i(conj(u) d_j u - u d_j conj(u))
  std::vector<RVec> Pup;  // P^j = g^{jl} P_l
  std::vector<RVec> E;

  const RVec& flux(int k, int j) const { return E[k * n + j]; }
};

DensitySet compute_densities(const Field& u, const Metric& m);
DensitySet compute_densities(const Field& u, const FieldMetric& g);

// F_m = 2 Im(f conj(v)) and F_p^j = G^j - 2 Re(f d^j conj(v)) + 2 Re(v d^j conj(f)),
// with G^j the commutator terms of a space-time dependent metric. Doubled grid.
struct SourceDensities {
  Grid grid;
  RVec Fm;
  std::vector<RVec> Fp;
  std::vector<RVec> G;
};
// `dgdt` holds d_t g^{jk}; pass nullptr for a time-independent metric.
SourceDensities source_densities(const Field& v, const Field& f, const FieldMetric& g,
                                 const FieldMetric* dgdt);

struct ResidualReport {
  RVec t;
  RVec mass;                  // ||d_t M - d_j P^j - F_m||_{L^1} per interior time
  std::vector<RVec> momentum; // per component j
  double mass_sup = 0.0;
  RVec momentum_sup;
};

// Both residuals for the shell-k truncation of `traj` against the source
// trajectory produced by paradifferential_source(traj, k).
ResidualReport flux_residuals(const Trajectory& traj, int k, const Trajectory& f_k);
double mass_flux_residual(const Trajectory& traj, int k, const Trajectory& f_k);
RVec momentum_flux_residual(const Trajectory& traj, int k, const Trajectory& f_k);
std::string residual_csv(const ResidualReport& r);

using BilinearSymbol = std::function<cplx(const double* xi, const double* eta)>;
// sum a(xi,eta) u^(xi) conj(u^(eta)) e^{i(xi-eta)x} over dealiased modes, on the
// doubled grid. Throws if a(eta,xi) != conj(a(xi,eta)).
Field weighted_mass_density(const Field& u, const BilinearSymbol& a, double sym_tol = 1e-12);

// Helpers shared with the Morawetz module.
RVec real_derivative(const Grid& g, const RVec& a, int axis);
double l1_norm(const Grid& g, const RVec& a);
FieldMetric upsample_metric(const FieldMetric& g, int factor);

}  // namespace mlab
