#pragma once

#include <optional>
#include <string>

#include "mlab/densities.hpp"

namespace mlab {

// a_r(x) = |x| + (r/2) exp(-|x|/r), or the plain cone |x| when r is infinite.
struct WeightFamily {
  double r = 1.0;
  int n = 2;

  static WeightFamily cone(int n) { return {INFINITY, n}; }
  bool is_cone() const { return !std::isfinite(r); }

  // Radial profile phi with a = phi(|x|).
  double phi(double rho) const;
  double dphi(double rho) const;
  double d2phi(double rho) const;

  double a(const RVec& x) const;
  RVec grad(const RVec& x) const;        // zero at the origin
  RVec hessian(const RVec& x) const;     // row-major n x n, x != 0
  double minorant(const RVec& x) const;  // b_r = exp(-|x|^2/r^2)/r
};

struct WeightEval {
  double a = 0.0;
  RVec grad;
  RVec eigs;  // tangential eigenvalue repeated n-1 times, radial last
};
WeightEval weight_eval(const WeightFamily& w, const RVec& x);

// Cell average of the Hessian trace over [-h/2, h/2]^n, by the divergence theorem.
double origin_cell_trace(const WeightFamily& w, double h);

// Sampled kernels a_j, a_jk on a grid, using the torus distance. Odd
// components vanish on the antipodal planes; the origin cell of a_jk carries
// its cell average.
struct KernelSet {
  Grid grid;
  WeightFamily weight;
  std::vector<RVec> grad;      // n
  std::vector<RVec> hess;      // n*n
  std::vector<CVec> grad_hat;  // transforms of the above
  std::vector<CVec> hess_hat;
  bool consistent = false;
};
// With `consistent`, a_jk is replaced by the symmetrized spectral derivative of
// the sampled a_j, which makes dI/dt = J4 + K hold exactly on the grid; the
// sampled a_jk is pointwise positive semi-definite but only consistent to
// discretization order.
std::shared_ptr<const KernelSet> kernels(const Grid& fine, const WeightFamily& w,
                                         bool consistent = false);

// cell^2 sum_{x,y} K(x-y) A(x) B(y) with K given by its transform.
cplx kernel_pair(const Grid& g, const CVec& Khat, const CVec& A, const CVec& B);

// Interaction functional of u and translate(v, x0); constant metric.
double interaction_I(const Field& u, const Field& v, double r, const RVec& x0, const Metric& m);
double interaction_I(const DensitySet& du, const DensitySet& dv, const KernelSet& k);

// 4 sum a_jm(x-y) F^j conj(F^m) with F_j = u(x) d_j conj(v)(y) + d_j u(x) conj(v)(y),
// evaluated through the rank-2 factorization. v is used as given (no shift).
double interaction_J4(const Field& u, const Field& v, double r, const Metric& m);
double interaction_J4(const Field& u, const Field& v, const KernelSet& k, const Metric& m);
// int int b_r(x-y) sum_j |F^j|^2, the Gaussian minorant of the J4 integrand.
double gaussian_form(const Field& u, const Field& v, double r, const Metric& m);
// min over lattice modes where the scale-1/r projector is nonzero of
// b_r^(xi) / (P_{1/r}^(xi) |xi|^{1-n}), with b_r sampled on the torus.
double gaussian_fourier_floor(const Grid& g, double r);

// Same quantity before symmetrization, from densities and fluxes:
// sum a_jk [M(u) E^{kj}(v) + E^{kj}(u) M(v) - P^k(u) P^j(v) - P^j(u) P^k(v)].
double interaction_J4_densities(const DensitySet& du, const DensitySet& dv, const KernelSet& k);

double interaction_K(const DensitySet& du, const SourceDensities& su, const DensitySet& dv,
                     const SourceDensities& sv, const KernelSet& k);

struct InteractionSeries {
  RVec t, I, J4, K;
};
std::string interaction_csv(const InteractionSeries& s);

struct AuditOptions {
  std::optional<int> shell;  // audit the shell-k truncations with paradifferential sources
  bool density_form = false; // J4 from densities and fluxes instead of the F form
  bool consistent_kernels = false;
};

struct AuditReport {
  InteractionSeries series;
  double dI = 0.0;        // I(t_end) - I(t_begin)
  double integral = 0.0;  // int (J4 + K) dt
  double scale = 0.0;     // 3/2 (|M(u)|_1 |P(v)|_1 + |P(u)|_1 |M(v)|_1) at t_begin
  double rel_defect = 0.0;
};
// Checks I(t_end) - I(t_begin) = int (J4 + K) over the slices that carry sources.
AuditReport morawetz_identity_audit(const Trajectory& u, const Trajectory& v, double r,
                                    const RVec& x0, const AuditOptions& opt = {});

// Composite Simpson (3/8 on the last panel when the count is odd).
double time_integral(const RVec& y, double dt);

// Symbol of the continuous-scale projector at frequency `scale`.
double lp_scale_symbol(double scale, double absxi);

struct BesovReport {
  RVec j;        // LP indices examined
  RVec value;    // ||P_j |D|^{(3-n)/2} (u conj(v^{x0}))||_{L^2_{t,x}}
  double sup = 0.0;
  int argmax = 0;
};
BesovReport besov_bilinear_norm(const Trajectory& u, const Trajectory& v, const RVec& x0);
double besov_bilinear_norm(const Trajectory& u, const Trajectory& v, const RVec& x0, int j);

// ||P_{1/r} |D|^{(3-n)/2} |u|^2||_{L^2_{t,x}}^2 for the continuous scale 1/r.
double besov_scale_norm_sq(const Trajectory& u, double r);

struct GapReport {
  double ratio = 0.0;
  bool flagged = false;  // denominator below 1e-14 |u|^2
  double numerator = 0.0, denominator = 0.0;
};
GapReport noncoercivity_gap(const Field& u, const Metric& m);

// Pinned constant in the cone identity, per dimension (index n).
double im_clean_constant(int n);
struct ImCleanReport {
  double lhs = 0.0, rhs = 0.0, defect = 0.0;
};
ImCleanReport im_clean_check(const Field& u, const Metric& m, std::optional<double> c_n = {});

struct TransversalReport {
  int n = 2;
  RVec t, I, J4;
  RVec antipodal;  // contribution of the wrapped half-space edge, ~0 for localized data
  double audit_defect = 0.0;
  double bernstein_lhs = 0.0;  // ||u conj(v^{x0})||^2_{L^2_{t,x}}
  double bernstein_rhs = 0.0;  // int dt int M(u) M(v^{x0}) over x_a = y_a
  double bernstein_ratio(double mu) const;
};
// Half-space functional int_{x_a < y_a} M(u)(x) M(v^{x0})(y).
TransversalReport transversal_interaction(const Trajectory& u, const Trajectory& v,
                                          const RVec& x0, int axis);

// Coordinate axis that best separates the group velocities 2 g xi of two packets.
int best_axis(const Metric& m, const RVec& xi_u, const RVec& xi_v);

}  // namespace mlab
