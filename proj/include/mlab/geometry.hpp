#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace mlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// g^{jk}(u) = g0^{jk} + h^{jk} |u|^2, both stored row-major n x n.
struct Metric {
  int n = 2;
  std::vector<double> g0;
  std::vector<double> h;  // all zeros when the flow is constant-coefficient
  double c_nondeg = 1.0;

  double g(int j, int k) const { return g0[j * n + k]; }
  double coupling(int j, int k) const { return h[j * n + k]; }
  double smin = 1.0, smax = 1.0;  // singular values of g0
  bool definite = true;

  bool has_coupling() const;
};

// Throws Error on asymmetric or degenerate input.
Metric make_metric(int n, std::vector<double> g0, std::vector<double> h = {},
                   double degenerate_tol = 1e-12);

Metric identity_metric(int n);
Metric diagonal_metric(std::vector<double> d);

double norm_sq_g(const Metric& m, std::span<const double> xi);
double nondegeneracy_constant(int n, std::span<const double> g0,
                              double degenerate_tol = 1e-12);
std::vector<double> raise_index(const Metric& m, std::span<const double> w);

// Largest |h^{jk}| operator norm, used by the non-degeneracy margin check.
double coupling_norm(const Metric& m);

}  // namespace mlab
