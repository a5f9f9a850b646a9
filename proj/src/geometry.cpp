#include "mlab/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace mlab {

namespace {

Eigen::MatrixXd as_matrix(int n, std::span<const double> a) {
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) m(j, k) = a[j * n + k];
  return m;
}

void check_len(const Metric& m, std::size_t len) {
  if (len != static_cast<std::size_t>(m.n))
    throw Error("dimension mismatch: expected " + std::to_string(m.n) +
                " components, got " + std::to_string(len));
}

}  // namespace

bool Metric::has_coupling() const {
  for (double x : h)
    if (x != 0.0) return true;
  return false;
}

double nondegeneracy_constant(int n, std::span<const double> g0,
                              double degenerate_tol) {
  if (g0.size() != static_cast<std::size_t>(n * n))
    throw Error("dimension mismatch in metric matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as_matrix(n, g0));
  Eigen::VectorXd s = es.eigenvalues().cwiseAbs();
  double smin = s.minCoeff(), smax = s.maxCoeff();
  if (smin < degenerate_tol) throw Error("degenerate metric");
  return std::max({1.0, smax, 1.0 / smin});
}

Metric make_metric(int n, std::vector<double> g0, std::vector<double> h,
                   double degenerate_tol) {
  if (n < 1 || g0.size() != static_cast<std::size_t>(n * n))
    throw Error("metric must be an n x n matrix");
  if (h.empty()) h.assign(n * n, 0.0);
  if (h.size() != g0.size()) throw Error("coupling matrix has wrong size");
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      if (g0[j * n + k] != g0[k * n + j]) throw Error("metric is not symmetric");
      if (h[j * n + k] != h[k * n + j]) throw Error("coupling is not symmetric");
    }
  Metric m;
  m.n = n;
  m.g0 = std::move(g0);
  m.h = std::move(h);
  m.c_nondeg = nondegeneracy_constant(n, m.g0, degenerate_tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as_matrix(n, m.g0));
  Eigen::VectorXd ev = es.eigenvalues();
  m.definite = ev.minCoeff() > 0.0 || ev.maxCoeff() < 0.0;
  Eigen::VectorXd s = ev.cwiseAbs();
  m.smin = s.minCoeff();
  m.smax = s.maxCoeff();
  return m;
}

Metric identity_metric(int n) {
  std::vector<double> g(n * n, 0.0);
  for (int j = 0; j < n; ++j) g[j * n + j] = 1.0;
  return make_metric(n, g);
}

Metric diagonal_metric(std::vector<double> d) {
  int n = static_cast<int>(d.size());
  std::vector<double> g(n * n, 0.0);
  for (int j = 0; j < n; ++j) g[j * n + j] = d[j];
  return make_metric(n, g);
}

double norm_sq_g(const Metric& m, std::span<const double> xi) {
  check_len(m, xi.size());
  double s = 0.0;
  for (int j = 0; j < m.n; ++j)
    for (int k = 0; k < m.n; ++k) s += m.g(j, k) * xi[j] * xi[k];
  return s;
}

std::vector<double> raise_index(const Metric& m, std::span<const double> w) {
  check_len(m, w.size());
  std::vector<double> v(m.n, 0.0);
  for (int j = 0; j < m.n; ++j)
    for (int k = 0; k < m.n; ++k) v[j] += m.g(j, k) * w[k];
  return v;
}

double coupling_norm(const Metric& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as_matrix(m.n, m.h));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace mlab
