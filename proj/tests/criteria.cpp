#include "criteria.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "mlab/constants.hpp"
#include "mlab/data.hpp"
#include "mlab/envelopes.hpp"
#include "mlab/harness.hpp"
#include "mlab/resonance.hpp"
#include "oracles.hpp"

namespace mlab {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(3) << x;
  return os.str();
}

Metric hyperbolic() { return diagonal_metric({1.0, -1.0}); }

RVec sorted_eigs(const RVec& H, int n) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = 0.5 * (H[i * n + j] + H[j * n + i]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  RVec e(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(e.begin(), e.end());
  return e;
}

// Observed orders log2(r_i / r_{i+1}) of a halving sequence.
RVec orders(const RVec& r) {
  RVec o;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) o.push_back(std::log2(r[i] / r[i + 1]));
  return o;
}

std::string list(const RVec& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : "/") + fmt(x);
  return s;
}

// ---- configurations shared by the criteria and the calibration report ----------

ExperimentConfig audit_config(bool hyperbolic_metric) {
  ExperimentConfig c;
  c.experiment = "morawetz-audit";
  c.grid = {2, 64, 4.0 * kPi};
  if (hyperbolic_metric) c.g0 = {1.0, 0.0, 0.0, -1.0};
  c.data.kind = DataRecipe::packet;
  const double mid = 0.5 * c.grid.L;
  c.data.center = {mid - 0.8, mid};
  c.data.frequency = {3.0, 1.0};
  c.data.center_v = {mid + 0.8, mid + 0.3};
  c.data.frequency_v = {2.0, 1.5};
  c.data.width = 1.0;
  c.T = 0.5;
  c.dt = 5e-4;
  c.r = {1.0};
  c.tolerance = kAuditTolerance;
  return c;
}

ExperimentConfig coercivity_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.experiment = "coercivity";
  c.grid = {2, 64, 2.0 * kPi};
  c.g0 = {1.0, 0.0, 0.0, -1.0};
  c.data.kind = DataRecipe::random_shell;
  c.data.shell = 3;
  c.seed = seed;
  c.seeds = 20;
  c.T = 0.25;
  c.dt = 2e-3;
  return c;
}

ExperimentConfig noncoercive_config() {
  ExperimentConfig c;
  c.experiment = "noncoercive-demo";
  c.grid = {2, 128, 2.0 * kPi};
  c.g0 = {1.0, 0.0, 0.0, -1.0};
  c.data.kind = DataRecipe::null_pair;
  c.data.frequency = {24.0, 0.0};
  c.data.frequency_v = {12.0, -12.0};
  c.data.shell = 3;
  c.seed = 11;
  c.seeds = 20;
  return c;
}

ExperimentConfig bilinear_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.experiment = "bilinear-transversal";
  c.grid = {2, 128, 4.0 * kPi};
  c.data.kind = DataRecipe::packet;
  c.data.frequency = {16.0, 0.0};
  c.data.width = 0.36;
  c.seed = seed;
  c.seeds = 20;
  c.T = 0.33;
  c.dt = 3e-3;
  return c;
}

ExperimentConfig envelope_config() {
  ExperimentConfig c;
  c.experiment = "envelope-propagation";
  c.grid = {2, 64, 2.0 * kPi};
  c.h = {1.0, 0.0, 0.0, 1.0};
  c.model = Model::quasilinear;
  c.data.kind = DataRecipe::random_shell;
  c.data.shell = 2;
  c.seed = 5;
  c.T = 0.5;
  c.dt = 5e-4;
  c.eps = {1e-2};
  c.s = 2.0;
  return c;
}

double summary_number(const ExperimentResult& r, const char* key) { return r.summary.at(key).get<double>(); }

// ---- criteria ------------------------------------------------------------------

CriterionResult partition_of_unity() {
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    Grid g = i % 2 ? Grid{2, 64, 2.0 * kPi} : Grid{3, 16, 3.0};
    Field f = random_dealiased(g, 100 + i);
    Field sum(g);
    for (const auto& b : lp_decompose(f, 0)) sum = sum + b;
    worst = std::max(worst, l2_norm(sum - f) / l2_norm(f));
  }
  return {worst <= 1e-12, "max relative error " + fmt(worst)};
}

CriterionResult linear_flat_exactness() {
  double wave = 0.0, mass = 0.0;
  for (const Metric& m : {identity_metric(2), hyperbolic()}) {
    Grid g{2, 64, 2.0 * kPi};
    std::vector<int> k0{3, -2};
    const cplx a{0.7, -0.2};
    Field u = evolve_linear_flat(m, plane_wave(g, a, k0), 1.0);
    RVec xi{double(k0[0]), double(k0[1])};
    const double w = norm_sq_g(m, xi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double ph = xi[0] * coord(g, i, 0) + xi[1] * coord(g, i, 1) - w;
      wave = std::max(wave, std::abs(u.v[i] - a * std::polar(1.0, ph)));
    }
    Field r0 = random_dealiased(g, 17);
    Trajectory tr = linear_trajectory(m, r0, 1.0, 0.05);
    const double m0 = std::pow(l2_norm(r0), 2);
    for (const auto& s : tr.slices) mass = std::max(mass, std::abs(std::pow(l2_norm(s), 2) - m0) / m0);
  }
  return {wave <= 1e-12 && mass <= 1e-12, "plane-wave error " + fmt(wave) + ", mass drift " + fmt(mass)};
}

CriterionResult density_flux_orders() {
  Grid g{2, 32, 2.0 * kPi};
  const int k = 2;
  RVec mass, mom;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    Field u0 = random_shell(g, k, 23);
    Trajectory lin = linear_trajectory(identity_metric(2), u0, 0.1, dt);
    mass.push_back(mass_flux_residual(lin, k, paradifferential_source(lin, k)));
    Metric q = make_metric(2, {1.0, 0.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0});
    Trajectory ql = evolve_quasilinear(q, u0, 0.1, dt);
    RVec r = momentum_flux_residual(ql, k, paradifferential_source(ql, k));
    mom.push_back(*std::max_element(r.begin(), r.end()));
  }
  RVec om = orders(mass), op = orders(mom);
  double worst = std::min(*std::min_element(om.begin(), om.end()), *std::min_element(op.begin(), op.end()));
  return {worst >= 3.5, "mass residuals " + list(mass) + " (orders " + list(om) + "), momentum " + list(mom) +
                            " (orders " + list(op) + ")"};
}

CriterionResult hessian_spectrum() {
  const Grid g{2, 64, 2.0 * kPi};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double err = 0.0, ratio = INFINITY;
  int points = 0;
  for (double r = g.L / 32; r <= g.L / 4 * (1 + 1e-12); r *= 2) {
    WeightFamily w{r, 2};
    for (int i = 0; i < 100; ++i, ++points) {
      double rho = r * (0.05 + 3.95 * U(rng)), th = 2.0 * kPi * U(rng);
      RVec x{rho * std::cos(th), rho * std::sin(th)};
      RVec an = weight_eval(w, x).eigs;
      std::sort(an.begin(), an.end());
      RVec fd = sorted_eigs(oracle::fd_hessian(r, x, r * 1e-4), 2);
      for (int a = 0; a < 2; ++a) err = std::max(err, std::abs(an[a] - fd[a]) / std::max(1.0, std::abs(an[a])));
      ratio = std::min(ratio, an[0] / w.minorant(x));
    }
  }
  bool pass = err <= 1e-7 && ratio >= kHessianMinorant;
  return {pass, std::to_string(points) + " points, max eigenvalue error " + fmt(err) + ", min lambda/b_r " +
                    fmt(ratio) + " vs pinned " + fmt(kHessianMinorant)};
}

CriterionResult oracle_equivalence() {
  const Grid g{2, 8, 2.0 * kPi};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    Metric m = i % 2 ? hyperbolic() : identity_metric(2);
    Field u = random_dealiased(g, 200 + i), v = random_dealiased(g, 300 + i);
    double r = 0.3 + 1.7 * U(rng);
    RVec zero{0.0, 0.0};
    double I = interaction_I(u, v, r, zero, m), Io = oracle::interaction_I(u, v, r, m);
    double J = interaction_J4(u, v, r, m), Jo = oracle::interaction_J4(u, v, r, m);
    worst = std::max({worst, std::abs(I - Io) / std::max(1.0, std::abs(Io)),
                      std::abs(J - Jo) / std::max(1.0, std::abs(Jo))});
  }
  return {worst <= 1e-10, "max relative deviation " + fmt(worst)};
}

CriterionResult morawetz_audit() {
  std::string detail;
  bool pass = true;
  for (bool hyp : {false, true}) {
    ExperimentResult r = compute_experiment(audit_config(hyp));
    double d = summary_number(r, "max_rel_defect");
    pass = pass && r.exit_code == 0 && d <= kAuditTolerance;
    detail += std::string(detail.empty() ? "" : ", ") + (hyp ? "diag(1,-1) " : "Id ") + fmt(d);
  }
  return {pass, "relative defect " + detail + " (tolerance " + fmt(kAuditTolerance) + ")"};
}

CriterionResult coercivity() {
  ExperimentResult r = compute_experiment(coercivity_config(1001));
  double worst = summary_number(r, "min_ratio");
  bool pass = kCoercivity > 0.0 && worst >= kCoercivity;
  return {pass, "min ratio over 20 fresh seeds " + fmt(worst) + " vs pinned " + fmt(kCoercivity)};
}

CriterionResult noncoercivity() {
  ExperimentResult r = compute_experiment(noncoercive_config());
  RVec nr = r.summary.at("null_ratio").get<RVec>();
  double iso = summary_number(r, "isotropic_min");
  return {r.exit_code == 0, "null-cone ratios " + list(nr) + ", isotropic min " + fmt(iso) + ", worst fraction " +
                                fmt(summary_number(r, "max_null_over_isotropic"))};
}

CriterionResult bilinear() {
  ExperimentResult r = compute_experiment(bilinear_config(2001));
  double tr = summary_number(r, "transversal_max"), co = summary_number(r, "colocated_min");
  bool pass = kBilinearPin > 0.0 && r.exit_code == 0;
  return {pass, "transversal max " + fmt(tr) + ", co-located min " + fmt(co) + " vs pin " + fmt(kBilinearPin)};
}

CriterionResult atlas() {
  long long mismatches = 0, checked = 0;
  long long weak_id = -1, weak_hyp = -1;
  for (const Metric& m : {identity_metric(2), hyperbolic()}) {
    std::vector<long long> gi{static_cast<long long>(m.g0[0]), static_cast<long long>(m.g0[1]),
                              static_cast<long long>(m.g0[2]), static_cast<long long>(m.g0[3])};
    std::array<std::vector<long long>, 4> xi;
    Atlas a = resonance_atlas(m, 8, {}, [&](const Quadruple& q, const Classification& c) {
      for (int i = 0; i < 4; ++i) xi[i] = {std::llround(q.xi[i][0]), std::llround(q.xi[i][1])};
      ++checked;
      if (oracle::classify_exact(gi, 2, xi, q.signs) != c.cls) ++mismatches;
    });
    (m.definite ? weak_id : weak_hyp) = a.weakly_transversal_nonzero;
  }
  bool pass = weak_id == 0 && weak_hyp > 0 && mismatches == 0;
  return {pass, "weakly transversal Id " + std::to_string(weak_id) + ", diag(1,-1) " + std::to_string(weak_hyp) +
                    "; oracle mismatches " + std::to_string(mismatches) + " of " + std::to_string(checked)};
}

CriterionResult envelope() {
  ExperimentResult r = compute_experiment(envelope_config());
  double worst = summary_number(r, "max_ratio");
  return {worst <= kEnvelopeRatioBound && r.exit_code == 0,
          "max R_k " + fmt(worst) + " (bound " + fmt(kEnvelopeRatioBound) + ")"};
}

}  // namespace

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {"partition", "partition of unity", 5, partition_of_unity},
      {"flat", "linear flat exactness", 5, linear_flat_exactness},
      {"density-flux", "density-flux identity orders", 120, density_flux_orders},
      {"hessian", "Hessian spectrum and minorant", 10, hessian_spectrum},
      {"oracle", "brute-force oracle equivalence", 30, oracle_equivalence},
      {"audit", "Morawetz identity audit", 180, morawetz_audit},
      {"coercivity", "coercivity of the interaction term", 300, coercivity},
      {"noncoercive", "non-coercivity demonstration", 120, noncoercivity},
      {"bilinear", "bilinear transversality", 240, bilinear},
      {"atlas", "resonance atlas", 120, atlas},
      {"envelope", "envelope propagation", 180, envelope},
  };
  return list;
}

CriterionResult run_criterion(const Criterion& c) {
  auto t0 = std::chrono::steady_clock::now();
  CriterionResult r;
  try {
    r = c.body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.seconds > c.budget_seconds) {
    r.pass = false;
    r.detail += "; over the runtime budget";
  }
  return r;
}

std::string format_result(const Criterion& c, const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << r.detail << " [" << std::fixed
     << std::setprecision(1) << r.seconds << " s / " << c.budget_seconds << " s]";
  return os.str();
}

std::string calibration_report() {
  std::ostringstream os;
  os << std::setprecision(10);
  {
    ExperimentResult r = compute_experiment(coercivity_config(1));
    os << "coercivity min ratio (seeds 1..20): " << summary_number(r, "min_ratio") << '\n';
  }
  {
    ExperimentResult r = compute_experiment(bilinear_config(1));
    os << "bilinear transversal max (seeds 1..20): " << summary_number(r, "transversal_max") << '\n'
       << "bilinear co-located min (seeds 1..20): " << summary_number(r, "colocated_min") << '\n'
       << "bernstein ratio max: " << summary_number(r, "bernstein_max") << '\n';
  }
  {
    double lo = INFINITY;
    for (double r = kPi / 16; r <= kPi / 2 * (1 + 1e-12); r *= 2) {
      WeightFamily w{r, 2};
      for (int i = 1; i < 4000; ++i) {
        RVec x{4.0 * r * i / 4000.0, 0.0};
        RVec e = weight_eval(w, x).eigs;
        lo = std::min(lo, *std::min_element(e.begin(), e.end()) / w.minorant(x));
      }
    }
    os << "hessian minorant min lambda/b_r: " << lo << " (closed form " << 0.5 * std::exp(-0.25) << ")\n";
  }
  {
    // Gaussian lower bound and Besov bound on the coercivity data.
    ExperimentConfig c = coercivity_config(1);
    Metric m = c.metric();
    const double lambda = std::ldexp(1.0, c.data.shell);
    double lower = INFINITY, besov = 0.0, floor = INFINITY;
    RVec rs;
    for (double r = 4.0 * c.grid.L / c.grid.N; r <= c.grid.L / 4 * (1 + 1e-12); r *= 2) rs.push_back(r);
    for (double r : rs) floor = std::min(floor, gaussian_fourier_floor(c.grid, r));
    for (int i = 0; i < c.seeds; ++i) {
      Field u0 = make_data(c, c.seed + i);
      for (double r : rs)
        lower = std::min(lower, interaction_J4(u0, u0, r, m) / gaussian_form(u0, u0, r, m));
      Trajectory tr = make_trajectory(c, u0);
      double n0 = std::pow(l2_norm(u0), 2);
      besov = std::max(besov, besov_bilinear_norm(tr, tr, RVec(2, 0.0)).sup / (std::sqrt(lambda) * n0));
    }
    os << "gaussian lower bound min J4/form: " << lower << '\n'
       << "fourier floor min over r sweep: " << floor << '\n'
       << "besov bound max sup_j / (lambda^1/2 |u0|^2): " << besov << '\n';
  }
  {
    Grid g{2, 64, 2.0 * kPi};
    double lo = INFINITY;
    for (int i = 0; i < 20; ++i) {
      lo = std::min(lo, noncoercivity_gap(random_dealiased(g, 500 + i), identity_metric(2)).ratio);
      for (int k = 1; k <= 4; ++k)
        lo = std::min(lo, noncoercivity_gap(random_shell(g, k, 600 + i), identity_metric(2)).ratio);
    }
    os << "isotropic gap min (g = Id): " << lo << '\n';
  }
  for (int n : {2, 3}) {
    RVec c;
    std::vector<int> Ns = n == 2 ? std::vector<int>{32, 64, 128} : std::vector<int>{8, 16, 32};
    for (int N : Ns) {
      Grid g{n, N, 2.0 * kPi};
      PacketSpec p{RVec(n, kPi), RVec(n, 0.0), 0.6, 1.0};
      ImCleanReport rep = im_clean_check(wave_packet(g, p), identity_metric(n), 1.0);
      c.push_back(rep.lhs / rep.rhs);
      os << "im-clean n=" << n << " N=" << N << ": " << c.back() << '\n';
    }
    double q = (c[0] - c[1]) / (c[1] - c[2]);
    double order = std::log2(std::abs(q));
    double extrap = c[2] + (c[2] - c[1]) / (std::pow(2.0, order) - 1.0);
    os << "im-clean n=" << n << " observed order " << order << ", extrapolated " << extrap << " (pinned "
       << im_clean_constant(n) << ")\n";
  }
  return os.str();
}

}  // namespace mlab
