#include "mlab/flows.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "fd.hpp"

namespace mlab {

std::string model_name(const Model& m) {
  switch (m.kind) {
    case Model::linear: return "linear";
    case Model::semilinear: return "semilinear";
    case Model::quasilinear: return "quasilinear";
    case Model::source: return "source";
  }
  return "?";
}

namespace {

int step_count(double T, double dt) {
  if (!(dt > 0.0) || !(T >= 0.0)) throw Error("time step must be positive and horizon non-negative");
  double s = T / dt;
  int M = static_cast<int>(std::lround(s));
  if (std::abs(s - M) > 1e-9 * std::max(1.0, s)) throw Error("T must be a multiple of dt");
  return M;
}

RVec abs_sq(const Field& u) {
  RVec r(u.v.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::norm(u.v[i]);
  return r;
}

// |u|^2 evaluated without aliasing, returned on the grid of u.
RVec abs_sq_exact(const Field& u) {
  Field fine = upsample(u, 2);
  Field rho(fine.grid);
  for (std::size_t i = 0; i < rho.v.size(); ++i) rho.v[i] = std::norm(fine.v[i]);
  Field back = downsample(rho, u.grid.N);
  RVec r(back.v.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = back.v[i].real();
  return r;
}

Field kinetic(const Metric& m, const Field& u, double t) {
  const int n = m.n;
  return apply_symbol(u, [&](const double* xi, double, std::size_t) {
    return std::polar(1.0, -t * norm_sq_g(m, std::span<const double>(xi, n)));
  });
}

// Delta_{g0} u as a multiplier.
Field kinetic_generator(const Metric& m, const Field& u) {
  const int n = m.n;
  return apply_symbol(u, [&](const double* xi, double, std::size_t) {
    return cplx(-norm_sq_g(m, std::span<const double>(xi, n)));
  });
}

void check_margin(const Metric& m, const Field& u) {
  if (!m.has_coupling()) return;
  double a = max_abs(u);
  if (m.smin - coupling_norm(m) * a * a < 0.5 * m.smin)
    throw Error("non-degeneracy margin violated: sigma_min(g0) - |h| max|u|^2 < sigma_min(g0)/2");
}

void check_cap(const Field& u, double cap0) {
  double a = max_abs(u);
  if (!std::isfinite(a) || a > cap0) throw Error("amplitude-cap exceeded");
}

Field apply_filter(const Field& u, const StepOptions& opt) {
  if (opt.filter_alpha <= 0.0) return u;
  auto fr = freqs(u.grid);
  const int n = u.grid.n;
  const double kmax = u.grid.N / 3.0;
  return apply_symbol(u, [&](const double*, double, std::size_t m) {
    double k2 = 0.0;
    for (int a = 0; a < n; ++a) k2 += double(fr->k[m * n + a]) * fr->k[m * n + a];
    return cplx(std::exp(-opt.filter_alpha * std::pow(std::sqrt(k2) / kmax, opt.filter_order)));
  });
}

Field axpy(const Field& x, cplx a, const Field& y) {
  Field z(x.grid);
  for (std::size_t i = 0; i < z.v.size(); ++i) z.v[i] = x.v[i] + a * y.v[i];
  return z;
}

}  // namespace

FieldMetric constant_field_metric(const Metric& m, const Grid& grid) {
  FieldMetric g{grid, m.n, {}};
  for (int j = 0; j < m.n; ++j)
    for (int k = 0; k < m.n; ++k) g.g.emplace_back(grid.size(), m.g(j, k));
  return g;
}

FieldMetric truncated_metric(const Metric& m, const Field& u, int k) {
  FieldMetric g = constant_field_metric(m, u.grid);
  if (!m.has_coupling()) return g;
  Field low = lp_project(u, LPSelector::le(k - 1));
  RVec rho = abs_sq_exact(low);
  Field rf(u.grid);
  for (std::size_t i = 0; i < rho.size(); ++i) rf.v[i] = rho[i];
  rf = lp_project(rf, LPSelector::le(k - 1));
  for (int j = 0; j < m.n; ++j)
    for (int l = 0; l < m.n; ++l) {
      RVec& a = g.g[j * m.n + l];
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += m.coupling(j, l) * rf.v[i].real();
    }
  return g;
}

double dt_max(const Metric& m, const Grid& g) {
  auto fr = freqs(g);
  double mx = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!is_dealiased(g, i)) continue;
    mx = std::max(mx, std::abs(norm_sq_g(m, std::span<const double>(&fr->xi[i * g.n], g.n))));
  }
  return mx > 0.0 ? 0.5 / mx : INFINITY;
}

Field evolve_linear_flat(const Metric& m, const Field& u0, double t) {
  if (m.n != u0.grid.n) throw Error("metric and grid dimensions differ");
  if (t == 0.0) return u0;
  return kinetic(m, u0, t);
}

Trajectory linear_trajectory(const Metric& m, const Field& u0, double T, double dt,
                             int save_every) {
  const int M = step_count(T, dt);
  Trajectory tr{u0.grid, m, Model{Model::linear}, 0.0, dt * save_every, {}};
  for (int s = 0; s <= M; s += save_every) tr.slices.push_back(evolve_linear_flat(m, u0, s * dt));
  return tr;
}

Trajectory evolve_semilinear(const Metric& m, double sigma, const Field& u0, double T,
                             double dt, const StepOptions& opt) {
  const int M = step_count(T, dt);
  Trajectory tr{u0.grid, m, Model{Model::semilinear, sigma}, 0.0, dt * opt.save_every, {}};
  Field u = dealias(u0);
  const double cap = opt.amplitude_cap * max_abs(u);
  tr.slices.push_back(u);
  for (int s = 1; s <= M; ++s) {
    u = kinetic(m, u, 0.5 * dt);
    for (auto& z : u.v) z *= std::polar(1.0, -sigma * std::norm(z) * dt);
    u = dealias(kinetic(m, u, 0.5 * dt));
    u = apply_filter(u, opt);
    check_cap(u, cap);
    if (s % opt.save_every == 0) tr.slices.push_back(u);
  }
  return tr;
}

Field quasilinear_rhs(const Metric& m, const Field& u) {
  const int n = m.n;
  std::vector<Field> du;
  for (int a = 0; a < n; ++a) du.push_back(derivative(u, a));
  RVec rho = m.has_coupling() ? abs_sq(u) : RVec{};
  Field div(u.grid);
  for (int j = 0; j < n; ++j) {
    Field flux(u.grid);
    for (int k = 0; k < n; ++k) {
      const double g0 = m.g(j, k), h = m.coupling(j, k);
      if (g0 == 0.0 && h == 0.0) continue;
      for (std::size_t i = 0; i < flux.v.size(); ++i)
        flux.v[i] += (g0 + (h != 0.0 ? h * rho[i] : 0.0)) * du[k].v[i];
    }
    Field d = derivative(flux, j);
    for (std::size_t i = 0; i < div.v.size(); ++i) div.v[i] += d.v[i];
  }
  return dealias(cplx(0.0, 1.0) * div);
}

Trajectory evolve_quasilinear(const Metric& m, const Field& u0, double T, double dt,
                              const StepOptions& opt) {
  const int M = step_count(T, dt);
  Trajectory tr{u0.grid, m, Model{Model::quasilinear}, 0.0, dt * opt.save_every, {}};
  Field u = dealias(u0);
  check_margin(m, u);
  const double cap = opt.amplitude_cap * max_abs(u);
  tr.slices.push_back(u);
  // With the integrating factor the stepped variable is w = e^{-it Delta_g0} u and
  // the linear part is removed from the right-hand side.
  Metric nonlinear_part = m;
  for (auto& x : nonlinear_part.g0) x = 0.0;
  auto rhs = [&](double t, const Field& w) {
    if (!opt.integrating_factor) return quasilinear_rhs(m, w);
    Field v = kinetic(m, w, t);
    return kinetic(m, quasilinear_rhs(nonlinear_part, v), -t);
  };
  double t = 0.0;
  for (int s = 1; s <= M; ++s) {
    Field w = opt.integrating_factor ? kinetic(m, u, -t) : u;
    Field k1 = rhs(t, w);
    Field k2 = rhs(t + 0.5 * dt, axpy(w, 0.5 * dt, k1));
    Field k3 = rhs(t + 0.5 * dt, axpy(w, 0.5 * dt, k2));
    Field k4 = rhs(t + dt, axpy(w, dt, k3));
    for (std::size_t i = 0; i < w.v.size(); ++i)
      w.v[i] += dt / 6.0 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
    t = s * dt;
    u = opt.integrating_factor ? kinetic(m, w, t) : w;
    u = apply_filter(u, opt);
    check_cap(u, cap);
    check_margin(m, u);
    if (s % opt.save_every == 0) tr.slices.push_back(u);
  }
  return tr;
}

Trajectory paradifferential_source(const Trajectory& traj, int k) {
  if (traj.size() < 5) throw Error("paradifferential source needs at least 5 slices");
  const Metric& m = traj.metric;
  const int n = m.n;
  std::vector<Field> uk;
  for (const auto& u : traj.slices) uk.push_back(lp_project(u, LPSelector::at(k)));
  Trajectory out{traj.grid, m, Model{Model::source, traj.model.sigma, k}, traj.time(2), traj.dt, {}};
  for (std::size_t s = 2; s + 2 < traj.size(); ++s) {
    Field dtu(traj.grid, detail::centered_dt(uk[s - 2].v, uk[s - 1].v, uk[s + 1].v, uk[s + 2].v, traj.dt));
    FieldMetric g = truncated_metric(m, traj.slices[s], k);
    // d_j g^{jl} d_l u_k on the doubled grid so the product is exact.
    Field v = upsample(uk[s], 2);
    std::vector<Field> gv;
    for (int j = 0; j < n * n; ++j) {
      Field c(traj.grid);
      for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = g.g[j][i];
      gv.push_back(upsample(c, 2));
    }
    std::vector<Field> dv;
    for (int a = 0; a < n; ++a) dv.push_back(derivative(v, a));
    Field op(v.grid);
    for (int j = 0; j < n; ++j) {
      Field flux(v.grid);
      for (int l = 0; l < n; ++l)
        for (std::size_t i = 0; i < flux.v.size(); ++i)
          flux.v[i] += gv[j * n + l].v[i].real() * dv[l].v[i];
      Field d = derivative(flux, j);
      for (std::size_t i = 0; i < op.v.size(); ++i) op.v[i] += d.v[i];
    }
    Field opc = downsample(op, traj.grid.N);
    Field f(traj.grid);
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = cplx(0.0, 1.0) * dtu.v[i] + opc.v[i];
    out.slices.push_back(std::move(f));
  }
  return out;
}

Trajectory equation_source(const Trajectory& traj) {
  if (traj.size() < 5) throw Error("equation source needs at least 5 slices");
  const Metric& m = traj.metric;
  Trajectory out{traj.grid, m, Model{Model::source, traj.model.sigma, -1}, traj.time(2), traj.dt, {}};
  const auto& u = traj.slices;
  for (std::size_t s = 2; s + 2 < traj.size(); ++s) {
    Field lap = kinetic_generator(m, u[s]);
    CVec dtu = detail::centered_dt(u[s - 2].v, u[s - 1].v, u[s + 1].v, u[s + 2].v, traj.dt);
    Field f(traj.grid);
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = cplx(0.0, 1.0) * dtu[i] + lap.v[i];
    out.slices.push_back(std::move(f));
  }
  return out;
}

void write_trajectory(const std::string& dir, const Trajectory& t) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  j["model"] = model_name(t.model);
  j["sigma"] = t.model.sigma;
  j["shell"] = t.model.shell;
  j["t0"] = t.t0;
  j["dt"] = t.dt;
  j["grid"] = {{"n", t.grid.n}, {"N", t.grid.N}, {"L", t.grid.L}};
  j["g0"] = t.metric.g0;
  j["h"] = t.metric.h;
  j["slices"] = t.size();
  for (std::size_t s = 0; s < t.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "slice_%05zu.bin", s);
    write_field((fs::path(dir) / name).string(), t.slices[s]);
  }
  std::ofstream((fs::path(dir) / "manifest.json").string()) << j.dump(2) << "\n";
}

Trajectory read_trajectory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is((fs::path(dir) / "manifest.json").string());
  if (!is) throw Error("missing trajectory manifest in " + dir);
  nlohmann::json j = nlohmann::json::parse(is);
  Trajectory t;
  t.grid = Grid{j["grid"]["n"], j["grid"]["N"], j["grid"]["L"]};
  t.metric = make_metric(t.grid.n, j["g0"].get<RVec>(), j["h"].get<RVec>());
  std::string name = j["model"];
  t.model.kind = name == "linear" ? Model::linear
               : name == "semilinear" ? Model::semilinear
               : name == "quasilinear" ? Model::quasilinear
               : Model::source;
  t.model.sigma = j["sigma"];
  t.model.shell = j["shell"];
  t.t0 = j["t0"];
  t.dt = j["dt"];
  std::size_t count = j["slices"];
  for (std::size_t s = 0; s < count; ++s) {
    char fname[32];
    std::snprintf(fname, sizeof fname, "slice_%05zu.bin", s);
    Field f = read_field((fs::path(dir) / fname).string());
    if (!(f.grid == t.grid)) throw Error("slice grid differs from manifest");
    t.slices.push_back(std::move(f));
  }
  return t;
}

}  // namespace mlab
