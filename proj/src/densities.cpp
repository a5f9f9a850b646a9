#include "mlab/densities.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "fd.hpp"

namespace mlab {

namespace {

Field real_to_field(const Grid& g, const RVec& a) {
  Field f(g);
  for (std::size_t i = 0; i < a.size(); ++i) f.v[i] = a[i];
  return f;
}

bool is_constant(const FieldMetric& g) {
  for (const auto& a : g.g)
    for (double x : a)
      if (x != a[0]) return false;
  return true;
}

// g^{jm} d_m X for every j.
std::vector<Field> raised_gradient(const Field& x, const FieldMetric& g) {
  const int n = g.n;
  std::vector<Field> d;
  for (int a = 0; a < n; ++a) d.push_back(derivative(x, a));
  std::vector<Field> out(n, Field(x.grid));
  for (int j = 0; j < n; ++j)
    for (int m = 0; m < n; ++m) {
      const RVec& gj = g.at(j, m);
      for (std::size_t i = 0; i < x.v.size(); ++i) out[j].v[i] += gj[i] * d[m].v[i];
    }
  return out;
}

DensitySet densities_fine(const Field& v, const FieldMetric& g) {
  const int n = g.n;
  const std::size_t sz = v.v.size();
  DensitySet d;
  d.grid = v.grid;
  d.n = n;
  d.M.resize(sz);
  for (std::size_t i = 0; i < sz; ++i) d.M[i] = std::norm(v.v[i]);
  for (int a = 0; a < n; ++a) {
    Field dv = derivative(v, a);
    RVec p(sz);
    for (std::size_t i = 0; i < sz; ++i) p[i] = -2.0 * std::imag(std::conj(v.v[i]) * dv.v[i]);
    d.P.push_back(std::move(p));
  }
  for (int j = 0; j < n; ++j) {
    RVec p(sz, 0.0);
    for (int l = 0; l < n; ++l)
      for (std::size_t i = 0; i < sz; ++i) p[i] += g.at(j, l)[i] * d.P[l][i];
    d.Pup.push_back(std::move(p));
  }
  std::vector<Field> Dv = raised_gradient(v, g);
  std::vector<std::vector<Field>> DDv;  // DDv[k][j] = d^j d^k v
  for (int k = 0; k < n; ++k) DDv.push_back(raised_gradient(Dv[k], g));
  d.E.assign(n * n, RVec(sz));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      RVec& e = d.E[k * n + j];
      for (std::size_t i = 0; i < sz; ++i)
        e[i] = 2.0 * std::real(Dv[k].v[i] * std::conj(Dv[j].v[i]) -
                               v.v[i] * std::conj(DDv[k][j].v[i]));
    }
  return d;
}

}  // namespace

RVec real_derivative(const Grid& g, const RVec& a, int axis) {
  Field d = derivative(real_to_field(g, a), axis);
  RVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = d.v[i].real();
  return out;
}

double l1_norm(const Grid& g, const RVec& a) {
  double s = 0.0;
  for (double x : a) s += std::abs(x);
  return s * g.cell();
}

FieldMetric upsample_metric(const FieldMetric& g, int factor) {
  FieldMetric out{g.grid.refined(factor), g.n, {}};
  for (const auto& a : g.g) {
    bool flat = true;
    for (double x : a) flat = flat && x == a[0];
    if (flat) {
      out.g.emplace_back(out.grid.size(), a[0]);
      continue;
    }
    Field f = upsample(real_to_field(g.grid, a), factor);
    RVec r(f.v.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f.v[i].real();
    out.g.push_back(std::move(r));
  }
  return out;
}

DensitySet compute_densities(const Field& u, const Metric& m) {
  if (m.n != u.grid.n) throw Error("metric and grid dimensions differ");
  Field v = upsample(u, 2);
  return densities_fine(v, constant_field_metric(m, v.grid));
}

DensitySet compute_densities(const Field& u, const FieldMetric& g) {
  if (!(g.grid == u.grid)) throw Error("field-valued metric lives on a different grid");
  return densities_fine(upsample(u, 2), upsample_metric(g, 2));
}

SourceDensities source_densities(const Field& v0, const Field& f0, const FieldMetric& g0,
                                 const FieldMetric* dgdt0) {
  if (!(v0.grid == f0.grid) || !(g0.grid == v0.grid)) throw Error("source inputs differ in grid");
  const int n = g0.n;
  Field v = upsample(v0, 2), f = upsample(f0, 2);
  FieldMetric g = upsample_metric(g0, 2);
  const std::size_t sz = v.v.size();
  SourceDensities s;
  s.grid = v.grid;
  s.Fm.resize(sz);
  for (std::size_t i = 0; i < sz; ++i) s.Fm[i] = 2.0 * std::imag(f.v[i] * std::conj(v.v[i]));
  std::vector<Field> Dvb = raised_gradient(conj(v), g);
  std::vector<Field> Dfb = raised_gradient(conj(f), g);
  s.G.assign(n, RVec(sz, 0.0));
  if (!is_constant(g0) || dgdt0) {
    DensitySet d = densities_fine(v, g);
    std::vector<Field> dv, Dv;
    for (int a = 0; a < n; ++a) dv.push_back(derivative(v, a));
    Dv = raised_gradient(v, g);
    // dg[m][k*n+l] = d_m g^{kl}
    std::vector<std::vector<RVec>> dg(n);
    for (int m = 0; m < n; ++m)
      for (const auto& a : g.g) dg[m].push_back(real_derivative(g.grid, a, m));
    // Lower-index flux E^k_m = 2 Re(d^k v d_m conj(v) - v d_m d^k conj(v)).
    std::vector<RVec> Elow(n * n, RVec(sz));
    for (int k = 0; k < n; ++k) {
      Field Dkb = conj(Dv[k]);
      for (int m = 0; m < n; ++m) {
        Field dDkb = derivative(Dkb, m);
        for (std::size_t i = 0; i < sz; ++i)
          Elow[k * n + m][i] = 2.0 * std::real(Dv[k].v[i] * std::conj(dv[m].v[i]) -
                                               v.v[i] * dDkb.v[i]);
      }
    }
    std::unique_ptr<FieldMetric> dgdt;
    if (dgdt0) dgdt = std::make_unique<FieldMetric>(upsample_metric(*dgdt0, 2));
    for (int j = 0; j < n; ++j) {
      RVec& G = s.G[j];
      for (std::size_t i = 0; i < sz; ++i) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) {
          if (dgdt) acc += dgdt->at(j, m)[i] * d.P[m][i];
          for (int k = 0; k < n; ++k) acc -= dg[k][j * n + m][i] * Elow[k * n + m][i];
        }
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double raised = 0.0;
            for (int m = 0; m < n; ++m) raised += g.at(j, m)[i] * dg[m][k * n + l][i];
            acc += 2.0 * raised * std::real(dv[k].v[i] * std::conj(dv[l].v[i]));
          }
        G[i] = acc;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    RVec p(sz);
    for (std::size_t i = 0; i < sz; ++i)
      p[i] = s.G[j][i] - 2.0 * std::real(f.v[i] * Dvb[j].v[i]) + 2.0 * std::real(v.v[i] * Dfb[j].v[i]);
    s.Fp.push_back(std::move(p));
  }
  return s;
}

ResidualReport flux_residuals(const Trajectory& traj, int k, const Trajectory& fk) {
  const std::size_t S = traj.size();
  if (S < 5) throw Error("residual audit needs at least 5 slices");
  if (fk.size() != S - 4 || std::abs(fk.dt - traj.dt) > 1e-14 * traj.dt ||
      std::abs(fk.t0 - traj.time(2)) > 1e-12 * std::max(1.0, traj.dt))
    throw Error("source trajectory is misaligned with the field trajectory");
  const Metric& m = traj.metric;
  const int n = m.n;
  ResidualReport rep;
  rep.momentum.assign(n, {});
  rep.momentum_sup.assign(n, 0.0);

  struct Slot {
    Field v;
    FieldMetric g;
    DensitySet d;
  };
  std::vector<Slot> win;
  auto load = [&](std::size_t s) {
    Field v = lp_project(traj.slices[s], LPSelector::at(k));
    FieldMetric g = truncated_metric(m, traj.slices[s], k);
    DensitySet d = compute_densities(v, g);
    return Slot{std::move(v), std::move(g), std::move(d)};
  };
  for (std::size_t s = 0; s < 5; ++s) win.push_back(load(s));
  for (std::size_t s = 2; s + 2 < S; ++s) {
    if (s > 2) {
      win.erase(win.begin());
      win.push_back(load(s + 2));
    }
    const double dt = traj.dt;
    const Slot& c = win[2];
    const Grid& fine = c.d.grid;
    RVec dM = detail::centered_dt(win[0].d.M, win[1].d.M, win[3].d.M, win[4].d.M, dt);
    FieldMetric dgdt = c.g;
    for (int a = 0; a < n * n; ++a)
      dgdt.g[a] = detail::centered_dt(win[0].g.g[a], win[1].g.g[a], win[3].g.g[a], win[4].g.g[a], dt);
    bool moving = m.has_coupling();
    SourceDensities src = source_densities(c.v, fk.slices[s - 2], c.g, moving ? &dgdt : nullptr);

    RVec rm = dM;
    for (int j = 0; j < n; ++j) {
      RVec dP = real_derivative(fine, c.d.Pup[j], j);
      for (std::size_t i = 0; i < rm.size(); ++i) rm[i] -= dP[i];
    }
    for (std::size_t i = 0; i < rm.size(); ++i) rm[i] -= src.Fm[i];
    rep.t.push_back(traj.time(s));
    rep.mass.push_back(l1_norm(fine, rm));
    rep.mass_sup = std::max(rep.mass_sup, rep.mass.back());

    for (int j = 0; j < n; ++j) {
      RVec rp = detail::centered_dt(win[0].d.Pup[j], win[1].d.Pup[j], win[3].d.Pup[j],
                                    win[4].d.Pup[j], dt);
      for (int kk = 0; kk < n; ++kk) {
        RVec dE = real_derivative(fine, c.d.flux(kk, j), kk);
        for (std::size_t i = 0; i < rp.size(); ++i) rp[i] -= dE[i];
      }
      for (std::size_t i = 0; i < rp.size(); ++i) rp[i] -= src.Fp[j][i];
      rep.momentum[j].push_back(l1_norm(fine, rp));
      rep.momentum_sup[j] = std::max(rep.momentum_sup[j], rep.momentum[j].back());
    }
  }
  return rep;
}

double mass_flux_residual(const Trajectory& traj, int k, const Trajectory& fk) {
  return flux_residuals(traj, k, fk).mass_sup;
}

RVec momentum_flux_residual(const Trajectory& traj, int k, const Trajectory& fk) {
  return flux_residuals(traj, k, fk).momentum_sup;
}

std::string residual_csv(const ResidualReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "t,mass_residual";
  for (std::size_t j = 0; j < r.momentum.size(); ++j) os << ",momentum_residual_" << j + 1;
  os << "\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    os << r.t[i] << "," << r.mass[i];
    for (const auto& mj : r.momentum) os << "," << mj[i];
    os << "\n";
  }
  return os.str();
}

Field weighted_mass_density(const Field& u, const BilinearSymbol& a, double sym_tol) {
  const Grid& g = u.grid;
  const int n = g.n;
  auto fr = freqs(g);
  CVec X = fft(g, u.v);
  std::vector<std::size_t> modes;
  for (std::size_t m = 0; m < X.size(); ++m)
    if (is_dealiased(g, m) && X[m] != 0.0) modes.push_back(m);
  Grid fine = g.refined(2);
  CVec Y(fine.size());
  const double scale = static_cast<double>(fine.size()) / (double(g.size()) * double(g.size()));
  double amax = 0.0;
  for (std::size_t p : modes)
    for (std::size_t q : modes) {
      const double* xi = &fr->xi[p * n];
      const double* eta = &fr->xi[q * n];
      cplx apq = a(xi, eta);
      amax = std::max(amax, std::abs(apq));
      if (p < q) {
        cplx aqp = a(eta, xi);
        if (std::abs(aqp - std::conj(apq)) > sym_tol * std::max(1.0, std::abs(apq)))
          throw Error("bilinear symbol is not Hermitian-symmetric");
      }
      std::size_t idx = 0;
      for (int d = 0; d < n; ++d) {
        int k = fr->k[p * n + d] - fr->k[q * n + d];
        idx = idx * fine.N + static_cast<std::size_t>((k + fine.N) % fine.N);
      }
      Y[idx] += apq * X[p] * std::conj(X[q]) * scale;
    }
  return Field(fine, ifft(fine, Y));
}

}  // namespace mlab
