#include "mlab/morawetz.hpp"

#include "mlab/constants.hpp"

#include <gsl/gsl_integration.h>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "fd.hpp"

namespace mlab {

// ---- weights ---------------------------------------------------------------

double WeightFamily::phi(double rho) const {
  return is_cone() ? rho : rho + 0.5 * r * std::exp(-rho / r);
}
double WeightFamily::dphi(double rho) const {
  return is_cone() ? 1.0 : 1.0 - 0.5 * std::exp(-rho / r);
}
double WeightFamily::d2phi(double rho) const {
  return is_cone() ? 0.0 : 0.5 * std::exp(-rho / r) / r;
}

namespace {
double radius(const RVec& x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}
}  // namespace

double WeightFamily::a(const RVec& x) const { return phi(radius(x)); }

RVec WeightFamily::grad(const RVec& x) const {
  RVec g(x.size(), 0.0);
  double rho = radius(x);
  if (rho == 0.0) return g;
  double d = dphi(rho) / rho;
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = d * x[j];
  return g;
}

RVec WeightFamily::hessian(const RVec& x) const {
  const std::size_t m = x.size();
  double rho = radius(x);
  if (rho == 0.0) throw Error("Hessian of the weight is singular at the origin");
  const double rad = d2phi(rho), tan = dphi(rho) / rho;
  RVec h(m * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      double zz = x[j] * x[k] / (rho * rho);
      h[j * m + k] = rad * zz + tan * ((j == k ? 1.0 : 0.0) - zz);
    }
  return h;
}

double WeightFamily::minorant(const RVec& x) const {
  if (is_cone()) return 0.0;
  double rho = radius(x);
  return std::exp(-rho * rho / (r * r)) / r;
}

WeightEval weight_eval(const WeightFamily& w, const RVec& x) {
  if (!(w.r > 0.0)) throw Error("weight scale must be positive");
  WeightEval e;
  e.a = w.a(x);
  e.grad = w.grad(x);
  double rho = radius(x);
  double tan = rho > 0.0 ? w.dphi(rho) / rho : INFINITY;
  e.eigs.assign(x.size(), tan);
  e.eigs.back() = w.d2phi(rho);
  return e;
}

double origin_cell_trace(const WeightFamily& w, double h) {
  // (1/h^n) * 2n * int_face phi'(rho) (h/2)/rho dS, faces identical by symmetry.
  static gsl_integration_glfixed_table* rule = gsl_integration_glfixed_table_alloc(24);
  const int n = w.n;
  const double half = 0.5 * h;
  auto normal_flux = [&](double s2) {
    double rho = std::sqrt(half * half + s2);
    return w.dphi(rho) * half / rho;
  };
  auto quad = [&](auto&& f) {
    double s = 0.0, x, wt;
    for (std::size_t i = 0; i < rule->n; ++i) {
      gsl_integration_glfixed_point(-half, half, i, &x, &wt, rule);
      s += wt * f(x);
    }
    return s;
  };
  double face = 0.0;
  if (n == 1) {
    face = normal_flux(0.0);
  } else if (n == 2) {
    face = quad([&](double s) { return normal_flux(s * s); });
  } else if (n == 3) {
    face = quad([&](double s) { return quad([&](double t) { return normal_flux(s * s + t * t); }); });
  } else {
    throw Error("dimension not supported");
  }
  return 2.0 * n * face / std::pow(h, n);
}

// ---- kernels ---------------------------------------------------------------

std::shared_ptr<const KernelSet> kernels(const Grid& g, const WeightFamily& w, bool consistent) {
  if (w.n != g.n) throw Error("dimension mismatch");
  static std::map<std::tuple<int, int, double, double, bool>, std::shared_ptr<const KernelSet>> cache;
  static std::mutex mu;
  auto key = std::make_tuple(g.n, g.N, g.L, w.r, consistent);
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const int n = g.n;
  auto ks = std::make_shared<KernelSet>();
  ks->grid = g;
  ks->weight = w;
  ks->grad.assign(n, RVec(g.size()));
  ks->hess.assign(n * n, RVec(g.size()));
  const double origin = origin_cell_trace(w, g.dx()) / n;
  RVec z(n);
  std::vector<bool> antipodal(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t rem = i;
    for (int a = n - 1; a >= 0; --a) {
      int ia = static_cast<int>(rem % g.N);
      rem /= g.N;
      antipodal[a] = 2 * ia == g.N;
      z[a] = std::remainder(ia * g.dx(), g.L);
    }
    double rho = radius(z);
    if (rho == 0.0) {
      for (int j = 0; j < n; ++j) ks->hess[j * n + j][i] = origin;
      continue;
    }
    const double d1 = w.dphi(rho), rad = w.d2phi(rho), tan = d1 / rho;
    for (int j = 0; j < n; ++j) {
      if (!antipodal[j]) ks->grad[j][i] = d1 * z[j] / rho;
      for (int k = 0; k < n; ++k) {
        double zz = z[j] * z[k] / (rho * rho);
        if (j != k && (antipodal[j] || antipodal[k])) continue;
        ks->hess[j * n + k][i] = rad * zz + tan * ((j == k ? 1.0 : 0.0) - zz);
      }
    }
  }
  auto to_hat = [&](const RVec& a) {
    CVec c(a.begin(), a.end());
    return fft(g, c);
  };
  for (const auto& a : ks->grad) ks->grad_hat.push_back(to_hat(a));
  if (consistent) {
    ks->consistent = true;
    auto fr = freqs(g);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        CVec h(g.size());
        for (std::size_t i = 0; i < h.size(); ++i) {
          bool nyquist = false;
          for (int a = 0; a < n; ++a) nyquist = nyquist || 2 * std::abs(fr->k[i * n + a]) == g.N;
          if (nyquist) continue;
          h[i] = 0.5 * cplx(0.0, 1.0) *
                 (fr->xi[i * n + k] * ks->grad_hat[j][i] + fr->xi[i * n + j] * ks->grad_hat[k][i]);
        }
        CVec x = ifft(g, h);
        for (std::size_t i = 0; i < x.size(); ++i) ks->hess[j * n + k][i] = x[i].real();
        ks->hess_hat.push_back(std::move(h));
      }
  } else {
    for (const auto& a : ks->hess) ks->hess_hat.push_back(to_hat(a));
  }
  std::lock_guard<std::mutex> lk(mu);
  cache.emplace(key, ks);
  return ks;
}

namespace {

// Index of -xi for every mode.
const std::vector<std::size_t>& negated_modes(const Grid& g) {
  static std::map<std::tuple<int, int>, std::vector<std::size_t>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lk(mu);
  auto key = std::make_tuple(g.n, g.N);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<std::size_t> neg(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::size_t rem = i, out = 0, stride = 1;
    for (int a = g.n - 1; a >= 0; --a) {
      std::size_t ia = rem % g.N;
      rem /= g.N;
      out += ((g.N - ia) % g.N) * stride;
      stride *= g.N;
    }
    neg[i] = out;
  }
  return cache.emplace(key, std::move(neg)).first->second;
}

// cell^2 sum_{x,y} K(x-y) A(x) B(y) from transforms: cell^2/|grid| sum_xi A^(-xi) K^(xi) B^(xi).
cplx pair_hat(const Grid& g, const CVec& K, const CVec& A, const CVec& B) {
  const auto& neg = negated_modes(g);
  cplx s = 0.0;
  for (std::size_t i = 0; i < K.size(); ++i) s += A[neg[i]] * K[i] * B[i];
  return s * g.cell() * g.cell() / static_cast<double>(g.size());
}

CVec hat(const Grid& g, const RVec& a) { return fft(g, CVec(a.begin(), a.end())); }

void check_pair(const Field& u, const Field& v) {
  if (!(u.grid == v.grid)) throw Error("grid mismatch");
}

void check_metric(const Metric& m, const Grid& g) {
  if (m.n != g.n) throw Error("dimension mismatch");
  if (m.has_coupling()) throw Error("field-dependent metric needs the density form");
}

// Raised derivatives D^j u = g^{jk} d_k u on the doubled grid.
std::vector<Field> raised_gradient(const Field& U, const Metric& m) {
  const int n = m.n;
  std::vector<Field> d;
  for (int a = 0; a < n; ++a) d.push_back(derivative(U, a));
  std::vector<Field> up;
  for (int j = 0; j < n; ++j) {
    Field r(U.grid);
    for (int k = 0; k < n; ++k) {
      double gjk = m.g(j, k);
      if (gjk == 0.0) continue;
      for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += gjk * d[k].v[i];
    }
    up.push_back(std::move(r));
  }
  return up;
}

CVec product_hat(const Grid& g, const CVec& a, const CVec& b, bool conj_b) {
  CVec p(a.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = a[i] * (conj_b ? std::conj(b[i]) : b[i]);
  return fft(g, p);
}

struct DensityHats {
  CVec M;
  std::vector<CVec> P, E;
};

DensityHats density_hats(const DensitySet& d) {
  DensityHats h;
  h.M = hat(d.grid, d.M);
  for (const auto& p : d.Pup) h.P.push_back(hat(d.grid, p));
  for (const auto& e : d.E) h.E.push_back(hat(d.grid, e));
  return h;
}

struct SourceHats {
  CVec Fm;
  std::vector<CVec> Fp;
};

SourceHats source_hats(const SourceDensities& s) {
  SourceHats h;
  h.Fm = hat(s.grid, s.Fm);
  for (const auto& p : s.Fp) h.Fp.push_back(hat(s.grid, p));
  return h;
}

double I_from_hats(const Grid& g, int n, const DensityHats& u, const DensityHats& v,
                   const KernelSet& k) {
  cplx s = 0.0;
  for (int j = 0; j < n; ++j)
    s += pair_hat(g, k.grad_hat[j], u.M, v.P[j]) - pair_hat(g, k.grad_hat[j], u.P[j], v.M);
  return s.real();
}

double J4_from_hats(const Grid& g, int n, const DensityHats& u, const DensityHats& v,
                    const KernelSet& k) {
  cplx s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      const CVec& K = k.hess_hat[j * n + l];
      s += pair_hat(g, K, u.M, v.E[l * n + j]) + pair_hat(g, K, u.E[l * n + j], v.M) -
           pair_hat(g, K, u.P[l], v.P[j]) - pair_hat(g, K, u.P[j], v.P[l]);
    }
  return s.real();
}

double K_from_hats(const Grid& g, int n, const DensityHats& u, const SourceHats& su,
                   const DensityHats& v, const SourceHats& sv, const KernelSet& k) {
  cplx s = 0.0;
  for (int j = 0; j < n; ++j) {
    const CVec& K = k.grad_hat[j];
    s += pair_hat(g, K, su.Fm, v.P[j]) + pair_hat(g, K, u.M, sv.Fp[j]) -
         pair_hat(g, K, su.Fp[j], v.M) - pair_hat(g, K, u.P[j], sv.Fm);
  }
  return s.real();
}

}  // namespace

cplx kernel_pair(const Grid& g, const CVec& Khat, const CVec& A, const CVec& B) {
  return pair_hat(g, Khat, fft(g, A), fft(g, B));
}

// ---- interaction functionals ------------------------------------------------

double interaction_I(const DensitySet& du, const DensitySet& dv, const KernelSet& k) {
  if (!(du.grid == dv.grid) || !(du.grid == k.grid)) throw Error("grid mismatch");
  return I_from_hats(du.grid, du.n, density_hats(du), density_hats(dv), k);
}

double interaction_I(const Field& u, const Field& v, double r, const RVec& x0, const Metric& m) {
  check_pair(u, v);
  if (m.n != u.grid.n) throw Error("dimension mismatch");
  DensitySet du = compute_densities(u, m);
  DensitySet dv = compute_densities(translate(v, x0), m);
  return interaction_I(du, dv, *kernels(du.grid, WeightFamily{r, u.grid.n}));
}

namespace {

// 4 sum_{jl} K_jl(x-y) F^j conj(F^l) summed over x, y, with F^j in rank-2 form;
// `kernel(j, l)` returns the transform of K_jl or nullptr when it vanishes.
template <class KernelAt>
double factored_pairing(const Field& u, const Field& v, const Metric& m, KernelAt&& kernel) {
  const Grid g = u.grid.refined(2);
  const int n = g.n;
  Field U = upsample(u, 2), V = upsample(v, 2);
  auto dU = raised_gradient(U, m), dV = raised_gradient(V, m);
  // x side: |u|^2, u conj(D^m u), D^j u conj(u), D^j u conj(D^m u)
  // y side: conj(D^j v) D^m v, conj(D^j v) v, conj(v) D^m v, |v|^2
  CVec a0 = product_hat(g, U.v, U.v, true), b3 = product_hat(g, V.v, V.v, true);
  std::vector<CVec> a1, a2, b1, b2, a3, b0;
  for (int j = 0; j < n; ++j) {
    a1.push_back(product_hat(g, U.v, dU[j].v, true));
    a2.push_back(product_hat(g, dU[j].v, U.v, true));
    b1.push_back(product_hat(g, V.v, dV[j].v, true));
    b2.push_back(product_hat(g, dV[j].v, V.v, true));
  }
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      a3.push_back(product_hat(g, dU[j].v, dU[l].v, true));
      b0.push_back(product_hat(g, dV[l].v, dV[j].v, true));
    }
  cplx s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      const CVec* K = kernel(j, l);
      if (!K) continue;
      s += pair_hat(g, *K, a0, b0[j * n + l]) + pair_hat(g, *K, a1[l], b1[j]) +
           pair_hat(g, *K, a2[j], b2[l]) + pair_hat(g, *K, a3[j * n + l], b3);
    }
  return 4.0 * s.real();
}

std::shared_ptr<const CVec> gaussian_hat(const Grid& g, double r) {
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const CVec>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lk(mu);
  auto key = std::make_tuple(g.n, g.N, g.L, r);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  WeightFamily w{r, g.n};
  CVec b(g.size());
  RVec z(g.n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int a = 0; a < g.n; ++a) z[a] = std::remainder(coord(g, i, a), g.L);
    b[i] = w.minorant(z);
  }
  auto out = std::make_shared<const CVec>(fft(g, b));
  cache[key] = out;
  return out;
}

}  // namespace

double interaction_J4(const Field& u, const Field& v, const KernelSet& k, const Metric& m) {
  check_pair(u, v);
  check_metric(m, u.grid);
  if (!(u.grid.refined(2) == k.grid)) throw Error("grid mismatch");
  const int n = u.grid.n;
  return factored_pairing(u, v, m, [&](int j, int l) { return &k.hess_hat[j * n + l]; });
}

double gaussian_form(const Field& u, const Field& v, double r, const Metric& m) {
  check_pair(u, v);
  check_metric(m, u.grid);
  auto b = gaussian_hat(u.grid.refined(2), r);
  return 0.25 * factored_pairing(u, v, m, [&](int j, int l) { return j == l ? b.get() : nullptr; });
}

double gaussian_fourier_floor(const Grid& g, double r) {
  auto b = gaussian_hat(g, r);
  auto fr = freqs(g);
  const double cell = g.cell();
  double lo = INFINITY;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = fr->abs[i];
    double p = a > 0.0 ? lp_scale_symbol(1.0 / r, a) : 0.0;
    if (p <= 0.0) continue;
    lo = std::min(lo, cell * (*b)[i].real() / (p * std::pow(a, 1.0 - g.n)));
  }
  return lo;
}

double interaction_J4(const Field& u, const Field& v, double r, const Metric& m) {
  return interaction_J4(u, v, *kernels(u.grid.refined(2), WeightFamily{r, u.grid.n}), m);
}

double interaction_J4_densities(const DensitySet& du, const DensitySet& dv, const KernelSet& k) {
  if (!(du.grid == dv.grid) || !(du.grid == k.grid)) throw Error("grid mismatch");
  return J4_from_hats(du.grid, du.n, density_hats(du), density_hats(dv), k);
}

double interaction_K(const DensitySet& du, const SourceDensities& su, const DensitySet& dv,
                     const SourceDensities& sv, const KernelSet& k) {
  if (!(du.grid == dv.grid) || !(du.grid == k.grid) || !(su.grid == du.grid) ||
      !(sv.grid == du.grid))
    throw Error("grid mismatch");
  return K_from_hats(du.grid, du.n, density_hats(du), source_hats(su), density_hats(dv),
                     source_hats(sv), k);
}

std::string interaction_csv(const InteractionSeries& s) {
  std::ostringstream os;
  os.precision(17);
  os << "t,I,J4,K\n";
  for (std::size_t i = 0; i < s.t.size(); ++i)
    os << s.t[i] << ',' << s.I[i] << ',' << s.J4[i] << ',' << s.K[i] << '\n';
  return os.str();
}

double time_integral(const RVec& y, double dt) {
  const std::size_t m = y.size();
  if (m < 2) return 0.0;
  if (m == 2) return 0.5 * dt * (y[0] + y[1]);
  if (m == 4) return 3.0 * dt / 8.0 * (y[0] + 3.0 * y[1] + 3.0 * y[2] + y[3]);
  // Simpson on an even number of panels, 3/8 rule on the last three if odd.
  std::size_t panels = m - 1, simpson_end = (panels % 2 == 0) ? m - 1 : m - 4;
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2)
    s += dt / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
  if (simpson_end != m - 1) {
    std::size_t i = simpson_end;
    s += 3.0 * dt / 8.0 * (y[i] + 3.0 * y[i + 1] + 3.0 * y[i + 2] + y[i + 3]);
  }
  return s;
}

namespace {

struct SliceState {
  DensityHats d;
  SourceHats s;
  DensitySet dens;
};

FieldMetric metric_slice(const Trajectory& tr, std::size_t s, const std::optional<int>& shell) {
  if (shell) return truncated_metric(tr.metric, tr.slices[s], *shell);
  return constant_field_metric(tr.metric, tr.grid);
}

// Densities and source densities of slice s (2 <= s <= S-3) of a trajectory or its shell.
SliceState slice_state(const Trajectory& tr, const Trajectory& src, std::size_t s,
                       const std::optional<int>& shell, const RVec* shift) {
  auto prep = [&](const Field& f) {
    Field g = shell ? lp_project(f, LPSelector::at(*shell)) : f;
    return shift ? translate(g, *shift) : g;
  };
  auto shifted_metric = [&](std::size_t m) {
    if (!shell || !tr.metric.has_coupling() || !shift) return metric_slice(tr, m, shell);
    return truncated_metric(tr.metric, translate(tr.slices[m], *shift), *shell);
  };
  Field v = prep(tr.slices[s]);
  Field f = shift ? translate(src.slices[s - 2], *shift) : src.slices[s - 2];
  FieldMetric g = shifted_metric(s);
  SliceState st;
  st.dens = compute_densities(v, g);
  std::optional<FieldMetric> dgdt;
  if (shell && tr.metric.has_coupling()) {
    FieldMetric gm2 = shifted_metric(s - 2), gm1 = shifted_metric(s - 1);
    FieldMetric gp1 = shifted_metric(s + 1), gp2 = shifted_metric(s + 2);
    FieldMetric d = g;
    for (std::size_t c = 0; c < d.g.size(); ++c)
      d.g[c] = detail::centered_dt(gm2.g[c], gm1.g[c], gp1.g[c], gp2.g[c], tr.dt);
    dgdt = std::move(d);
  }
  SourceDensities sd = source_densities(v, f, g, dgdt ? &*dgdt : nullptr);
  st.d = density_hats(st.dens);
  st.s = source_hats(sd);
  return st;
}

double l1_sum(const Grid& g, const std::vector<RVec>& comps) {
  RVec mag(comps[0].size(), 0.0);
  for (const auto& c : comps)
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] += c[i] * c[i];
  for (double& x : mag) x = std::sqrt(x);
  return l1_norm(g, mag);
}

}  // namespace

AuditReport morawetz_identity_audit(const Trajectory& u, const Trajectory& v, double r,
                                    const RVec& x0, const AuditOptions& opt) {
  if (!(u.grid == v.grid) || u.size() != v.size() || u.dt != v.dt || u.t0 != v.t0)
    throw Error("trajectories are not aligned");
  if (u.size() < 7) throw Error("audit needs at least 7 slices");
  const Metric& m = u.metric;
  if (!opt.density_form && m.has_coupling() && opt.shell)
    throw Error("field-dependent metric needs the density form");
  Trajectory fu = opt.shell ? paradifferential_source(u, *opt.shell) : equation_source(u);
  Trajectory fv = opt.shell ? paradifferential_source(v, *opt.shell) : equation_source(v);
  const Grid fine = u.grid.refined(2);
  auto ks = kernels(fine, WeightFamily{r, u.grid.n}, opt.consistent_kernels);
  const int n = u.grid.n;
  AuditReport rep;
  for (std::size_t s = 2; s + 2 < u.size(); ++s) {
    SliceState a = slice_state(u, fu, s, opt.shell, nullptr);
    SliceState b = slice_state(v, fv, s, opt.shell, &x0);
    rep.series.t.push_back(u.time(s));
    rep.series.I.push_back(I_from_hats(fine, n, a.d, b.d, *ks));
    double j4;
    if (opt.density_form) {
      j4 = J4_from_hats(fine, n, a.d, b.d, *ks);
    } else {
      Field us = opt.shell ? lp_project(u.slices[s], LPSelector::at(*opt.shell)) : u.slices[s];
      Field vs = opt.shell ? lp_project(v.slices[s], LPSelector::at(*opt.shell)) : v.slices[s];
      j4 = interaction_J4(us, translate(vs, x0), *ks, m);
    }
    rep.series.J4.push_back(j4);
    rep.series.K.push_back(K_from_hats(fine, n, a.d, a.s, b.d, b.s, *ks));
    if (s == 2)
      rep.scale = 1.5 * (l1_norm(fine, a.dens.M) * l1_sum(fine, b.dens.Pup) +
                         l1_sum(fine, a.dens.Pup) * l1_norm(fine, b.dens.M));
  }
  RVec sum(rep.series.t.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = rep.series.J4[i] + rep.series.K[i];
  rep.integral = time_integral(sum, u.dt);
  rep.dI = rep.series.I.back() - rep.series.I.front();
  double denom = std::max({std::abs(rep.series.I.front()), std::abs(rep.series.I.back()), rep.scale});
  double defect = std::abs(rep.dI - rep.integral);
  rep.rel_defect = denom > 0.0 ? defect / denom : defect;
  return rep;
}

// ---- Besov functionals --------------------------------------------------------

double lp_scale_symbol(double scale, double absxi) {
  return lp_bump(absxi / scale) - lp_bump(2.0 * absxi / scale);
}

namespace {

// Product u conj(v) on the doubled grid, exact.
Field product_field(const Field& u, const Field& v) {
  Field U = upsample(u, 2), V = upsample(v, 2);
  Field w(U.grid);
  for (std::size_t i = 0; i < w.v.size(); ++i) w.v[i] = U.v[i] * std::conj(V.v[i]);
  return w;
}

// sum |mult(xi)|^2 |w^(xi)|^2 in L^2 units.
template <class Mult>
double multiplier_norm_sq(const Field& w, const CVec& W, Mult&& mult) {
  auto fr = freqs(w.grid);
  double s = 0.0;
  for (std::size_t i = 0; i < W.size(); ++i) {
    double mval = mult(&fr->xi[i * w.grid.n], fr->abs[i]);
    if (mval != 0.0) s += mval * mval * std::norm(W[i]);
  }
  return s * w.grid.cell() / static_cast<double>(W.size());
}

std::pair<int, int> shell_range(const Grid& g) {
  double lowest = 2.0 * kPi / g.L;
  int lo = static_cast<int>(std::floor(std::log2(lowest))) - 1;
  int hi = lp_top_shell(g) + 1;
  return {lo, hi};
}

void check_aligned(const Trajectory& u, const Trajectory& v) {
  if (!(u.grid == v.grid) || u.size() != v.size() || u.dt != v.dt)
    throw Error("trajectories are not aligned");
}

}  // namespace

BesovReport besov_bilinear_norm(const Trajectory& u, const Trajectory& v, const RVec& x0) {
  check_aligned(u, v);
  const double p = 0.5 * (3.0 - u.grid.n);
  auto [lo, hi] = shell_range(u.grid.refined(2));
  std::vector<RVec> per(hi - lo + 1, RVec(u.size()));
  for (std::size_t s = 0; s < u.size(); ++s) {
    Field w = product_field(u.slices[s], translate(v.slices[s], x0));
    CVec W = fft(w.grid, w.v);
    for (int j = lo; j <= hi; ++j)
      per[j - lo][s] = multiplier_norm_sq(w, W, [&](const double*, double a) {
        return a == 0.0 ? 0.0 : lp_symbol(LPSelector::at(j), a) * std::pow(a, p);
      });
  }
  BesovReport rep;
  for (int j = lo; j <= hi; ++j) {
    double val = std::sqrt(std::max(0.0, time_integral(per[j - lo], u.dt)));
    rep.j.push_back(j);
    rep.value.push_back(val);
    if (val > rep.sup) {
      rep.sup = val;
      rep.argmax = j;
    }
  }
  return rep;
}

double besov_bilinear_norm(const Trajectory& u, const Trajectory& v, const RVec& x0, int j) {
  check_aligned(u, v);
  const double p = 0.5 * (3.0 - u.grid.n);
  RVec per(u.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    Field w = product_field(u.slices[s], translate(v.slices[s], x0));
    per[s] = multiplier_norm_sq(w, fft(w.grid, w.v), [&](const double*, double a) {
      return a == 0.0 ? 0.0 : lp_symbol(LPSelector::at(j), a) * std::pow(a, p);
    });
  }
  return std::sqrt(std::max(0.0, time_integral(per, u.dt)));
}

double besov_scale_norm_sq(const Trajectory& u, double r) {
  const double p = 0.5 * (3.0 - u.grid.n);
  RVec per(u.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    Field w = product_field(u.slices[s], u.slices[s]);
    per[s] = multiplier_norm_sq(w, fft(w.grid, w.v), [&](const double*, double a) {
      return a == 0.0 ? 0.0 : lp_scale_symbol(1.0 / r, a) * std::pow(a, p);
    });
  }
  return time_integral(per, u.dt);
}

GapReport noncoercivity_gap(const Field& u, const Metric& m) {
  if (m.n != u.grid.n) throw Error("dimension mismatch");
  const int n = m.n;
  Field w = product_field(u, u);
  CVec W = fft(w.grid, w.v);
  GapReport rep;
  rep.numerator = std::sqrt(multiplier_norm_sq(w, W, [&](const double* xi, double a) {
    return a == 0.0 ? 0.0 : norm_sq_g(m, std::span<const double>(xi, n)) * std::pow(a, -0.5 * (n + 1));
  }));
  auto [lo, hi] = shell_range(w.grid);
  const double p = 0.5 * (3.0 - n);
  for (int j = lo; j <= hi; ++j)
    rep.denominator = std::max(rep.denominator, std::sqrt(multiplier_norm_sq(w, W, [&](const double*, double a) {
      return a == 0.0 ? 0.0 : lp_symbol(LPSelector::at(j), a) * std::pow(a, p);
    })));
  double u2 = l2_norm(u);
  if (rep.denominator < 1e-14 * u2 * u2 || rep.denominator == 0.0) {
    rep.flagged = true;
    rep.ratio = INFINITY;
  } else {
    rep.ratio = rep.numerator / rep.denominator;
  }
  return rep;
}

// ---- cone identity -------------------------------------------------------------

double im_clean_constant(int n) {
  // Calibrated on Gaussian data by `mlab oracle calibrate`.
  switch (n) {
    case 2: return kImClean2;
    case 3: return kImClean3;
  }
  throw Error("no calibrated constant for this dimension");
}

ImCleanReport im_clean_check(const Field& u, const Metric& m, std::optional<double> c_n) {
  check_metric(m, u.grid);
  const int n = m.n;
  Field w = product_field(u, u);
  const Grid& g = w.grid;
  auto ks = kernels(g, WeightFamily::cone(n));
  auto dW = raised_gradient(w, m);
  std::vector<CVec> hats;
  for (const auto& d : dW) hats.push_back(fft(g, d.v));
  cplx s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) s += pair_hat(g, ks->hess_hat[j * n + l], hats[j], hats[l]);
  ImCleanReport rep;
  rep.lhs = s.real();
  CVec W = fft(g, w.v);
  double rhs = multiplier_norm_sq(w, W, [&](const double* xi, double a) {
    return a == 0.0 ? 0.0 : norm_sq_g(m, std::span<const double>(xi, n)) * std::pow(a, -0.5 * (n + 1));
  });
  rep.rhs = c_n.value_or(im_clean_constant(n)) * rhs;
  double denom = std::max(std::abs(rep.lhs), std::abs(rep.rhs));
  rep.defect = denom > 0.0 ? std::abs(rep.lhs - rep.rhs) / denom : 0.0;
  return rep;
}

// ---- transversal functional ---------------------------------------------------

double TransversalReport::bernstein_ratio(double mu) const {
  return bernstein_lhs / (std::pow(mu, n - 1) * bernstein_rhs);
}

namespace {

// Integral of a density over every axis but `axis`.
RVec marginal(const Grid& g, const RVec& a, int axis) {
  RVec m(g.N, 0.0);
  const double w = std::pow(g.dx(), g.n - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t stride = 1;
    for (int b = g.n - 1; b > axis; --b) stride *= g.N;
    m[(i / stride) % g.N] += a[i] * w;
  }
  return m;
}

// int int H(y-x) p(x) q(y) with H the indicator of (0, L/2) on the circle.
double half_space_pair(double L, const RVec& p, const RVec& q) {
  const int N = static_cast<int>(p.size());
  Grid g1{1, N, L};
  CVec P = fft(g1, CVec(p.begin(), p.end())), Q = fft(g1, CVec(q.begin(), q.end()));
  const double h = L / N;
  cplx s = 0.0;
  for (int i = 0; i < N; ++i) {
    int k = i < N / 2 ? i : i - N;
    cplx H;
    if (k == 0) {
      H = 0.5 * L;
    } else {
      double kk = 2.0 * kPi * k / L;
      H = (k % 2 == 0) ? cplx(0.0) : cplx(0.0, -2.0 / kk);
    }
    // p~(k) = h P[i]; q~(-k) = h conj(Q[i]) for real q.
    s += std::conj(h * Q[i]) * H * (h * P[i]);
  }
  return s.real() / L;
}

// M and P^axis on the doubled grid, without the flux tensor.
std::pair<RVec, RVec> mass_and_current(const Field& u, const Metric& m, int axis) {
  Field v = upsample(u, 2);
  const std::size_t sz = v.v.size();
  RVec M(sz), P(sz, 0.0);
  for (std::size_t i = 0; i < sz; ++i) M[i] = std::norm(v.v[i]);
  for (int l = 0; l < m.n; ++l) {
    if (m.g(axis, l) == 0.0) continue;
    Field d = derivative(v, l);
    for (std::size_t i = 0; i < sz; ++i) P[i] -= 2.0 * m.g(axis, l) * std::imag(std::conj(v.v[i]) * d.v[i]);
  }
  return {std::move(M), std::move(P)};
}

double line_pair(double h, const RVec& p, const RVec& q, int shift) {
  const int N = static_cast<int>(p.size());
  double s = 0.0;
  for (int i = 0; i < N; ++i) s += p[i] * q[(i + shift) % N];
  return s * h;
}

}  // namespace

TransversalReport transversal_interaction(const Trajectory& u, const Trajectory& v,
                                          const RVec& x0, int axis) {
  check_aligned(u, v);
  if (axis < 0 || axis >= u.grid.n) throw Error("axis out of range");
  const Metric& m = u.metric;
  const Grid fine = u.grid.refined(2);
  const double h = fine.dx();
  TransversalReport rep;
  rep.n = u.grid.n;
  RVec prod(u.size()), hyper(u.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    Field vs = translate(v.slices[s], x0);
    auto [Mu, Pu] = mass_and_current(u.slices[s], m, axis);
    auto [Mv, Pv] = mass_and_current(vs, m, axis);
    RVec mu = marginal(fine, Mu, axis), mv = marginal(fine, Mv, axis);
    RVec pu = marginal(fine, Pu, axis), pv = marginal(fine, Pv, axis);
    rep.t.push_back(u.time(s));
    rep.I.push_back(half_space_pair(fine.L, mu, mv));
    rep.J4.push_back(line_pair(h, pu, mv, 0) - line_pair(h, mu, pv, 0));
    rep.antipodal.push_back(-(line_pair(h, pu, mv, fine.N / 2) - line_pair(h, mu, pv, fine.N / 2)));
    Field w = product_field(u.slices[s], vs);
    double l2 = 0.0;
    for (const auto& c : w.v) l2 += std::norm(c);
    prod[s] = l2 * fine.cell();
    hyper[s] = line_pair(h, mu, mv, 0);
  }
  if (u.size() >= 2) {
    RVec sum(u.size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = rep.J4[i] + rep.antipodal[i];
    double dI = rep.I.back() - rep.I.front();
    double denom = std::max({std::abs(rep.I.front()), std::abs(rep.I.back())});
    double defect = std::abs(dI - time_integral(sum, u.dt));
    rep.audit_defect = denom > 0.0 ? defect / denom : defect;
  }
  rep.bernstein_lhs = time_integral(prod, u.dt);
  rep.bernstein_rhs = time_integral(hyper, u.dt);
  return rep;
}

int best_axis(const Metric& m, const RVec& xi_u, const RVec& xi_v) {
  auto vu = raise_index(m, xi_u), vv = raise_index(m, xi_v);
  int best = 0;
  double gap = -1.0;
  for (int a = 0; a < m.n; ++a) {
    double d = std::abs(vu[a] - vv[a]);
    if (d > gap) {
      gap = d;
      best = a;
    }
  }
  return best;
}

}  // namespace mlab
