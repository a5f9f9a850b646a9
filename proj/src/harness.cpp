#include "mlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "mlab/constants.hpp"
#include "mlab/data.hpp"
#include "mlab/envelopes.hpp"
#include "mlab/resonance.hpp"

namespace mlab {

// ---- pool --------------------------------------------------------------------

int worker_count() {
  if (const char* s = std::getenv("MLAB_THREADS")) {
    int n = std::atoi(s);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// ---- measurements --------------------------------------------------------------

bool is_admissible_pair(int n, double p, double q) {
  if (!(p >= 2.0) || !(q >= 2.0)) return false;
  if (std::isinf(q)) return false;
  double lhs = (std::isinf(p) ? 0.0 : 2.0 / p) + n / q;
  return std::abs(lhs - 0.5 * n) < 1e-12;
}

double strichartz_norm(const Trajectory& traj, double p, double q, std::optional<int> shell) {
  const int n = traj.grid.n;
  if (n == 2 && p == 2.0 && std::isinf(q)) throw Error("forbidden endpoint (2, inf) in two dimensions");
  if (std::isinf(q)) throw Error("q must be finite on the grid");
  if (!is_admissible_pair(n, p, q)) throw Error("inadmissible Strichartz pair");
  RVec per(traj.size());
  for (std::size_t s = 0; s < traj.size(); ++s) {
    Field f = shell ? lp_project(traj.slices[s], LPSelector::at(*shell)) : traj.slices[s];
    per[s] = lq_norm(f, q);
  }
  if (std::isinf(p)) return *std::max_element(per.begin(), per.end());
  for (double& x : per) x = std::pow(x, p);
  return std::pow(time_integral(per, traj.dt), 1.0 / p);
}

BilinearReport bilinear_L2(const Trajectory& u, const Trajectory& v, const RVec& x0, double lambda,
                           double mu, std::optional<int> ku, std::optional<int> kv) {
  if (!(u.grid == v.grid) || u.size() != v.size() || u.dt != v.dt)
    throw Error("trajectories are not aligned");
  const Grid fine = u.grid.refined(2);
  auto proj = [](const Field& f, std::optional<int> k) {
    return k ? lp_project(f, LPSelector::at(*k)) : f;
  };
  RVec per(u.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    Field a = upsample(proj(u.slices[s], ku), 2);
    Field b = upsample(translate(proj(v.slices[s], kv), x0), 2);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) acc += std::norm(a.v[i] * std::conj(b.v[i]));
    per[s] = acc * fine.cell();
  }
  BilinearReport rep;
  rep.norm = std::sqrt(std::max(0.0, time_integral(per, u.dt)));
  const int n = u.grid.n;
  double scale = std::pow(mu, 0.5 * (n - 1)) / std::sqrt(lambda) * l2_norm(proj(u.slices[0], ku)) *
                 l2_norm(proj(v.slices[0], kv));
  rep.ratio = scale > 0.0 ? rep.norm / scale : 0.0;
  return rep;
}

double d_lambda(const Trajectory& traj, int k, const std::vector<RVec>& x0s) {
  std::vector<RVec> shifts = x0s;
  shifts.insert(shifts.begin(), RVec(traj.grid.n, 0.0));
  const std::vector<int> shells = {k - 1, k, k + 1};
  double data = 0.0;
  for (int m : shells) {
    double a = l2_norm(lp_project(traj.slices[0], LPSelector::at(m)));
    data = std::max(data, a * a);
  }
  double src = 0.0;
  if (traj.size() >= 5) {
    std::vector<Trajectory> f;
    for (int l : shells) f.push_back(paradifferential_source(traj, l));
    const Grid fine = traj.grid.refined(2);
    for (int m : shells)
      for (std::size_t li = 0; li < shells.size(); ++li)
        for (const auto& x0 : shifts) {
          RVec per(f[li].size());
          for (std::size_t s = 0; s < per.size(); ++s) {
            Field a = upsample(lp_project(traj.slices[s + 2], LPSelector::at(m)), 2);
            Field b = upsample(translate(f[li].slices[s], x0), 2);
            double acc = 0.0;
            for (std::size_t i = 0; i < a.v.size(); ++i) acc += std::abs(a.v[i] * b.v[i]);
            per[s] = acc * fine.cell();
          }
          src = std::max(src, time_integral(per, traj.dt));
        }
  }
  return std::sqrt(data + src);
}

// ---- data and flows ---------------------------------------------------------------

Field make_data(const ExperimentConfig& c, std::uint64_t seed, bool second) {
  const auto& d = c.data;
  const Grid& g = c.grid;
  RVec mid(g.n, 0.5 * g.L);
  switch (d.kind) {
    case DataRecipe::random_shell:
      return random_shell(g, d.shell, second ? seed + 1000003 : seed, d.l2);
    case DataRecipe::plane_wave:
      return plane_wave(g, d.amplitude, d.wavenumber);
    case DataRecipe::packet: {
      PacketSpec p{d.center.empty() ? mid : d.center, d.frequency, d.width, d.amplitude};
      if (second) {
        if (!d.center_v.empty()) p.center = d.center_v;
        if (!d.frequency_v.empty()) p.frequency = d.frequency_v;
      }
      return wave_packet(g, p);
    }
    case DataRecipe::null_pair: {
      RVec c0 = d.center.empty() ? mid : d.center;
      return wave_packet(g, {c0, d.frequency, d.width, d.amplitude}) +
             wave_packet(g, {c0, d.frequency_v, d.width, d.amplitude});
    }
  }
  throw Error("unknown data recipe");
}

Trajectory make_trajectory(const ExperimentConfig& c, const Field& u0) {
  Metric m = c.metric();
  StepOptions opt;
  opt.save_every = c.save_every;
  switch (c.model) {
    case Model::linear: return linear_trajectory(m, u0, c.T, c.dt, c.save_every);
    case Model::semilinear: return evolve_semilinear(m, c.sigma, u0, c.T, c.dt, opt);
    case Model::quasilinear: return evolve_quasilinear(m, u0, c.T, c.dt, opt);
    case Model::source: break;
  }
  throw Error("model cannot be evolved");
}

// ---- experiments ------------------------------------------------------------------

namespace {

using json = nlohmann::json;

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

RVec default_r_sweep(const Grid& g) {
  RVec r;
  for (double x = 4.0 * g.L / g.N; x <= g.L / 4.0 * (1.0 + 1e-12); x *= 2.0) r.push_back(x);
  return r;
}

json constants_json() {
  return {{"hessian_minorant", kHessianMinorant},
          {"coercivity", kCoercivity},
          {"gaussian_lower", kGaussianLower},
          {"fourier_floor", kFourierFloor},
          {"bilinear_pin", kBilinearPin},
          {"besov_bound", kBesovBound},
          {"bernstein", kBernstein},
          {"isotropic_gap", kIsotropicGap},
          {"im_clean_2", kImClean2},
          {"im_clean_3", kImClean3},
          {"audit_tolerance", kAuditTolerance},
          {"envelope_ratio_bound", kEnvelopeRatioBound}};
}

void fail(ExperimentResult& r, const std::string& msg) {
  r.failures.push_back(msg);
  r.exit_code = 1;
}

ExperimentResult morawetz_audit(const ExperimentConfig& c) {
  ExperimentResult res;
  Field u0 = make_data(c, c.seed), v0 = make_data(c, c.seed, true);
  Trajectory u = make_trajectory(c, u0), v = make_trajectory(c, v0);
  RVec rs = c.r.empty() ? RVec{1.0} : c.r;
  std::vector<RVec> shifts = c.x0.empty() ? std::vector<RVec>{RVec(c.grid.n, 0.0)} : c.x0;
  AuditOptions opt;
  opt.density_form = c.metric().has_coupling();
  std::ostringstream table;
  table << "r,x0_index,dI,integral,scale,rel_defect\n";
  double worst = 0.0;
  json runs = json::array();
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t x = 0; x < shifts.size(); ++x) {
      AuditReport rep = morawetz_identity_audit(u, v, rs[i], shifts[x], opt);
      table << num(rs[i]) << ',' << x << ',' << num(rep.dI) << ',' << num(rep.integral) << ','
            << num(rep.scale) << ',' << num(rep.rel_defect) << '\n';
      res.csv["interaction_r" + std::to_string(i) + "_x" + std::to_string(x) + ".csv"] =
          interaction_csv(rep.series);
      worst = std::max(worst, rep.rel_defect);
      runs.push_back({{"r", rs[i]}, {"x0", shifts[x]}, {"dI", rep.dI}, {"integral", rep.integral},
                      {"rel_defect", rep.rel_defect}});
    }
  res.csv["audit.csv"] = table.str();
  res.summary["runs"] = runs;
  res.summary["max_rel_defect"] = worst;
  res.summary["tolerance"] = c.tolerance;
  if (!(worst <= c.tolerance)) fail(res, "audit defect " + num(worst) + " exceeds " + num(c.tolerance));
  return res;
}

ExperimentResult coercivity(const ExperimentConfig& c) {
  ExperimentResult res;
  Metric m = c.metric();
  RVec rs = c.r.empty() ? default_r_sweep(c.grid) : c.r;
  const std::size_t S = c.seeds;
  std::vector<std::vector<std::array<double, 2>>> out(S, std::vector<std::array<double, 2>>(rs.size()));
  for (double r : rs) kernels(c.grid.refined(2), WeightFamily{r, c.grid.n});
  parallel_for(S, [&](std::size_t i) {
    Field u0 = make_data(c, c.seed + i);
    Trajectory tr = make_trajectory(c, u0);
    for (std::size_t a = 0; a < rs.size(); ++a) {
      auto ks = kernels(c.grid.refined(2), WeightFamily{rs[a], c.grid.n});
      RVec j4(tr.size());
      for (std::size_t s = 0; s < tr.size(); ++s) j4[s] = interaction_J4(tr.slices[s], tr.slices[s], *ks, m);
      out[i][a] = {time_integral(j4, tr.dt), besov_scale_norm_sq(tr, rs[a])};
    }
  });
  std::ostringstream table;
  table << "seed,r,lhs,rhs,ratio\n";
  double worst = INFINITY;
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t a = 0; a < rs.size(); ++a) {
      auto [lhs, rhs] = out[i][a];
      double ratio = rhs > 0.0 ? lhs / rhs : INFINITY;
      worst = std::min(worst, ratio);
      table << c.seed + i << ',' << num(rs[a]) << ',' << num(lhs) << ',' << num(rhs) << ',' << num(ratio)
            << '\n';
    }
  res.csv["coercivity.csv"] = table.str();
  res.summary["min_ratio"] = worst;
  res.summary["r"] = rs;
  if (!(worst >= kCoercivity))
    fail(res, "coercivity ratio " + num(worst) + " below the pinned constant " + num(kCoercivity));
  return res;
}

ExperimentResult noncoercive_demo(const ExperimentConfig& c) {
  ExperimentResult res;
  Metric m = c.metric();
  RVec widths = c.widths.empty() ? RVec{c.grid.L / 10, c.grid.L / 6, c.grid.L / 4} : c.widths;
  std::ostringstream table;
  table << "kind,param,ratio,numerator,denominator\n";
  RVec null_ratio;
  for (double w : widths) {
    ExperimentConfig cc = c;
    cc.data.kind = DataRecipe::null_pair;
    cc.data.width = w;
    GapReport g = noncoercivity_gap(make_data(cc, c.seed), m);
    null_ratio.push_back(g.ratio);
    table << "null_pair," << num(w) << ',' << num(g.ratio) << ',' << num(g.numerator) << ','
          << num(g.denominator) << '\n';
  }
  RVec iso;
  for (int i = 0; i < c.seeds; ++i) {
    GapReport g = noncoercivity_gap(random_shell(c.grid, c.data.shell, c.seed + i, 1.0), m);
    iso.push_back(g.ratio);
    table << "isotropic," << c.seed + i << ',' << num(g.ratio) << ',' << num(g.numerator) << ','
          << num(g.denominator) << '\n';
  }
  double iso_min = *std::min_element(iso.begin(), iso.end());
  res.csv["noncoercive.csv"] = table.str();
  res.summary["null_ratio"] = null_ratio;
  res.summary["isotropic_min"] = iso_min;
  bool monotone = true;
  for (std::size_t i = 1; i < null_ratio.size(); ++i) monotone = monotone && null_ratio[i] < null_ratio[i - 1];
  double worst = *std::max_element(null_ratio.begin(), null_ratio.end());
  res.summary["monotone"] = monotone;
  res.summary["max_null_over_isotropic"] = worst / iso_min;
  if (!monotone) fail(res, "null-cone ratio does not decrease with sharpening");
  if (!(worst <= 0.5 * iso_min)) fail(res, "null-cone ratio exceeds half the isotropic value");
  return res;
}

ExperimentResult bilinear_transversal(const ExperimentConfig& c) {
  ExperimentResult res;
  Metric m = c.metric();
  const int n = c.grid.n;
  const double lambda = [&] {
    double s = 0.0;
    for (double x : c.data.frequency) s += x * x;
    return std::sqrt(s);
  }();
  if (!(lambda > 0.0)) throw ConfigError(0, "data.frequency", "bilinear experiment needs a packet frequency");
  const std::size_t S = c.seeds;
  struct Row {
    double tr = 0, co = 0, audit = 0, bern = 0;
  };
  std::vector<Row> rows(S);
  parallel_for(S, [&](std::size_t i) {
    std::mt19937_64 rng(c.seed + i);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double theta = std::atan2(c.data.frequency[1 % n], c.data.frequency[0]) + (U(rng) - 0.5) * 0.5;
    RVec xi(n, 0.0), mid(n, 0.5 * c.grid.L);
    xi[0] = lambda * std::cos(theta);
    if (n > 1) xi[1] = lambda * std::sin(theta);
    RVec xi_v(n);
    for (int a = 0; a < n; ++a) xi_v[a] = -xi[a];
    // Both packets are focused at mid at T/2: counter-propagating pairs cross
    // there, while the co-located pair (u, u) stays together for the whole run.
    RVec jitter(n);
    for (int a = 0; a < n; ++a) jitter[a] = mid[a] + (U(rng) - 0.5) * 0.2 * c.data.width;
    cplx phase = std::polar(c.data.amplitude, 2.0 * kPi * U(rng));
    Field u0 = evolve_linear_flat(m, wave_packet(c.grid, {jitter, xi, c.data.width, phase}), -0.5 * c.T);
    Field v0 = evolve_linear_flat(m, wave_packet(c.grid, {jitter, xi_v, c.data.width, c.data.amplitude}),
                                  -0.5 * c.T);
    Trajectory tu = make_trajectory(c, u0), tv = make_trajectory(c, v0);
    RVec zero(n, 0.0);
    rows[i].tr = bilinear_L2(tu, tv, zero, lambda, lambda).ratio;
    rows[i].co = bilinear_L2(tu, tu, zero, lambda, lambda).ratio;
    TransversalReport t = transversal_interaction(tu, tv, zero, best_axis(m, xi, xi_v));
    rows[i].audit = t.audit_defect;
    rows[i].bern = t.bernstein_ratio(lambda);
  });
  std::ostringstream table;
  table << "seed,transversal_ratio,colocated_ratio,transversal_audit,bernstein_ratio\n";
  double tr_max = 0.0, co_min = INFINITY, audit_max = 0.0, bern_max = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    table << c.seed + i << ',' << num(rows[i].tr) << ',' << num(rows[i].co) << ',' << num(rows[i].audit)
          << ',' << num(rows[i].bern) << '\n';
    tr_max = std::max(tr_max, rows[i].tr);
    co_min = std::min(co_min, rows[i].co);
    audit_max = std::max(audit_max, rows[i].audit);
    bern_max = std::max(bern_max, rows[i].bern);
  }
  res.csv["bilinear.csv"] = table.str();
  res.summary["transversal_max"] = tr_max;
  res.summary["colocated_min"] = co_min;
  res.summary["transversal_audit_max"] = audit_max;
  res.summary["bernstein_max"] = bern_max;
  if (!(tr_max <= kBilinearPin)) fail(res, "transversal ratio " + num(tr_max) + " exceeds the pin");
  if (!(co_min >= 3.0 * kBilinearPin)) fail(res, "co-located ratio " + num(co_min) + " below 3x the pin");
  return res;
}

ExperimentResult envelope_propagation(const ExperimentConfig& c) {
  ExperimentResult res;
  RVec eps = c.eps.empty() ? RVec{1e-2} : c.eps;
  std::ostringstream table;
  table << "eps,k,c_k,R_k\n";
  double worst = 0.0;
  json runs = json::array();
  for (double e : eps) {
    Field base = make_data(c, c.seed);
    double hs = sobolev_norm(base, c.s);
    Field u0 = (e / hs) * base;
    Trajectory tr = make_trajectory(c, u0);
    Envelope env = minimal_envelope((1.0 / e) * u0, c.s, c.delta);
    EnvelopeReport rep = check_envelope_bound(tr, env, c.s, e, kEnvelopeRatioBound);
    for (std::size_t k = 0; k < env.c.size(); ++k)
      table << num(e) << ',' << k << ',' << num(env.c[k]) << ',' << num(rep.ratio[k]) << '\n';
    worst = std::max(worst, rep.max_ratio);
    runs.push_back({{"eps", e}, {"max_ratio", rep.max_ratio}});
    res.csv["envelope_eps" + std::to_string(runs.size() - 1) + ".csv"] = envelope_csv(env);
  }
  res.csv["envelope.csv"] = table.str();
  res.summary["runs"] = runs;
  res.summary["max_ratio"] = worst;
  res.summary["s"] = c.s;
  res.summary["delta"] = c.delta;
  if (!(worst <= kEnvelopeRatioBound))
    fail(res, "envelope ratio " + num(worst) + " exceeds " + num(kEnvelopeRatioBound));
  return res;
}

ExperimentResult resonance_atlas_run(const ExperimentConfig& c) {
  ExperimentResult res;
  Metric m = c.metric();
  Atlas a = resonance_atlas(m, c.radius);
  res.csv["atlas.csv"] = atlas_csv(a);
  json counts;
  for (auto cls : {InteractionClass::doubly_resonant, InteractionClass::transversal_resonant,
                   InteractionClass::weakly_transversal, InteractionClass::nonresonant,
                   InteractionClass::low_frequency})
    counts[to_string(cls)] = a.count(cls);
  res.summary["counts"] = counts;
  res.summary["total"] = a.total;
  res.summary["ambiguous"] = a.ambiguous;
  res.summary["weakly_transversal_nonzero"] = a.weakly_transversal_nonzero;
  bool definite = m.definite;
  res.summary["definite"] = definite;
  if (definite && a.weakly_transversal_nonzero != 0)
    fail(res, "weakly transversal quadruples found for a definite metric");
  return res;
}

ExperimentResult strichartz_probe(const ExperimentConfig& c) {
  ExperimentResult res;
  Field u0 = make_data(c, c.seed);
  Trajectory tr = make_trajectory(c, u0);
  double eps = sobolev_norm(u0, c.s);
  Envelope env = minimal_envelope((1.0 / eps) * u0, c.s, c.delta);
  std::vector<RVec> pairs = c.pairs;
  if (pairs.empty()) pairs = {{INFINITY, 2.0}, {4.0, 2.0 * c.grid.n / (c.grid.n - 1.0)}};
  std::vector<int> shells = c.j;
  if (shells.empty())
    for (int k = 0; k <= lp_top_shell(c.grid); ++k) shells.push_back(k);
  std::ostringstream table;
  table << "k,p,q,norm,c_k,eps,d_k\n";
  for (int k : shells) {
    double ck = k >= 0 && k < static_cast<int>(env.c.size()) ? env.c[k] : 0.0;
    double dk = c.model == Model::linear ? NAN : d_lambda(tr, k, c.x0);
    for (const auto& pq : pairs) {
      double v = strichartz_norm(tr, pq[0], pq[1], k);
      table << k << ',' << num(pq[0]) << ',' << num(pq[1]) << ',' << num(v) << ',' << num(ck) << ','
            << num(eps) << ',' << (std::isnan(dk) ? std::string("") : num(dk)) << '\n';
    }
  }
  res.csv["strichartz.csv"] = table.str();
  res.csv["envelope.csv"] = envelope_csv(env);
  res.summary["eps"] = eps;
  res.summary["s"] = c.s;
  return res;
}

using Runner = ExperimentResult (*)(const ExperimentConfig&);
const std::vector<std::pair<std::string, Runner>>& registry() {
  static const std::vector<std::pair<std::string, Runner>> r = {
      {"coercivity", coercivity},
      {"noncoercive-demo", noncoercive_demo},
      {"morawetz-audit", morawetz_audit},
      {"bilinear-transversal", bilinear_transversal},
      {"envelope-propagation", envelope_propagation},
      {"resonance-atlas", resonance_atlas_run},
      {"strichartz-probe", strichartz_probe},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : registry()) v.push_back(k);
    return v;
  }();
  return names;
}

ExperimentResult compute_experiment(const ExperimentConfig& c) {
  for (const auto& [name, fn] : registry())
    if (name == c.experiment) {
      ExperimentResult r = fn(c);
      r.summary["experiment"] = c.experiment;
      r.summary["seed"] = c.seed;
      r.summary["seeds"] = c.seeds;
      r.summary["pinned_constants"] = constants_json();
      r.summary["failures"] = r.failures;
      r.summary["exit_code"] = r.exit_code;
      return r;
    }
  throw ConfigError(0, "experiment", "unknown experiment '" + c.experiment + "'");
}

ExperimentResult run_experiment(const ExperimentConfig& c, const std::string& config_text) {
  ExperimentResult r = compute_experiment(c);
  namespace fs = std::filesystem;
  fs::create_directories(c.output);
  for (const auto& [name, body] : r.csv) {
    std::ofstream out(fs::path(c.output) / name, std::ios::binary);
    out << body;
  }
  std::string text = config_text.empty() ? serialize_config(c) : config_text;
  {
    std::ofstream out(fs::path(c.output) / "summary.json", std::ios::binary);
    out << r.summary.dump(2) << '\n';
  }
  nlohmann::json manifest;
  manifest["experiment"] = c.experiment;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(text)));
  manifest["config_hash"] = hash;
  manifest["schema_version"] = 1;
  std::vector<std::string> files;
  for (const auto& [name, _] : r.csv) files.push_back(name);
  manifest["csv"] = files;
  manifest["summary"] = "summary.json";
  {
    std::ofstream out(fs::path(c.output) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(c.output) / "config.txt", std::ios::binary);
    out << text;
  }
  return r;
}

}  // namespace mlab
