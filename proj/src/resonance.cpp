#include "mlab/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace mlab {

namespace {

double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double norm2(const Vec& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

// Three-way comparison of d2 against (sep*scale)^2 with a relative gray band.
struct Sep {
  bool separated;
  bool near;
};
Sep compare_sep(double d2, double scale2, const ClassifyParams& p) {
  double t2 = p.separation * p.separation * scale2;
  double ratio = t2 > 0.0 ? std::sqrt(d2 / t2) : INFINITY;
  return {d2 >= t2 * (1.0 - 1e-12), std::abs(ratio - 1.0) <= p.gray};
}

}  // namespace

Quadruple Quadruple::make(std::array<Vec, 4> xi, std::array<int, 4> signs, double tol) {
  Quadruple q{std::move(xi), signs, tol};
  const std::size_t n = q.xi[0].size();
  for (const auto& v : q.xi)
    if (v.size() != n) throw Error("quadruple frequencies differ in dimension");
  for (int s : signs)
    if (s != 1 && s != -1) throw Error("signs must be +1 or -1");
  Vec sum(n, 0.0);
  for (int i = 0; i < 4; ++i)
    for (std::size_t a = 0; a < n; ++a) sum[a] += q.signs[i] * q.xi[i][a];
  if (std::sqrt(norm2(sum)) > tol * std::max(1.0, q.max_norm()))
    throw Error("quadruple is not on-shell: signed frequency sum is nonzero");
  return q;
}

bool Quadruple::phase_rotation() const {
  return signs[0] + signs[1] + signs[2] + signs[3] == 0;
}

double Quadruple::max_norm() const {
  double m = 0.0;
  for (const auto& v : xi) m = std::max(m, norm2(v));
  return std::sqrt(m);
}

std::string to_string(InteractionClass c) {
  switch (c) {
    case InteractionClass::doubly_resonant: return "doubly_resonant";
    case InteractionClass::transversal_resonant: return "transversal_resonant";
    case InteractionClass::weakly_transversal: return "weakly_transversal";
    case InteractionClass::nonresonant: return "nonresonant";
    case InteractionClass::low_frequency: return "low_frequency";
  }
  return "?";
}

double resonance_defect(const Metric& m, const Quadruple& q) {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d += q.signs[i] * norm_sq_g(m, q.xi[i]);
  return d;
}

Classification classify(const Metric& m, const Quadruple& q, const ClassifyParams& p) {
  Classification out;
  const double M = q.max_norm();
  if (M <= p.low_cutoff) {
    out.cls = InteractionClass::low_frequency;
    return out;
  }
  const double M2 = M * M;
  const double tau = q.tol * M2;
  const double D = std::abs(resonance_defect(m, q));
  if (D > tau * (1.0 + p.gray)) return out;
  if (D > tau * (1.0 - p.gray)) {
    out.ambiguous = true;
    return out;
  }

  const double eq2 = q.tol * q.tol * M2;
  auto same = [&](int a, int b) { return dist2(q.xi[a], q.xi[b]) <= eq2; };

  double spread = 0.0, bracket = 0.0;
  for (int a = 0; a < 4; ++a) {
    bracket += std::sqrt(1.0 + norm2(q.xi[a]));
    for (int b = a + 1; b < 4; ++b) spread += std::sqrt(dist2(q.xi[a], q.xi[b]));
  }
  if ((same(0, 1) && same(1, 2) && same(2, 3)) || spread <= p.diag_threshold * bracket) {
    out.cls = InteractionClass::doubly_resonant;
    return out;
  }

  if (!q.phase_rotation()) {
    for (int odd = 0; odd < 4; ++odd) {
      int t[3], c = 0;
      for (int i = 0; i < 4; ++i)
        if (i != odd) t[c++] = i;
      if (!(same(t[0], t[1]) && same(t[1], t[2]))) continue;
      const Vec& xi = q.xi[t[0]];
      double x2 = norm2(xi);
      if (x2 <= eq2) continue;
      Sep s = compare_sep(dist2(q.xi[odd], xi), x2, p);
      out.ambiguous = s.near;
      if (s.separated) {
        out.cls = InteractionClass::weakly_transversal;
        return out;
      }
    }
  }

  static const int pairings[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
  for (const auto& pr : pairings) {
    Sep s1 = compare_sep(dist2(q.xi[pr[0]], q.xi[pr[1]]), M2, p);
    Sep s2 = compare_sep(dist2(q.xi[pr[2]], q.xi[pr[3]]), M2, p);
    if (s1.separated && s2.separated) {
      out.cls = InteractionClass::transversal_resonant;
      out.ambiguous = out.ambiguous || s1.near || s2.near;
      return out;
    }
  }
  // Resonant but neither diagonal, weakly transversal nor pair-separated.
  out.ambiguous = true;
  return out;
}

ConservativeReport is_conservative(const CubicSymbol& c, const std::vector<Vec>& samples,
                                   double tol) {
  ConservativeReport r;
  for (const auto& xi : samples) {
    auto v = c(xi, xi, xi);
    r.max_imag = std::max(r.max_imag, std::abs(v.imag()));
    if (std::abs(v.imag()) > tol * (1.0 + std::abs(v))) r.conservative = false;
  }
  return r;
}

bool unbalanced_pair(const Ball& mu, const Ball& lambda, double delta) {
  if (mu.center.size() != lambda.center.size()) throw Error("balls differ in dimension");
  double m = std::sqrt(norm2(mu.center)), l = std::sqrt(norm2(lambda.center));
  if (m > l * (1.0 + 1e-12)) throw Error("unbalanced_pair expects |center_mu| <= |center_lambda|");
  if (m <= l / 8.0) return true;
  if (mu.radius > delta * l || lambda.radius > delta * l) return false;
  double gap = std::sqrt(dist2(mu.center, lambda.center)) - mu.radius - lambda.radius;
  return gap >= l / 4.0;
}

long long Atlas::count(InteractionClass c) const {
  long long s = 0;
  for (const auto& r : rows)
    if (r.cls == c) s += r.count;
  return s;
}

const std::vector<std::array<int, 4>>& atlas_sign_patterns() {
  static const std::vector<std::array<int, 4>> p = {
      {+1, -1, +1, -1}, {+1, +1, +1, -1}, {+1, -1, -1, -1}, {-1, -1, -1, -1}};
  return p;
}

Atlas resonance_atlas(const Metric& m, int radius, const ClassifyParams& p,
                      const std::function<void(const Quadruple&, const Classification&)>& visit) {
  if (radius < 0 || radius > 32) throw Error("atlas radius must lie in [0, 32]");
  const int n = m.n;
  std::vector<Vec> ball;
  std::vector<int> idx(n, -radius);
  while (true) {
    long long r2 = 0;
    for (int v : idx) r2 += 1LL * v * v;
    if (r2 <= 1LL * radius * radius) ball.emplace_back(idx.begin(), idx.end());
    int a = n - 1;
    while (a >= 0 && idx[a] == radius) idx[a--] = -radius;
    if (a < 0) break;
    ++idx[a];
  }
  std::map<std::pair<int, int>, long long> counts;
  Atlas atlas;
  Quadruple q;
  q.tol = 1e-9;
  for (auto& v : q.xi) v.assign(n, 0.0);
  const double R2 = double(radius) * radius;
  for (const auto& signs : atlas_sign_patterns()) {
    q.signs = signs;
    for (const auto& a : ball)
      for (const auto& b : ball)
        for (const auto& c : ball) {
          double r4 = 0.0;
          for (int d = 0; d < n; ++d) {
            double x = -(signs[0] * a[d] + signs[1] * b[d] + signs[2] * c[d]) * signs[3];
            q.xi[3][d] = x;
            r4 += x * x;
          }
          if (r4 > R2) continue;
          q.xi[0] = a;
          q.xi[1] = b;
          q.xi[2] = c;
          Classification cl = classify(m, q, p);
          double M = q.max_norm();
          int shell = M <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(M) - 1e-12));
          ++counts[{shell, static_cast<int>(cl.cls)}];
          ++atlas.total;
          if (cl.ambiguous) ++atlas.ambiguous;
          if (cl.cls == InteractionClass::weakly_transversal) ++atlas.weakly_transversal_nonzero;
          if (visit) visit(q, cl);
        }
  }
  for (const auto& [key, cnt] : counts)
    atlas.rows.push_back({key.first, static_cast<InteractionClass>(key.second), cnt});
  return atlas;
}

std::string atlas_csv(const Atlas& a) {
  std::ostringstream os;
  os << "shell_k,class,count\n";
  for (const auto& r : a.rows) os << r.shell_k << "," << to_string(r.cls) << "," << r.count << "\n";
  return os.str();
}

}  // namespace mlab
