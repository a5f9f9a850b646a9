#include "mlab/envelopes.hpp"

#include <cmath>
#include <sstream>

#include "mlab/flows.hpp"

namespace mlab {

RVec envelope_shell_norms(const Field& f, double s) {
  return lp_norms_profile(f, s, ProfileWeight::dyadic, 0).norms;
}

Envelope minimal_envelope(const Field& f, double s, double delta) {
  if (!(delta > 0.0 && delta <= 0.25)) throw Error("envelope delta must lie in (0, 1/4]");
  RVec a = envelope_shell_norms(f, s);
  Envelope e;
  e.delta = delta;
  e.s = s;
  e.c.assign(a.size(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a.size(); ++j) {
      double d = std::abs(static_cast<double>(j) - static_cast<double>(k));
      e.c[k] = std::max(e.c[k], std::exp2(-delta * d) * a[j]);
    }
  return e;
}

bool is_admissible(const Envelope& e, double tol) {
  for (std::size_t j = 0; j < e.c.size(); ++j) {
    if (e.c[j] < 0.0) return false;
    for (std::size_t k = 0; k < e.c.size(); ++k) {
      if (j == k || e.c[j] == 0.0 || e.c[k] == 0.0) continue;
      double d = std::abs(static_cast<double>(j) - static_cast<double>(k));
      double r = e.c[j] / e.c[k];
      if (!e.upper) {
        if (r > std::exp2(e.delta * d) * (1.0 + tol)) return false;
      } else if (j < k) {
        if (r < std::exp2(-e.delta * d) * (1.0 - tol)) return false;
        if (r > std::exp2(*e.upper * d) * (1.0 + tol)) return false;
      }
    }
  }
  return true;
}

double envelope_overlap_constant(double delta) {
  double q = std::pow(4.0, -delta);
  return 1.0 + 2.0 * q / (1.0 - q);
}

EnvelopeReport check_envelope_bound(const Trajectory& traj, const Envelope& env, double s,
                                    double eps, double threshold) {
  EnvelopeReport rep;
  rep.ratio.assign(env.c.size(), 0.0);
  for (std::size_t m = 0; m < traj.size(); ++m) {
    auto blocks = lp_decompose(traj.slices[m], 0);
    double worst = 0.0;
    for (std::size_t k = 0; k < env.c.size() && k < blocks.size(); ++k) {
      if (env.c[k] == 0.0) continue;
      double r = l2_norm(blocks[k]) / (eps * env.c[k] * std::exp2(-static_cast<double>(k) * s));
      rep.ratio[k] = std::max(rep.ratio[k], r);
      worst = std::max(worst, r);
    }
    if (worst > threshold && !rep.first_violation_time) rep.first_violation_time = traj.time(m);
  }
  for (double r : rep.ratio) rep.max_ratio = std::max(rep.max_ratio, r);
  return rep;
}

std::string envelope_csv(const Envelope& e) {
  std::ostringstream os;
  os.precision(17);
  os << "k,c_k\n";
  for (std::size_t k = 0; k < e.c.size(); ++k) os << k << "," << e.c[k] << "\n";
  return os.str();
}

}  // namespace mlab
