#pragma once

#include <optional>
#include <string>

#include "mlab/spectral.hpp"

namespace mlab {

struct Trajectory;

// Dyadic sequence c_k, k = 0..K. Block 0 carries P_{<=0}.
struct Envelope {
  RVec c;
  double delta = 0.1;
  double s = 0.0;
  // Weakened variant: for j < k, 2^{-delta(k-j)} <= c_j/c_k <= 2^{upper(k-j)}.
  std::optional<double> upper;
};

// Per-shell norms used by envelopes: 2^{ks} ||P_k f||_{L^2}.
RVec envelope_shell_norms(const Field& f, double s);

Envelope minimal_envelope(const Field& f, double s, double delta = 0.1);

// Slow-variation check; `tol` is relative.
bool is_admissible(const Envelope& e, double tol = 1e-12);

// 1 + 2 sum_{m>=1} 4^{-delta m}
double envelope_overlap_constant(double delta);

struct EnvelopeReport {
  RVec ratio;  // R_k
  double max_ratio = 0.0;
  std::optional<double> first_violation_time;
};

// R_k = sup_t ||P_k u(t)||_{L^2} / (eps c_k 2^{-ks}); shells with c_k = 0 get 0.
EnvelopeReport check_envelope_bound(const Trajectory& traj, const Envelope& env,
                                    double s, double eps, double threshold = 1.0);

std::string envelope_csv(const Envelope& e);

}  // namespace mlab
