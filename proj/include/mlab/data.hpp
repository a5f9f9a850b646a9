#pragma once

#include <cstdint>

#include "mlab/spectral.hpp"

namespace mlab {

// Gaussian random coefficients on the LP shell k, dealiased, scaled to the
// requested L^2 norm.
Field random_shell(const Grid& g, int k, std::uint64_t seed, double l2 = 1.0);

// Dealiased random field with iid coefficients on every retained mode.
Field random_dealiased(const Grid& g, std::uint64_t seed, double l2 = 1.0);

// a * exp(i xi0 . x), xi0 given in lattice units (integers k, xi = 2 pi k / L).
Field plane_wave(const Grid& g, cplx a, const std::vector<int>& k0);

struct PacketSpec {
  RVec center;     // physical position
  RVec frequency;  // physical wavevector
  double width = 0.5;
  cplx amplitude = 1.0;
};
// Gaussian envelope around `center` measured with the torus distance.
Field wave_packet(const Grid& g, const PacketSpec& p);

}  // namespace mlab
