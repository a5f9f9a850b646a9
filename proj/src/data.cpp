#include "mlab/data.hpp"

#include <cmath>
#include <random>

#include "mlab/geometry.hpp"

namespace mlab {

namespace {

Field normalized(Field f, double l2) {
  double nrm = l2_norm(f);
  if (nrm == 0.0) return f;
  for (auto& z : f.v) z *= l2 / nrm;
  return f;
}

}  // namespace

Field random_shell(const Grid& g, int k, std::uint64_t seed, double l2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto fr = freqs(g);
  CVec X(g.size());
  for (std::size_t m = 0; m < X.size(); ++m) {
    double re = nd(rng), im = nd(rng);
    double w = lp_symbol(LPSelector::at(k), fr->abs[m]);
    X[m] = is_dealiased(g, m) ? w * cplx(re, im) : 0.0;
  }
  return normalized(Field(g, ifft(g, X)), l2);
}

Field random_dealiased(const Grid& g, std::uint64_t seed, double l2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CVec X(g.size());
  for (std::size_t m = 0; m < X.size(); ++m) {
    double re = nd(rng), im = nd(rng);
    X[m] = is_dealiased(g, m) ? cplx(re, im) : 0.0;
  }
  return normalized(Field(g, ifft(g, X)), l2);
}

Field plane_wave(const Grid& g, cplx a, const std::vector<int>& k0) {
  if (k0.size() != static_cast<std::size_t>(g.n)) throw Error("wavevector has wrong dimension");
  Field f(g);
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    double ph = 0.0;
    for (int ax = 0; ax < g.n; ++ax) ph += 2.0 * kPi * k0[ax] / g.L * coord(g, i, ax);
    f.v[i] = a * std::polar(1.0, ph);
  }
  return f;
}

Field wave_packet(const Grid& g, const PacketSpec& p) {
  if (p.center.size() != static_cast<std::size_t>(g.n) ||
      p.frequency.size() != static_cast<std::size_t>(g.n))
    throw Error("packet center/frequency has wrong dimension");
  Field f(g);
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    double r2 = 0.0, ph = 0.0;
    for (int ax = 0; ax < g.n; ++ax) {
      double x = coord(g, i, ax);
      double d = std::remainder(x - p.center[ax], g.L);
      r2 += d * d;
      ph += p.frequency[ax] * d;
    }
    f.v[i] = p.amplitude * std::exp(-0.5 * r2 / (p.width * p.width)) * std::polar(1.0, ph);
  }
  return dealias(f);
}

}  // namespace mlab
