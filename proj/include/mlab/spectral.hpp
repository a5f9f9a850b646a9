#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "mlab/geometry.hpp"

namespace mlab {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;
using RVec = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Periodic box [0, L)^n sampled at N points per axis, row-major with the last
// axis fastest. Frequencies are 2*pi*k/L with k in [-N/2, N/2).
struct Grid {
  int n = 2;
  int N = 64;
  double L = 2.0 * kPi;

  std::size_t size() const;
  double dx() const { return L / N; }
  double cell() const;
  Grid refined(int factor) const { return {n, N * factor, L}; }
  bool operator==(const Grid&) const = default;
};

// Requires N a power of two and at least min_points.
void validate_grid(const Grid& g, int min_points = 16);

struct Field {
  Grid grid;
  CVec v;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), v(g.size()) {}
  Field(const Grid& g, CVec values);
};

// Per-grid tables of wavevectors, cached and shared read-only.
struct Freqs {
  Grid grid;
  RVec xi;            // size()*n, component a of mode m at xi[m*n + a]
  RVec abs;           // |xi|
  std::vector<int> k; // integer lattice index, same layout as xi
};
std::shared_ptr<const Freqs> freqs(const Grid& g);

// Unnormalized forward transform and its normalized inverse.
CVec fft(const Grid& g, const CVec& x);
CVec ifft(const Grid& g, const CVec& X);

// Physical coordinate of component `axis` of sample `idx`.
double coord(const Grid& g, std::size_t idx, int axis);

template <class Symbol>
Field apply_symbol(const Field& f, Symbol&& sym) {
  auto fr = freqs(f.grid);
  CVec X = fft(f.grid, f.v);
  const int n = f.grid.n;
  for (std::size_t m = 0; m < X.size(); ++m) X[m] *= sym(&fr->xi[m * n], fr->abs[m], m);
  return Field(f.grid, ifft(f.grid, X));
}

// Smooth radial cutoff: 1 on [0,1], 0 on [2,inf).
double lp_bump(double r);

struct LPSelector {
  enum Kind { at_most, shell } kind = shell;
  int k = 0;
  static LPSelector le(int k) { return {at_most, k}; }
  static LPSelector at(int k) { return {shell, k}; }
};
double lp_symbol(const LPSelector& sel, double absxi);
Field lp_project(const Field& f, const LPSelector& sel);

// Smallest K such that P_{<=K} is the identity on the lattice.
int lp_top_shell(const Grid& g);
// Blocks P_{<=k_low}, P_{k_low+1}, ..., P_{K}; they sum to f.
std::vector<Field> lp_decompose(const Field& f, int k_low);

Field frac_derivative(const Field& f, double s, bool homogeneous);
Field translate(const Field& f, const RVec& x0);
Field dealias(const Field& f);
bool is_dealiased(const Grid& g, std::size_t mode);

Field derivative(const Field& f, int axis);
// Trigonometric interpolation onto a grid with N*factor points.
Field upsample(const Field& f, int factor);
// Keeps the modes representable on the coarser grid.
Field downsample(const Field& f, int N);

enum class ProfileWeight { sobolev, dyadic };
struct DyadicProfile {
  int k_low = 0;
  RVec norms;  // norms[i] belongs to block k_low + i; block 0 is P_{<=k_low}
};
// Per-block H^s norms; `sobolev` uses <D>^s, `dyadic` uses 2^{ks}.
DyadicProfile lp_norms_profile(const Field& f, double s,
                               ProfileWeight w = ProfileWeight::sobolev,
                               int k_low = 0);

double l2_norm(const Field& f);
double lq_norm(const Field& f, double q);
double max_abs(const Field& f);
double integrate(const Grid& g, const RVec& a);
double sobolev_norm(const Field& f, double s);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(cplx s, const Field& a);
Field conj(const Field& a);

void write_field(const std::string& path, const Field& f);
Field read_field(const std::string& path);

}  // namespace mlab
