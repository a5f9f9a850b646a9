#include "mlab/spectral.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>

#include "mlab/geometry.hpp"

namespace mlab {

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(N);
  return s;
}

double Grid::cell() const { return std::pow(dx(), n); }

void validate_grid(const Grid& g, int min_points) {
  if (g.n < 1 || g.n > 3) throw Error("grid dimension must be 1, 2 or 3");
  if (g.N < min_points || (g.N & (g.N - 1)) != 0)
    throw Error("points per axis must be a power of two >= " + std::to_string(min_points));
  if (!(g.L > 0.0) || !std::isfinite(g.L)) throw Error("box length must be positive");
}

Field::Field(const Grid& g, CVec values) : grid(g), v(std::move(values)) {
  if (v.size() != g.size()) throw Error("field size does not match grid");
}

namespace {

struct Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
};

std::mutex plan_mutex;

const Plans& plans_for(int n, int N) {
  static std::map<std::pair<int, int>, Plans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto key = std::make_pair(n, N);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<int> dims(n, N);
  std::size_t sz = 1;
  for (int a = 0; a < n; ++a) sz *= N;
  auto* a = fftw_alloc_complex(sz);
  auto* b = fftw_alloc_complex(sz);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p;
  p.fwd = fftw_plan_dft(n, dims.data(), a, b, FFTW_FORWARD, flags);
  p.bwd = fftw_plan_dft(n, dims.data(), a, b, FFTW_BACKWARD, flags);
  fftw_free(a);
  fftw_free(b);
  return cache.emplace(key, p).first->second;
}

int lattice_index(int i, int N) { return i < N / 2 ? i : i - N; }

}  // namespace

CVec fft(const Grid& g, const CVec& x) {
  const Plans& p = plans_for(g.n, g.N);
  CVec out(x.size());
  fftw_execute_dft(p.fwd, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(x.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

CVec ifft(const Grid& g, const CVec& X) {
  const Plans& p = plans_for(g.n, g.N);
  CVec out(X.size());
  fftw_execute_dft(p.bwd, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(X.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double s = 1.0 / static_cast<double>(X.size());
  for (auto& z : out) z *= s;
  return out;
}

std::shared_ptr<const Freqs> freqs(const Grid& g) {
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const Freqs>> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto key = std::make_tuple(g.n, g.N, g.L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto f = std::make_shared<Freqs>();
  f->grid = g;
  const std::size_t sz = g.size();
  f->xi.resize(sz * g.n);
  f->k.resize(sz * g.n);
  f->abs.resize(sz);
  for (std::size_t m = 0; m < sz; ++m) {
    std::size_t rem = m;
    double s2 = 0.0;
    for (int a = g.n - 1; a >= 0; --a) {
      int i = static_cast<int>(rem % g.N);
      rem /= g.N;
      int k = lattice_index(i, g.N);
      double xi = 2.0 * kPi * k / g.L;
      f->k[m * g.n + a] = k;
      f->xi[m * g.n + a] = xi;
      s2 += xi * xi;
    }
    f->abs[m] = std::sqrt(s2);
  }
  return cache.emplace(key, f).first->second;
}

double coord(const Grid& g, std::size_t idx, int axis) {
  std::size_t stride = 1;
  for (int a = g.n - 1; a > axis; --a) stride *= g.N;
  return static_cast<double>((idx / stride) % g.N) * g.dx();
}

double lp_bump(double r) {
  auto sigma = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  double t = 2.0 - r;
  if (t >= 1.0) return 1.0;
  if (t <= 0.0) return 0.0;
  double a = sigma(t), b = sigma(1.0 - t);
  return a / (a + b);
}

double lp_symbol(const LPSelector& sel, double absxi) {
  double lo = std::ldexp(absxi, -sel.k);
  if (sel.kind == LPSelector::at_most) return lp_bump(lo);
  return lp_bump(lo) - lp_bump(2.0 * lo);
}

Field lp_project(const Field& f, const LPSelector& sel) {
  return apply_symbol(f, [&](const double*, double a, std::size_t) {
    return cplx(lp_symbol(sel, a), 0.0);
  });
}

int lp_top_shell(const Grid& g) {
  auto fr = freqs(g);
  double mx = 0.0;
  for (double a : fr->abs) mx = std::max(mx, a);
  return std::max(0, static_cast<int>(std::ceil(std::log2(std::max(mx, 1.0)))));
}

std::vector<Field> lp_decompose(const Field& f, int k_low) {
  const int K = std::max(lp_top_shell(f.grid), k_low);
  auto fr = freqs(f.grid);
  CVec X = fft(f.grid, f.v);
  std::vector<Field> out;
  for (int k = k_low; k <= K; ++k) {
    LPSelector sel = k == k_low ? LPSelector::le(k) : LPSelector::at(k);
    CVec Y(X.size());
    for (std::size_t m = 0; m < X.size(); ++m) Y[m] = X[m] * lp_symbol(sel, fr->abs[m]);
    out.emplace_back(f.grid, ifft(f.grid, Y));
  }
  return out;
}

Field frac_derivative(const Field& f, double s, bool homogeneous) {
  return apply_symbol(f, [&](const double*, double a, std::size_t) {
    if (homogeneous) return cplx(a == 0.0 ? 0.0 : std::pow(a, s), 0.0);
    return cplx(std::pow(1.0 + a * a, 0.5 * s), 0.0);
  });
}

Field translate(const Field& f, const RVec& x0) {
  if (x0.size() != static_cast<std::size_t>(f.grid.n)) throw Error("shift has wrong dimension");
  const int n = f.grid.n;
  return apply_symbol(f, [&](const double* xi, double, std::size_t) {
    double ph = 0.0;
    for (int a = 0; a < n; ++a) ph += xi[a] * x0[a];
    return std::polar(1.0, -ph);
  });
}

bool is_dealiased(const Grid& g, std::size_t mode) {
  auto fr = freqs(g);
  for (int a = 0; a < g.n; ++a)
    if (3 * std::abs(fr->k[mode * g.n + a]) > g.N) return false;
  return true;
}

Field dealias(const Field& f) {
  auto fr = freqs(f.grid);
  const int n = f.grid.n, N = f.grid.N;
  return apply_symbol(f, [&](const double*, double, std::size_t m) {
    for (int a = 0; a < n; ++a)
      if (3 * std::abs(fr->k[m * n + a]) > N) return cplx(0.0);
    return cplx(1.0);
  });
}

Field derivative(const Field& f, int axis) {
  auto fr = freqs(f.grid);
  const int n = f.grid.n, N = f.grid.N;
  return apply_symbol(f, [&](const double* xi, double, std::size_t m) {
    if (fr->k[m * n + axis] == -N / 2) return cplx(0.0);
    return cplx(0.0, xi[axis]);
  });
}

namespace {

// Copies the coefficients shared by both grids from `src` to `dst` layouts.
CVec remap_modes(const Grid& from, const CVec& X, const Grid& to) {
  CVec Y(to.size());
  const int n = from.n;
  const int Nmin = std::min(from.N, to.N);
  auto ff = freqs(from);
  const double scale = std::pow(static_cast<double>(to.N) / from.N, n);
  for (std::size_t m = 0; m < X.size(); ++m) {
    std::size_t idx = 0;
    bool keep = true;
    for (int a = 0; a < n; ++a) {
      int k = ff->k[m * n + a];
      if (k == -Nmin / 2 || std::abs(k) >= Nmin / 2) {
        keep = false;
        break;
      }
      idx = idx * to.N + static_cast<std::size_t>((k + to.N) % to.N);
    }
    if (keep) Y[idx] = X[m] * scale;
  }
  return Y;
}

}  // namespace

Field upsample(const Field& f, int factor) {
  if (factor == 1) return f;
  Grid fine = f.grid.refined(factor);
  return Field(fine, ifft(fine, remap_modes(f.grid, fft(f.grid, f.v), fine)));
}

Field downsample(const Field& f, int N) {
  if (N == f.grid.N) return f;
  Grid coarse{f.grid.n, N, f.grid.L};
  return Field(coarse, ifft(coarse, remap_modes(f.grid, fft(f.grid, f.v), coarse)));
}

DyadicProfile lp_norms_profile(const Field& f, double s, ProfileWeight w, int k_low) {
  DyadicProfile p;
  p.k_low = k_low;
  auto blocks = lp_decompose(f, k_low);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    int k = k_low + static_cast<int>(i);
    if (w == ProfileWeight::sobolev) {
      p.norms.push_back(sobolev_norm(blocks[i], s));
    } else {
      double weight = i == 0 ? std::pow(2.0, std::max(k, 0) * s) : std::pow(2.0, k * s);
      p.norms.push_back(weight * l2_norm(blocks[i]));
    }
  }
  return p;
}

double l2_norm(const Field& f) {
  double s = 0.0;
  for (const auto& z : f.v) s += std::norm(z);
  return std::sqrt(s * f.grid.cell());
}

double lq_norm(const Field& f, double q) {
  double s = 0.0;
  for (const auto& z : f.v) s += std::pow(std::abs(z), q);
  return std::pow(s * f.grid.cell(), 1.0 / q);
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (const auto& z : f.v) m = std::max(m, std::abs(z));
  return m;
}

double integrate(const Grid& g, const RVec& a) {
  double s = 0.0;
  for (double x : a) s += x;
  return s * g.cell();
}

double sobolev_norm(const Field& f, double s) {
  auto fr = freqs(f.grid);
  CVec X = fft(f.grid, f.v);
  double acc = 0.0;
  for (std::size_t m = 0; m < X.size(); ++m)
    acc += std::pow(1.0 + fr->abs[m] * fr->abs[m], s) * std::norm(X[m]);
  return std::sqrt(acc * f.grid.cell() / static_cast<double>(X.size()));
}

Field operator+(const Field& a, const Field& b) {
  Field c(a.grid);
  for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = a.v[i] + b.v[i];
  return c;
}

Field operator-(const Field& a, const Field& b) {
  Field c(a.grid);
  for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = a.v[i] - b.v[i];
  return c;
}

Field operator*(cplx s, const Field& a) {
  Field c(a.grid);
  for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = s * a.v[i];
  return c;
}

Field conj(const Field& a) {
  Field c(a.grid);
  for (std::size_t i = 0; i < c.v.size(); ++i) c.v[i] = std::conj(a.v[i]);
  return c;
}

static_assert(std::endian::native == std::endian::little,
              "field files are written in host order, which must be little-endian");

void write_field(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  std::uint64_t n = f.grid.n, N = f.grid.N;
  double L = f.grid.L;
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(&N), 8);
  os.write(reinterpret_cast<const char*>(&L), 8);
  os.write(reinterpret_cast<const char*>(f.v.data()),
           static_cast<std::streamsize>(f.v.size() * sizeof(cplx)));
  if (!os) throw Error("short write to " + path);
}

Field read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  std::uint64_t n = 0, N = 0;
  double L = 0.0;
  is.read(reinterpret_cast<char*>(&n), 8);
  is.read(reinterpret_cast<char*>(&N), 8);
  is.read(reinterpret_cast<char*>(&L), 8);
  if (!is || n < 1 || n > 3 || N < 2 || N > (1u << 14)) throw Error("bad field header in " + path);
  Field f(Grid{static_cast<int>(n), static_cast<int>(N), L});
  is.read(reinterpret_cast<char*>(f.v.data()),
          static_cast<std::streamsize>(f.v.size() * sizeof(cplx)));
  if (!is) throw Error("truncated field file " + path);
  return f;
}

}  // namespace mlab
