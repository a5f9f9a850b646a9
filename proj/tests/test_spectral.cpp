#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mlab/data.hpp"
#include "mlab/spectral.hpp"

using namespace mlab;

namespace {

// The bump from its defining formula, independent of the library.
double psi_ref(double r) {
  auto s = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  double t = 2.0 - r;
  if (t >= 1.0) return 1.0;
  if (t <= 0.0) return 0.0;
  return s(t) / (s(t) + s(1.0 - t));
}

double rel(const Field& a, const Field& b) { return l2_norm(a - b) / std::max(1e-300, l2_norm(b)); }

const Grid G{2, 32, 2.0 * kPi};

}  // namespace

TEST_CASE("bump profile") {
  for (double r = 0.0; r < 3.0; r += 0.01) {
    CHECK(lp_bump(r) == doctest::Approx(psi_ref(r)).epsilon(1e-14));
    CHECK(lp_bump(r) >= lp_bump(r + 0.01));
  }
  CHECK(lp_bump(1.0) == 1.0);
  CHECK(lp_bump(2.0) == 0.0);
}

TEST_CASE("grid validation and transform round trip") {
  CHECK_THROWS_AS(validate_grid({2, 8, 1.0}), Error);
  CHECK_THROWS_AS(validate_grid({2, 24, 1.0}), Error);
  CHECK_NOTHROW(validate_grid({2, 16, 1.0}));
  Field f = random_dealiased(G, 1);
  Field back(G, ifft(G, fft(G, f.v)));
  CHECK(rel(back, f) <= 1e-12);
  // Parseval with the unnormalized forward transform.
  CVec F = fft(G, f.v);
  double s = 0.0;
  for (auto z : F) s += std::norm(z);
  CHECK(std::sqrt(s * G.cell() / G.size()) == doctest::Approx(l2_norm(f)).epsilon(1e-12));
}

TEST_CASE("partition of unity in the paper's convention") {
  for (int seed = 0; seed < 5; ++seed) {
    Field f = random_dealiased(G, seed);
    Field sum(G);
    for (const auto& b : lp_decompose(f, 1)) sum = sum + b;
    CHECK(rel(sum, f) <= 1e-12);
  }
}

TEST_CASE("single mode with |xi| = 5 lives on the shells where the symbol is nonzero") {
  Field f = plane_wave(G, 1.0, {3, 4});
  for (int k = -1; k <= 6; ++k) {
    double expect = psi_ref(5.0 / std::ldexp(1.0, k)) - psi_ref(5.0 / std::ldexp(1.0, k - 1));
    double got = l2_norm(lp_project(f, LPSelector::at(k))) / l2_norm(f);
    CHECK(got == doctest::Approx(std::abs(expect)).epsilon(1e-12).scale(1.0));
    CHECK((got > 1e-12) == (k == 2 || k == 3));
  }
}

TEST_CASE("shell projectors are multipliers, not idempotents") {
  Field f = random_dealiased(G, 9);
  for (int k = 0; k <= 4; ++k)
    for (int j = 0; j <= 4; ++j)
      if (std::abs(k - j) >= 2)
        CHECK(l2_norm(lp_project(lp_project(f, LPSelector::at(j)), LPSelector::at(k))) <= 1e-14 * l2_norm(f));
  Field p = lp_project(f, LPSelector::at(3));
  CHECK(rel(lp_project(p, LPSelector::at(3)), p) > 1e-3);
}

TEST_CASE("fractional derivatives") {
  Field f = random_dealiased(G, 2);
  Field zero = frac_derivative(f, 0.0, true);
  cplx mean = 0.0;
  for (auto z : f.v) mean += z;
  mean /= double(G.size());
  Field centered = f;
  for (auto& z : centered.v) z -= mean;
  CHECK(rel(zero, centered) <= 1e-12);

  Field w = plane_wave(G, 1.0, {2, -1});
  CHECK(rel(frac_derivative(w, 0.7, true), std::pow(std::sqrt(5.0), 0.7) * w) <= 1e-12);

  Field lap(G);
  for (int a = 0; a < 2; ++a) lap = lap + derivative(derivative(f, a), a);
  CHECK(rel(frac_derivative(f, 2.0, false), f - lap) <= 1e-12);
}

TEST_CASE("translations") {
  Field f = random_dealiased(G, 3);
  CHECK(rel(translate(f, {0.0, 0.0}), f) <= 1e-15);
  CHECK(rel(translate(f, {G.L, -G.L}), f) <= 1e-12);
  CHECK(l2_norm(translate(f, {0.37, 1.91})) == doctest::Approx(l2_norm(f)).epsilon(1e-12));
  RVec a{0.3, -1.2}, b{2.2, 0.05};
  CHECK(rel(translate(f, {a[0] + b[0], a[1] + b[1]}), translate(translate(f, a), b)) <= 1e-12);
  // A lattice shift moves samples.
  Field s = translate(f, {G.dx(), 0.0});
  CHECK(std::abs(s.v[G.N + 5] - f.v[5]) <= 1e-12 * max_abs(f));
}

TEST_CASE("dealiasing") {
  Field band = random_dealiased(G, 4);
  CHECK(rel(dealias(band), band) <= 1e-15);
  Field full(G);
  for (std::size_t i = 0; i < full.v.size(); ++i) full.v[i] = cplx(std::sin(3.7 * i), std::cos(1.3 * i * i));
  Field d = dealias(full);
  CHECK(rel(dealias(d), d) <= 1e-15);
  CHECK(l2_norm(d) <= l2_norm(full));
}

TEST_CASE("multipliers commute") {
  Field f = random_dealiased(G, 5);
  Field a = lp_project(frac_derivative(f, 0.5, true), LPSelector::at(2));
  Field b = frac_derivative(lp_project(f, LPSelector::at(2)), 0.5, true);
  CHECK(rel(a, b) <= 1e-13);
}

TEST_CASE("dyadic profiles") {
  Field m = plane_wave(G, 1.0, {8, 0});
  auto p = lp_norms_profile(m, 1.0);
  for (std::size_t i = 0; i < p.norms.size(); ++i) {
    int k = p.k_low + static_cast<int>(i);
    if (k < 2 || k > 4) CHECK(p.norms[i] <= 1e-13 * sobolev_norm(m, 1.0));
  }
  auto z = lp_norms_profile(Field(G), 1.0);
  for (double x : z.norms) CHECK(x == 0.0);
  for (int seed = 0; seed < 10; ++seed) {
    Field f = random_dealiased(G, 40 + seed);
    auto q = lp_norms_profile(f, 1.0);
    double s = 0.0;
    for (double x : q.norms) s += x * x;
    double ratio = s / std::pow(sobolev_norm(f, 1.0), 2);
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
  }
}

TEST_CASE("binary field round trip") {
  Field f = random_dealiased({2, 16, 3.5}, 6);
  auto path = std::filesystem::temp_directory_path() / "mlab_field_test.bin";
  write_field(path.string(), f);
  Field g = read_field(path.string());
  CHECK(g.grid == f.grid);
  CHECK(g.v == f.v);
  CHECK(std::filesystem::file_size(path) == 24 + 16 * f.v.size());
  std::filesystem::remove(path);
}
