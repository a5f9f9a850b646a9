#include <doctest.h>

#include <cmath>
#include <random>

#include "mlab/geometry.hpp"

using namespace mlab;

TEST_CASE("norm_sq_g examples") {
  std::vector<double> a{1, 1}, b{3, 4}, c{1, 2, 2};
  CHECK(norm_sq_g(diagonal_metric({1, -1}), a) == 0.0);
  CHECK(norm_sq_g(identity_metric(2), b) == 25.0);
  CHECK(norm_sq_g(diagonal_metric({1, 1, -1}), c) == 1.0);
  std::vector<double> bad{1, 2, 3};
  CHECK_THROWS_AS(norm_sq_g(identity_metric(2), bad), Error);
}

TEST_CASE("nondegeneracy_constant examples") {
  std::vector<double> h{1, 0, 0, -1}, d{2, 0, 0, -1}, z{1, 0, 0, 0};
  CHECK(nondegeneracy_constant(2, h) == doctest::Approx(1.0));
  CHECK(nondegeneracy_constant(2, d) == doctest::Approx(2.0));
  CHECK_THROWS_WITH_AS(nondegeneracy_constant(2, z), doctest::Contains("degenerate"), Error);
  CHECK_THROWS_AS(make_metric(2, {1, 0, 0, 0}), Error);
  CHECK_THROWS_AS(make_metric(2, {1, 0.5, 0.2, 1}), Error);
}

TEST_CASE("raise_index examples") {
  std::vector<double> w{2.5, -1.5}, w3{1, 2, 3};
  CHECK(raise_index(diagonal_metric({1, -1}), w) == std::vector<double>{2.5, 1.5});
  CHECK(raise_index(identity_metric(2), w) == w);
  CHECK(raise_index(diagonal_metric({1, 1, -1}), w3) == std::vector<double>{1, 2, -3});
}

TEST_CASE("definiteness follows the signature") {
  CHECK(identity_metric(3).definite);
  CHECK_FALSE(diagonal_metric({1, -1}).definite);
  CHECK(make_metric(2, {-2, 0.5, 0.5, -1}).definite);
}

TEST_CASE("bounds and linearity on random covectors") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N01;
  for (auto g0 : {std::vector<double>{2, 0.3, 0.3, -0.7}, std::vector<double>{1, 0, 0, -1},
                  std::vector<double>{0.5, 0.1, 0.1, 3}}) {
    Metric m = make_metric(2, g0);
    const double c = m.c_nondeg;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> xi{N01(rng), N01(rng)}, eta{N01(rng), N01(rng)};
      double x2 = xi[0] * xi[0] + xi[1] * xi[1];
      CHECK(std::abs(norm_sq_g(m, xi)) <= c * x2 * (1 + 1e-12));
      auto up = raise_index(m, xi);
      double u = std::hypot(up[0], up[1]);
      CHECK(u >= std::sqrt(x2) / c * (1 - 1e-12));
      CHECK(u <= c * std::sqrt(x2) * (1 + 1e-12));
      const double al = N01(rng), be = N01(rng);
      std::vector<double> mix{al * xi[0] + be * eta[0], al * xi[1] + be * eta[1]};
      auto lhs = raise_index(m, mix), ue = raise_index(m, eta);
      for (int a = 0; a < 2; ++a) CHECK(lhs[a] == doctest::Approx(al * up[a] + be * ue[a]).epsilon(1e-14).scale(1));
    }
  }
}

TEST_CASE("coupling is optional and symmetric") {
  Metric m = make_metric(2, {1, 0, 0, -1}, {0.5, 0.1, 0.1, 0.2});
  CHECK(m.has_coupling());
  CHECK(m.coupling(0, 1) == m.coupling(1, 0));
  CHECK_FALSE(identity_metric(2).has_coupling());
  CHECK_THROWS_AS(make_metric(2, {1, 0, 0, -1}, {0.5, 0.1, 0.3, 0.2}), Error);
}
