#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mlab/data.hpp"
#include "mlab/flows.hpp"

using namespace mlab;

namespace {
const Grid G32{2, 32, 2.0 * kPi};
const Grid G64{2, 64, 2.0 * kPi};

double rel(const Field& a, const Field& b) { return l2_norm(a - b) / std::max(1e-300, l2_norm(b)); }
double mass(const Field& u) { return l2_norm(u) * l2_norm(u); }
Metric ql_metric() { return make_metric(2, {1.0, 0.0, 0.0, 1.0}, {1.0, 0.0, 0.0, 1.0}); }
Metric hyp() { return diagonal_metric({1, -1}); }
}  // namespace

TEST_CASE("linear flow") {
  Field u0 = random_dealiased(G32, 1);
  for (const Metric& m : {identity_metric(2), hyp()}) {
    CHECK(rel(evolve_linear_flat(m, u0, 0.0), u0) == 0.0);
    CHECK(l2_norm(evolve_linear_flat(m, u0, 0.7)) == doctest::Approx(l2_norm(u0)).epsilon(1e-13));

    Field a = evolve_linear_flat(m, evolve_linear_flat(m, u0, 0.3), 0.45);
    CHECK(rel(a, evolve_linear_flat(m, u0, 0.75)) <= 1e-12);

    Field back = evolve_linear_flat(m, conj(u0), -0.4);
    CHECK(rel(back, conj(evolve_linear_flat(m, u0, 0.4))) <= 1e-12);
  }
  // Plane waves are eigenfunctions with phase |xi|^2_g t.
  const double t = 0.37;
  Field w = plane_wave(G32, 1.0, {3, 2});
  Field got = evolve_linear_flat(hyp(), w, t);
  CHECK(rel(got, std::polar(1.0, -(9.0 - 4.0) * t) * w) <= 1e-13);
  CHECK_THROWS_AS(evolve_linear_flat(identity_metric(3), w, t), Error);
}

TEST_CASE("time grid validation") {
  Field u0 = random_dealiased(G32, 1);
  CHECK_THROWS_AS(linear_trajectory(identity_metric(2), u0, 1.0, 0.3), Error);
  CHECK_THROWS_AS(linear_trajectory(identity_metric(2), u0, 1.0, 0.0), Error);
  CHECK(linear_trajectory(identity_metric(2), u0, 1.0, 0.25).size() == 5);
  CHECK(linear_trajectory(identity_metric(2), u0, 1.0, 0.25, 2).size() == 3);
  const double d = dt_max(identity_metric(2), G32);
  CHECK(d == doctest::Approx(0.5 / (2.0 * 10.0 * 10.0)).epsilon(0.25));
  // The indefinite symbol peaks on the axes, at half the Euclidean maximum.
  CHECK(dt_max(hyp(), G32) == doctest::Approx(2.0 * d));
}

TEST_CASE("semilinear flow") {
  const Metric m = identity_metric(2);
  Field u0 = random_shell(G32, 2, 7, 2.0 * kPi);

  SUBCASE("zero coupling is the linear flow") {
    Trajectory a = evolve_semilinear(m, 0.0, u0, 0.5, 0.01);
    Trajectory b = linear_trajectory(m, u0, 0.5, 0.01);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(rel(a.slices[i], b.slices[i]) <= 1e-10);
  }
  SUBCASE("mass is conserved") {
    Field v0 = random_shell(G64, 2, 7, 2.0 * kPi);
    Trajectory a = evolve_semilinear(m, 1.0, v0, 1.0, 1e-3, {.save_every = 100});
    for (const auto& s : a.slices) CHECK(std::abs(mass(s) - mass(v0)) <= 1e-8 * mass(v0));
  }
  SUBCASE("second order in time on resolved data") {
    // Quintic products of shell-1 data stay inside the dealiased band of N = 64,
    // so the projection after the phase rotation does not enter at O(dt^2).
    const double T = 0.5;
    Field v0 = random_shell(G64, 1, 7, 2.0 * kPi);
    Field ref = evolve_semilinear(m, 1.0, v0, T, 0.005 / 8).slices.back();
    double e1 = rel(evolve_semilinear(m, 1.0, v0, T, 0.01).slices.back(), ref);
    double e2 = rel(evolve_semilinear(m, 1.0, v0, T, 0.005).slices.back(), ref);
    CHECK(e1 > 1e-8);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
  }
  SUBCASE("one step is the linear step plus the nonlinearity to O(dt^2)") {
    auto defect = [&](double dt) {
      Field s = evolve_semilinear(m, 1.0, u0, dt, dt).slices.back();
      Field f(G32);
      for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = std::norm(u0.v[i]) * u0.v[i];
      Field pred = evolve_linear_flat(m, u0, dt) - cplx(0.0, dt) * dealias(f);
      return l2_norm(s - pred);
    };
    double d1 = defect(1e-3), d2 = defect(5e-4);
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.1));
  }
  SUBCASE("amplitude cap") {
    // Data that focuses into a packet at t = 0.2.
    Field packet = wave_packet(G32, {{kPi, kPi}, {4.0, 0.0}, 0.3});
    Field spread = evolve_linear_flat(m, packet, -0.2);
    StepOptions opt;
    opt.amplitude_cap = 2.0;
    CHECK_THROWS_WITH_AS(evolve_semilinear(m, 0.1, spread, 0.2, 1e-3, opt), "amplitude-cap exceeded", Error);
    CHECK_NOTHROW(evolve_semilinear(m, 0.1, spread, 0.2, 1e-3));
  }
}

TEST_CASE("quasilinear flow") {
  Field u0 = random_shell(G32, 2, 23);

  SUBCASE("zero coupling is the linear flow to RK4 accuracy") {
    const Metric m = identity_metric(2);
    Field exact = evolve_linear_flat(m, u0, 0.2);
    double e1 = rel(evolve_quasilinear(m, u0, 0.2, 2e-3).slices.back(), exact);
    double e2 = rel(evolve_quasilinear(m, u0, 0.2, 1e-3).slices.back(), exact);
    CHECK(e1 <= 1e-4);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.15));
    StepOptions opt;
    opt.integrating_factor = true;
    CHECK(rel(evolve_quasilinear(m, u0, 0.2, 2e-2, opt).slices.back(), exact) <= 1e-12);
  }
  SUBCASE("fourth order in time") {
    const Metric m = ql_metric();
    const double T = 0.2;
    Field ref = evolve_quasilinear(m, u0, T, 2.5e-4).slices.back();
    double e1 = rel(evolve_quasilinear(m, u0, T, 2e-3).slices.back(), ref);
    double e2 = rel(evolve_quasilinear(m, u0, T, 1e-3).slices.back(), ref);
    CHECK(e1 > 1e-10);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.15));
  }
  SUBCASE("mass drift") {
    Field v0 = random_shell(G64, 2, 23);
    Trajectory a = evolve_quasilinear(ql_metric(), v0, 0.5, 5e-4, {.save_every = 250});
    for (const auto& s : a.slices) CHECK(std::abs(mass(s) - mass(v0)) <= 1e-6 * mass(v0));
  }
  SUBCASE("non-degeneracy margin") {
    Field big = random_shell(G32, 2, 23, 40.0 * kPi);
    CHECK_THROWS_AS(evolve_quasilinear(ql_metric(), big, 0.01, 1e-3), Error);
    // A negative coupling drives the metric toward degeneracy.
    Metric neg = make_metric(2, {1.0, 0.0, 0.0, 1.0}, {-1.0, 0.0, 0.0, -1.0});
    CHECK_THROWS_WITH_AS(evolve_quasilinear(neg, big, 0.01, 1e-3),
                         doctest::Contains("non-degeneracy margin violated"), Error);
  }
}

TEST_CASE("paradifferential source") {
  const int k = 2;
  Field u0 = random_shell(G32, k, 23);
  SUBCASE("vanishes for the linear flow at fourth order") {
    auto size = [&](double dt) {
      Trajectory f = paradifferential_source(linear_trajectory(identity_metric(2), u0, 0.1, dt), k);
      double mx = 0.0;
      for (const auto& s : f.slices) mx = std::max(mx, l2_norm(s));
      return mx;
    };
    double a = size(4e-3), b = size(2e-3);
    CHECK(a <= 1e-3 * l2_norm(u0));
    CHECK(a / b == doctest::Approx(16.0).epsilon(0.15));
  }
  SUBCASE("quasilinear source stays near the fattened shell") {
    Trajectory traj = evolve_quasilinear(ql_metric(), u0, 0.05, 2.5e-3);
    Trajectory f = paradifferential_source(traj, k);
    CHECK(f.size() == traj.size() - 4);
    CHECK(f.t0 == doctest::Approx(2 * traj.dt));
    CHECK(l2_norm(f.slices[0]) > 0.0);
    // g_{<k} has frequencies below 2^k, so the product stays below 2^{k+1} + 2^k.
    const double cut = std::exp2(k + 1) + std::exp2(k);
    auto fr = freqs(G32);
    for (const auto& s : f.slices) {
      CVec hat = fft(G32, s.v);
      double out = 0.0, all = 0.0;
      for (std::size_t i = 0; i < hat.size(); ++i) {
        all += std::norm(hat[i]);
        if (fr->abs[i] > cut + 1e-9) out += std::norm(hat[i]);
      }
      CHECK(out <= 1e-20 * all);
    }
  }
  SUBCASE("needs five slices") {
    CHECK_THROWS_AS(paradifferential_source(linear_trajectory(identity_metric(2), u0, 0.3, 0.1), k), Error);
  }
}

TEST_CASE("trajectory round trip") {
  auto dir = std::filesystem::temp_directory_path() / "mlab_traj_test";
  std::filesystem::remove_all(dir);
  Trajectory t = evolve_semilinear(hyp(), 0.5, random_dealiased(G32, 4), 0.03, 0.01);
  write_trajectory(dir.string(), t);
  Trajectory r = read_trajectory(dir.string());
  CHECK(r.size() == t.size());
  CHECK(r.dt == t.dt);
  CHECK(r.model.kind == Model::semilinear);
  CHECK(r.model.sigma == 0.5);
  CHECK(r.metric.g0 == t.metric.g0);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(r.slices[i].v == t.slices[i].v);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_trajectory(dir.string()), Error);
}
