#include "doctest.h"

#include "pactomo/error.hpp"
#include "pactomo/rte_bridge.hpp"

#include <cmath>
#include <random>

using namespace pactomo;

TEST_CASE("diffusion coefficient") {
  const Grid3 grid = Grid3::centered(1.0, {2, 2, 2});
  CHECK(diffusion_coefficient(RTEParams::constant(grid, 1.0, 0.0, 0.5), 3) == doctest::Approx(1.0 / 3.0));
  CHECK(diffusion_coefficient(RTEParams::constant(grid, 0.0, 1.0, 0.0), 0) == doctest::Approx(1.0 / 3.0));
  const double tissue = 1.0 / (3.0 * (0.2 + (1.0 - 2.7 / 3.0) * 10.0));
  CHECK(diffusion_coefficient(RTEParams::constant(grid, 0.2, 10.0, 2.7), 5) == doctest::Approx(tissue).epsilon(1e-14));

  double prev = diffusion_coefficient(RTEParams::constant(grid, 0.1, 1.0, 1.0), 0);
  for (double mu_a : {0.2, 0.5, 1.0}) {
    const double d = diffusion_coefficient(RTEParams::constant(grid, mu_a, 1.0, 1.0), 0);
    CHECK(d < prev);
    prev = d;
  }
  prev = diffusion_coefficient(RTEParams::constant(grid, 0.1, 0.5, 2.0), 0);
  for (double mu_s : {1.0, 2.0, 4.0}) {
    const double d = diffusion_coefficient(RTEParams::constant(grid, 0.1, mu_s, 2.0), 0);
    CHECK(d < prev);
    prev = d;
  }
  CHECK_THROWS_AS(diffusion_coefficient(RTEParams::constant(grid, 0.0, 0.0, 0.0), 0), PreconditionError);
  CHECK_THROWS_AS(diffusion_coefficient(RTEParams::constant(grid, 0.0, 1.0, 3.0), 0), PreconditionError);
  CHECK_THROWS_AS(diffusion_coefficient(RTEParams::constant(grid, 1.0, 0.0, 0.0), 8), PreconditionError);
}

TEST_CASE("RTE initial pressure") {
  const Grid3 grid = Grid3::centered(0.5, {3, 3, 3});
  const auto ones = GruneisenField::constant(grid, 1.0);
  const auto p1 = RTEParams::constant(grid, 1.0, 2.0, 0.0);
  for (double v : rte_initial_pressure(ones, p1, std::vector<double>(grid.size(), 0.0))) CHECK(v == 0.0);
  for (double v : rte_initial_pressure(ones, p1, std::vector<double>(grid.size(), 1.0))) CHECK(v == 1.0);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  GruneisenField g{grid, std::vector<double>(grid.size())};
  RTEParams p = RTEParams::constant(grid, 0.0, 1.0, 0.0);
  std::vector<double> phi(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) {
    g.values[v] = u(rng);
    p.mu_a[v] = u(rng);
    phi[v] = u(rng);
  }
  const auto out = rte_initial_pressure(g, p, phi);
  for (std::size_t v = 0; v < grid.size(); ++v) CHECK(out[v] == g.values[v] * p.mu_a[v] * phi[v]);
  CHECK_THROWS_AS(rte_initial_pressure(g, p, std::vector<double>(3)), PreconditionError);
}

TEST_CASE("time-averaged Poynting vector") {
  const double c = 2.0, omega = 3.0;
  CHECK(poynting_time_averaged(CVec3::Zero(), CVec3::Zero(), c) == Vec3::Zero());

  // F_t E = a e^{-i omega x3 / c} e1: curl = (0, -i omega/c E1, 0), so F_t B = -E1 e2.
  const cplx a(0.7, -1.1);
  for (double x3 : {0.0, 0.3, -2.0}) {
    const cplx e1 = a * std::exp(cplx(0.0, -omega * x3 / c));
    const CVec3 e(e1, 0.0, 0.0);
    const CVec3 curl(0.0, cplx(0.0, -omega / c) * e1, 0.0);
    const CVec3 b = magnetic_from_curl(curl, omega, c);
    CHECK(std::abs(b[1] + e1) < 1e-15);
    const Vec3 s = poynting_time_averaged(e, b, c);
    const double expected = c * std::norm(a) / (8.0 * kPi);
    CHECK(std::abs(s[0]) <= 1e-12 * expected);
    CHECK(std::abs(s[1]) <= 1e-12 * expected);
    CHECK(std::abs(s[2] + expected) <= 1e-12 * expected);
  }
  CHECK_THROWS_AS(magnetic_from_curl(CVec3::Zero(), 0.0), PreconditionError);
}

TEST_CASE("grid curl converges at second order on a plane wave") {
  const double c = 1.0, omega = 2.0;
  const cplx a(1.0, 0.5);
  double previous = 0.0;
  for (std::size_t n : {8u, 16u, 32u}) {
    const Grid3 grid = Grid3::centered(2.0 / double(n), {n, n, n});
    ComplexVectorField e{grid, omega, std::vector<CVec3>(grid.size())};
    for (std::size_t v = 0; v < grid.size(); ++v)
      e.values[v] = CVec3(a * std::exp(cplx(0.0, -omega * grid.center(v)[2] / c)), 0.0, 0.0);
    const auto b = magnetic_field(e, c);
    double err = 0.0;
    for (std::size_t v = 0; v < grid.size(); ++v)
      err = std::max(err, (b.values[v] - CVec3(0.0, -e.values[v][0], 0.0)).norm());
    if (previous > 0.0) {
      INFO("n = " << n << ", error " << err << ", previous " << previous);
      CHECK(err < 0.3 * previous);
    }
    previous = err;
  }
  const Grid3 thin = Grid3::centered(0.5, {2, 4, 4});
  CHECK_THROWS_AS(grid_curl(ComplexVectorField{thin, 1.0, std::vector<CVec3>(thin.size())}), PreconditionError);
}

TEST_CASE("absorption estimate") {
  const auto lat = FrequencyLattice::uniform(0.5, 9);
  const Grid3 grid = Grid3::centered(0.25, {12, 12, 12});
  const Ball ball{Vec3(0.1, 0.0, -0.1), 0.8};
  const double nu = 2.0;
  const std::size_t m = *lat.find(nu);

  CHECK(absorption_estimate(SusceptibilityField::zeros(grid, lat), ball, 1.0, nu) == 0.0);

  const double r0 = 0.37;
  std::vector<cplx> v(grid.size() * lat.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) v[m * grid.size() + i] = cplx(r0, 0.9);
  const SusceptibilityField constant(grid, lat, v);
  const double h3 = grid.voxel_volume();
  std::size_t count = 0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if ((grid.center(i) - ball.center).norm() <= ball.radius) ++count;
  const double volume = double(count) * h3;
  CHECK(ball_volume(grid, ball) == doctest::Approx(volume));
  const double s_minus = 0.6;
  const double est = absorption_estimate(constant, ball, s_minus, nu);
  CHECK(est == doctest::Approx(volume * volume * r0 / s_minus).epsilon(1e-12));
  CHECK(absorption_estimate(constant, ball, 2.0 * s_minus, nu) == doctest::Approx(0.5 * est).epsilon(1e-14));

  // Linear in Re F_t mu.
  std::vector<cplx> twice(v);
  for (auto& x : twice) x *= 2.0;
  CHECK(absorption_estimate(SusceptibilityField(grid, lat, twice), ball, s_minus, nu) ==
        doctest::Approx(2.0 * est).epsilon(1e-14));

  CHECK_THROWS_AS(absorption_estimate(constant, ball, 0.0, nu), PreconditionError);
  CHECK_THROWS_AS(absorption_estimate(constant, Ball{Vec3(1.2, 0.0, 0.0), 0.8}, 1.0, nu), PreconditionError);
}

TEST_CASE("sphere flux and scattering estimate") {
  const Ball ball{Vec3(0.05, -0.02, 0.0), 0.7};
  SUBCASE("discrete divergence theorem") {
    const Grid3 grid = Grid3::centered(0.1, {20, 20, 20});
    const std::vector<Vec3> constant(grid.size(), Vec3(0.3, -1.0, 2.0));
    CHECK(std::abs(sphere_flux(grid, constant, ball)) < 1e-13);
    // S = x - center has divergence 3: flux = 3 |B| exactly on the voxel set.
    std::vector<Vec3> linear(grid.size());
    for (std::size_t v = 0; v < grid.size(); ++v) linear[v] = grid.center(v) - ball.center;
    CHECK(sphere_flux(grid, linear, ball) == doctest::Approx(3.0 * ball_volume(grid, ball)).epsilon(1e-12));
    CHECK(scattering_estimate(grid, linear, ball, 2.0) ==
          doctest::Approx(ball_volume(grid, ball) / 2.0 * 3.0 * ball_volume(grid, ball)).epsilon(1e-12));
    std::vector<Vec3> unit(grid.size(), Vec3(0.0, 0.0, 1.0));
    CHECK(incident_rate(grid, unit, ball) == doctest::Approx(1.0));
    CHECK_THROWS_AS(scattering_estimate(grid, linear, ball, 0.0), PreconditionError);
  }

  SUBCASE("surface error against the true sphere is O(h)") {
    // Radial unit-normal field: the true flux is the sphere area.
    const double area = 4.0 * kPi * ball.radius * ball.radius;
    for (std::size_t n : {16u, 32u}) {
      const Grid3 grid = Grid3::centered(1.6 / double(n - 1), {n, n, n});
      std::vector<Vec3> s(grid.size(), Vec3::Zero());
      for (std::size_t v = 0; v < grid.size(); ++v) {
        const Vec3 r = grid.center(v) - ball.center;
        if (r.norm() > 0.0) s[v] = r / r.norm();
      }
      const double flux = sphere_flux(grid, s, ball);
      INFO("n = " << n << ", relative error " << std::abs(flux - area) / area);
      CHECK(std::abs(flux - area) <= 5.0 * grid.spacing() / ball.radius * area);
    }
  }
}
