#include "doctest.h"

#include "pactomo/error.hpp"
#include "pactomo/oct_detector.hpp"

#include <cmath>
#include <filesystem>
#include <random>

using namespace pactomo;

namespace {

PulseSpectrum make_pulse(double center, double half_width, Vec3 eta, double delay = 0.0) {
  PulseSpectrum::Params p;
  p.center = center;
  p.half_width = half_width;
  p.polarization = eta;
  p.delay = delay;
  p.shape = PulseShape::gaussian;
  return PulseSpectrum(p);
}

// Smooth random signal: a few Gaussians with random centers, widths and signs.
TimeSeries random_smooth(std::mt19937_64& rng, double t0, double dt, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TimeSeries s{t0, dt, std::vector<Vec3>(n, Vec3::Zero())};
  for (int g = 0; g < 4; ++g) {
    const double center = 2.0 + 6.0 * u(rng), width = 0.3 + 0.5 * u(rng);
    const Vec3 amp(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = (s.time(k) - center) / width;
      s.values[k] += amp * std::exp(-x * x);
    }
  }
  return s;
}

double trapezoid_sq(const TimeSeries& s, int j) {
  double sum = 0.0;
  for (std::size_t n = 0; n < s.values.size(); ++n) {
    const double w = (n == 0 || n + 1 == s.values.size()) ? 0.5 : 1.0;
    sum += w * s.values[n][j] * s.values[n][j];
  }
  return sum * s.dt;
}

}  // namespace

TEST_CASE("band signal reproduces the pulse waveform") {
  const auto pulse = make_pulse(4.0, 1.0, Vec3(1.0, 0.0, 0.0), 2.0);
  const auto lat = FrequencyLattice::uniform(0.01, 600);
  const PulseWaveform f(pulse, lat);
  CHECK(f.signal().period() == doctest::Approx(2.0 * kPi / 0.01));
  for (double t : {-1.0, 0.5, 2.0, 2.3, 4.0}) CHECK(f(t) == doctest::Approx(pulse.time_domain(t)).epsilon(1e-9).scale(1.0));
  // Periodic with period 2 pi / spacing.
  CHECK(f(2.3 + f.signal().period()) == doctest::Approx(f(2.3)).epsilon(1e-9));
}

TEST_CASE("mirror reference field") {
  const auto pulse = make_pulse(4.0, 3.0, Vec3(0.6, 0.8, 0.0));
  const auto lat = FrequencyLattice::uniform(0.01, 800);
  const PulseWaveform f(pulse, lat);
  const double z = 1.5;
  CHECK(mirror_reference_field(f, z, 0.3, Vec3(0.1, 0.2, 1.5), 1.0).isZero(0.0));
  CHECK(mirror_reference_field(f, z, 0.3, Vec3(0.1, 0.2, -4.0), 1.0).isZero(0.0));
  // Continuity across the mirror plane.
  CHECK(mirror_reference_field(f, z, 0.3, Vec3(0.0, 0.0, z + 1e-12), 1.0).norm() < 1e-9);
  // x3 = z + 10 and t = x3 - 2 z: the reflected argument is 0, the direct one 20.
  const double x3 = z + 10.0, t = x3 - 2.0 * z;
  const Vec3 v = mirror_reference_field(f, z, t, Vec3(0.0, 0.0, x3), 1.0);
  const double reflected = f(t + x3 + 2.0 * (z - x3));
  CHECK(std::abs(f(t + x3)) < 1e-6 * std::abs(reflected));
  CHECK((v - (f(t + x3) - reflected) * pulse.polarization()).norm() == 0.0);
  CHECK((v + reflected * pulse.polarization()).norm() < 1e-6 * std::abs(reflected));
}

TEST_CASE("interferometric intensity examples") {
  std::mt19937_64 rng(7);
  const TimeSeries zero{0.0, 0.01, std::vector<Vec3>(1200, Vec3::Zero())};
  CHECK(interferometric_intensity(zero, zero, 0) == 0.0);

  const TimeSeries ez = random_smooth(rng, 0.0, 0.01, 1200);
  CHECK(interferometric_intensity(zero, ez, 1) == doctest::Approx(trapezoid_sq(ez, 1)).epsilon(1e-14));

  // Disjoint supports: the cross term vanishes.
  TimeSeries a{0.0, 0.01, std::vector<Vec3>(1200, Vec3::Zero())}, b = a;
  for (std::size_t n = 0; n < 1200; ++n) {
    const double t = a.time(n);
    a.values[n] = Vec3(1.0, 0.5, 0.0) * std::exp(-std::pow((t - 3.0) / 0.2, 2));
    b.values[n] = Vec3(-0.7, 2.0, 0.0) * std::exp(-std::pow((t - 8.0) / 0.2, 2));
  }
  for (int j = 0; j < 2; ++j)
    CHECK(interferometric_intensity(a, b, j) ==
          doctest::Approx(trapezoid_sq(a, j) + trapezoid_sq(b, j)).epsilon(1e-12));

  // Only t >= 0 is integrated.
  TimeSeries shifted{-2.0, 0.01, std::vector<Vec3>(1400, Vec3::Zero())};
  for (std::size_t n = 0; n < 1400; ++n) shifted.values[n] = n < 200 ? Vec3(5.0, 5.0, 5.0) : a.values[n - 200];
  const TimeSeries zero2{-2.0, 0.01, std::vector<Vec3>(1400, Vec3::Zero())};
  CHECK(interferometric_intensity(shifted, zero2, 0) == doctest::Approx(trapezoid_sq(a, 0)).epsilon(1e-3));

  // A signal still alive at the end of the grid is rejected.
  TimeSeries late = a;
  late.values.back() = Vec3(1.0, 1.0, 1.0);
  CHECK_THROWS_AS(interferometric_intensity(late, zero, 0), PreconditionError);
  CHECK_THROWS_AS(interferometric_intensity(a, zero, 3), PreconditionError);
  TimeSeries off = a;
  off.t0 = 0.005;
  CHECK_THROWS_AS(interferometric_intensity(off, off, 0), PreconditionError);
}

TEST_CASE("effective measurement routes agree") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const TimeSeries e = random_smooth(rng, 0.0, 0.005, 2400);
    const TimeSeries ez = random_smooth(rng, 0.0, 0.005, 2400);
    for (int j = 0; j < 3; ++j) {
      const auto r = effective_measurement_routes(e, ez, j);
      const double scale = std::sqrt(trapezoid_sq(e, j) * trapezoid_sq(ez, j));
      CHECK(std::abs(r.definition - r.product) <= 1e-10 * std::max(std::abs(r.product), scale));
    }
  }
  const TimeSeries e = random_smooth(rng, 0.0, 0.005, 2400);
  const TimeSeries none{0.0, 0.005, std::vector<Vec3>(2400, Vec3::Zero())};
  CHECK(effective_measurement(e, none, 0) == 0.0);
  // E = E0: the scattered parts vanish identically.
  TimeSeries diff = e;
  for (std::size_t n = 0; n < e.values.size(); ++n) diff.values[n] = e.values[n] - e.values[n];
  CHECK(effective_measurement(diff, random_smooth(rng, 0.0, 0.005, 2400), 1) == 0.0);
}

TEST_CASE("extract_h preconditions and trivial case") {
  const auto pulse = make_pulse(10.0, 3.0, Vec3(0.6, 0.8, 0.0));
  const Vec3 xi(3.0, 2.0, 40.0);
  DepthScan zero;
  zero.z0 = -5.0;
  zero.dz = 0.025;
  zero.values[0].assign(400, 0.0);
  zero.values[1].assign(400, 0.0);
  const auto h = extract_h(zero, pulse, xi, 10.0, 1.0);
  const CVec3 e0 = incident_plane_wave(pulse, 10.0, xi, 1.0);
  CHECK(std::abs(h[0] - e0[0]) == 0.0);
  CHECK(std::abs(h[1] - e0[1]) == 0.0);
  CHECK_THROWS_AS(extract_h(zero, make_pulse(10.0, 3.0, Vec3(1.0, 0.0, 0.0)), xi, 10.0, 1.0),
                  PreconditionError);
  CHECK_THROWS_AS(extract_h(zero, pulse, xi, 14.0, 1.0), PreconditionError);  // F f(-omega) = 0
  try {
    extract_h(zero, pulse, xi, 20.0, 1.0);
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("nonzero") != std::string::npos);
  }
}

TEST_CASE("depth scan and extraction reproduce the simulated detector field") {
  const double c = 1.0, nu = 10.0;
  const Vec3 eta(0.6, 0.8, 0.0);
  const auto pulse = make_pulse(nu, 3.0, eta);
  const auto lat = FrequencyLattice::uniform(0.02, 701);  // up to 14
  const Grid3 grid = Grid3::centered(0.25, {8, 8, 8});
  const LorentzInclusion inc{Vec3(0.1, -0.1, 0.0), 0.5, 2.0, 10.0, 2.0};
  const auto medium = build_lorentzian_phantom(grid, lat, std::span(&inc, 1));
  const Vec3 xi(3.0, 2.0, 40.0);
  DetectorPlane plane{40.0, {xi}};
  CHECK_NOTHROW(plane.check_against(pulse, c));

  // Frequency-domain Born field at xi on the pulse band, then a time signal.
  std::vector<CVec3> spectrum(lat.size(), CVec3::Zero());
  CVec3 scattered_at_nu = CVec3::Zero();
  for (std::size_t m = 0; m < lat.size(); ++m) {
    if (!pulse.in_band(lat[m])) continue;
    const auto field = born_field(medium, pulse, lat[m], c);
    const CVec3 s = scattered_field_at(medium, field, xi, c);
    spectrum[m] = incident_plane_wave(pulse, lat[m], xi, c) + s;
    if (lat[m] == nu) scattered_at_nu = s;
  }
  REQUIRE(scattered_at_nu.norm() > 0.0);
  const BandSignal e_signal = BandSignal::from_lattice(lat, spectrum);
  const double dt = 0.05;
  const TimeSeries e = e_signal.sample(0.0, dt, 2001);  // [0, 100]
  const PulseWaveform f(pulse, lat);
  const auto scan = oct_depth_scan(e, f, xi, -10.0, 800, c);
  CHECK(scan.dz == doctest::Approx(0.025));

  // Spot check one depth against the generic effective measurement.
  TimeSeries ez{0.0, dt, std::vector<Vec3>(e.values.size())};
  const std::size_t k = 400;
  const double z = scan.z0 + scan.dz * double(k);
  for (std::size_t n = 0; n < ez.values.size(); ++n)
    ez.values[n] = mirror_reference_field(f, z, e.time(n), xi, c);
  CHECK(scan.values[0][k] == doctest::Approx(effective_measurement(e, ez, 0)).epsilon(1e-12));

  for (double omega : {nu - 0.5, nu, nu + 0.5}) {
    const auto m = lat.find(omega);
    REQUIRE(m.has_value());
    const auto h = extract_h(scan, pulse, xi, omega, c);
    const CVec3 e0 = incident_plane_wave(pulse, omega, xi, c);
    const CVec3 s = spectrum[*m] - e0;
    for (int j = 0; j < 2; ++j) {
      INFO("omega = " << omega << ", j = " << j);
      CHECK(std::abs((h[j] - e0[j]) - s[j]) <= 0.01 * std::abs(s[j]));
    }
  }
}

TEST_CASE("h tilde from the Born far field") {
  const double c = 1.0, nu = 3.0;
  const auto lat = FrequencyLattice::uniform(0.5, 9);
  const Grid3 grid = Grid3::centered(0.25, {8, 8, 8});
  const auto pulse = make_pulse(nu, 0.5, Vec3(0.6, 0.8, 0.0));
  const Vec3 theta = Vec3(0.3, -0.2, 1.0).normalized();

  SUBCASE("vacuum gives zero") {
    const auto vac = SusceptibilityField::zeros(grid, lat);
    const auto ff = born_far_field(vac, pulse, nu, theta, 100.0, c);
    CHECK(std::abs(h_tilde(ff.value, pulse, nu, theta, 100.0, c).value) < 1e-15);
  }

  SUBCASE("single voxel matches the one-term quadrature") {
    const std::size_t voxel = grid.index(5, 2, 4);
    const cplx w(0.3, 0.1);
    std::vector<cplx> v(grid.size() * lat.size(), 0.0);
    for (std::size_t m = 1; m < lat.size(); ++m) v[m * grid.size() + voxel] = w;
    const SusceptibilityField medium(grid, lat, v);
    const Vec3 y0 = grid.center(voxel);
    const double h3 = std::pow(0.25, 3);
    const cplx expected = w * h3 * std::exp(cplx(0.0, -(nu / c) * (theta + Vec3::UnitZ()).dot(y0)));
    for (double R : {50.0, 100.0}) {
      const auto ff = born_far_field(medium, pulse, nu, theta, R, c);
      const auto ht = h_tilde(ff.value, pulse, nu, theta, R, c);
      CHECK(std::abs(ht.value - expected) < 1e-10 * std::abs(expected));
      CHECK(ht.components_used == 2);
      CHECK(ht.spread < 1e-10 * std::abs(expected));
    }
  }

  SUBCASE("R cancels") {
    const LorentzInclusion inc{Vec3::Zero(), 0.6, 1.0, 2.0, 0.5};
    const auto medium = build_lorentzian_phantom(grid, lat, std::span(&inc, 1));
    const auto a = h_tilde(born_far_field(medium, pulse, nu, theta, 100.0, c).value, pulse, nu, theta, 100.0, c);
    const auto b = h_tilde(born_far_field(medium, pulse, nu, theta, 200.0, c).value, pulse, nu, theta, 200.0, c);
    CHECK(std::abs(a.value - b.value) <= 1e-10 * std::abs(a.value));
    CHECK(std::abs(a.value - born_scattering_integral(medium, nu, theta, c)) <= 1e-10 * std::abs(a.value));
  }

  SUBCASE("degenerate directions and preconditions") {
    const auto px = make_pulse(nu, 0.5, Vec3(1.0, 0.0, 0.0));
    // theta in the x-z plane with eta = e1: (theta x theta x eta)_2 = 0, only j = 1 usable.
    const Vec3 t2 = Vec3(0.4, 0.0, 1.0).normalized();
    const auto ht = h_tilde(CVec3::Zero(), px, nu, t2, 10.0, c);
    CHECK(ht.components_used == 1);
    CHECK_THROWS_AS(h_tilde(CVec3::Zero(), px, 0.0, t2, 10.0, c), PreconditionError);
    CHECK_THROWS_AS(h_tilde(CVec3::Zero(), px, 5.0, t2, 10.0, c), PreconditionError);
    CHECK_THROWS_AS(h_tilde(CVec3::Zero(), px, nu, Vec3(0.0, 0.0, -1.0), 10.0, c), PreconditionError);
  }
}

TEST_CASE("cap directions are deterministic and inside the aperture") {
  const auto a = cap_directions(64, 0.6, 0.3, 42);
  const auto b = cap_directions(64, 0.6, 0.3, 42);
  const auto d = cap_directions(64, 0.6, 0.3, 43);
  CHECK(a.size() == 64);
  CHECK(a == b);
  CHECK(a != d);
  for (const auto& t : a) {
    CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t[2] >= std::cos(0.6) - 1e-14);
  }
  CHECK(cap_area(kPi / 2.0 - 1e-12) == doctest::Approx(2.0 * kPi));
  CHECK_THROWS_AS(cap_directions(0, 0.5), PreconditionError);
  CHECK_THROWS_AS(cap_directions(4, 2.0), PreconditionError);
}

TEST_CASE("linearity of the detector data in the polarization") {
  const double c = 1.0;
  const auto lat = FrequencyLattice::uniform(0.25, 25);
  const Grid3 grid = Grid3::centered(0.25, {8, 8, 8});
  const LorentzInclusion inc{Vec3::Zero(), 0.5, 1.0, 3.0, 0.5};
  const auto medium = build_lorentzian_phantom(grid, lat, std::span(&inc, 1));
  const std::vector<Vec3> points = {Vec3(1.0, 2.0, 10.0), Vec3(-3.0, 0.5, 12.0)};
  const Vec3 e1(1.0, 0.0, 0.0), e2(0.0, 1.0, 0.0);

  SUBCASE("identity case") {
    const auto p = make_pulse(3.0, 1.0, e1);
    const auto r = check_linearity(medium, {p, make_pulse(3.0, 1.0, e2), p}, points, FieldModel::born, c);
    CHECK(r.c1 == doctest::Approx(1.0));
    CHECK(r.c2 == doctest::Approx(0.0));
    CHECK(r.max_violation == 0.0);
  }

  SUBCASE("Born with distinct envelopes") {
    PulseSpectrum::Params q;
    q.center = 3.25;
    q.half_width = 1.5;
    q.shape = PulseShape::raised_cosine;
    q.polarization = Vec3(1.0, 1.0, 0.0).normalized();
    q.delay = 0.7;
    const auto r = check_linearity(
        medium, {make_pulse(3.0, 2.0, e1), make_pulse(3.0, 1.75, e2, 0.3), PulseSpectrum(q)}, points,
        FieldModel::born, c);
    CHECK(r.evaluations > 0);
    CHECK(r.max_violation <= 1e-8);
  }

  SUBCASE("full field with a shared pulse") {
    const double tol = 1e-10;
    const auto r = check_linearity(
        medium,
        {make_pulse(3.0, 1.0, e1), make_pulse(3.0, 1.0, e2), make_pulse(3.0, 1.0, Vec3(1.0, 1.0, 0.0).normalized())},
        points, FieldModel::full, c, tol);
    CHECK(r.max_violation <= 10.0 * tol);
  }

  SUBCASE("parallel polarizations are rejected") {
    const auto p = make_pulse(3.0, 1.0, e1);
    CHECK_THROWS_AS(check_linearity(medium, {p, p, p}, points), PreconditionError);
  }
}

TEST_CASE("OCT record synthesis and CSV round trip") {
  const double c = 1.0;
  const auto lat = FrequencyLattice::uniform(0.5, 9);
  const Grid3 grid = Grid3::centered(0.25, {8, 8, 8});
  const LorentzInclusion inc{Vec3::Zero(), 0.5, 1.0, 2.0, 0.5};
  const auto medium = build_lorentzian_phantom(grid, lat, std::span(&inc, 1));
  const std::vector<PulseSpectrum> pulses = {make_pulse(2.0, 0.4, Vec3(0.6, 0.8, 0.0)),
                                             make_pulse(3.0, 0.4, Vec3(0.6, 0.8, 0.0))};
  const auto dirs = cap_directions(5, 0.5, 0.2, 1);
  const auto rec = synthesize_oct_record(medium, pulses, dirs, 100.0, c, 1);
  const auto rec2 = synthesize_oct_record(medium, pulses, dirs, 100.0, c, 3);
  CHECK(rec.values == rec2.values);
  CHECK(std::abs(rec.at(1, 2) - born_scattering_integral(medium, 3.0, dirs[2], c)) <
        1e-10 * std::abs(rec.at(1, 2)));

  const auto path = std::filesystem::temp_directory_path() / "pactomo_oct.csv";
  write_oct_csv(path, rec);
  const auto back = read_oct_csv(path);
  CHECK(back.frequencies == rec.frequencies);
  CHECK(back.directions == rec.directions);
  CHECK(back.values == rec.values);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_oct_csv(path), IoError);
}
