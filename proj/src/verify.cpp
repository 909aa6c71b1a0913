#include "pactomo/verify.hpp"

#include "pactomo/error.hpp"
#include "pactomo/inversion.hpp"
#include "pactomo/retarded_oracle.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace pactomo {

namespace {

PulseSpectrum pulse(double center, double half_width, const Vec3& eta,
                    PulseShape shape = PulseShape::gaussian, cplx amplitude = 1.0,
                    double delay = 0.0) {
  PulseSpectrum::Params p;
  p.center = center;
  p.half_width = half_width;
  p.polarization = eta;
  p.shape = shape;
  p.amplitude = amplitude;
  p.delay = delay;
  return PulseSpectrum(p);
}

Vec3 planar(double angle) { return Vec3(std::cos(angle), std::sin(angle), 0.0); }

CheckResult finish(std::string name, double measured, double tolerance, std::string detail = {}) {
  return {std::move(name), measured <= tolerance, measured, tolerance, std::move(detail)};
}

CheckResult failed(std::string name, double tolerance, const std::exception& e) {
  return {std::move(name), false, std::numeric_limits<double>::infinity(), tolerance,
          std::string("error: ") + e.what()};
}

// Smooth random spectrum supported on (lo, hi).
std::vector<CVec3> random_band(std::mt19937_64& rng, const FrequencyLattice& lat, double lo,
                               double hi) {
  std::normal_distribution<double> g;
  CVec3 a, b;
  for (int j = 0; j < 3; ++j) {
    a[j] = cplx(g(rng), g(rng));
    b[j] = cplx(g(rng), g(rng));
  }
  std::vector<CVec3> s(lat.size(), CVec3::Zero());
  for (std::size_t m = 0; m < lat.size(); ++m) {
    const double w = lat[m];
    if (w <= lo || w >= hi) continue;
    const double x = (w - lo) / (hi - lo);
    s[m] = std::pow(std::sin(kPi * x), 2) * (a + b * std::cos(3.0 * kPi * x));
  }
  return s;
}

double bump(const Vec3& y, const Vec3& center, double radius) {
  const double r = (y - center).norm() / radius;
  return r < 1.0 ? std::pow(std::cos(0.5 * kPi * r), 2) : 0.0;
}

// Two-material p~ on a small grid: Lorentzian profile times bump plus a
// weaker second material.
PATRecord two_material_record(const Grid3& grid, const std::vector<double>& freqs) {
  const LorentzOscillator first{1.0, 2.0, 0.5}, second{0.8, 3.0, 0.7};
  PATRecord rec{grid, freqs, std::vector<double>(freqs.size() * grid.size(), 0.0)};
  for (std::size_t m = 0; m < freqs.size(); ++m)
    for (std::size_t v = 0; v < grid.size(); ++v) {
      const Vec3 y = grid.center(v);
      rec.values[m * grid.size() + v] =
          first.response(freqs[m]).real() * bump(y, Vec3(0.1, 0.0, 0.0), 0.6) +
          0.5 * second.response(freqs[m]).real() * bump(y, Vec3(-0.2, 0.1, 0.1), 0.5);
    }
  return rec;
}

struct FredholmFixture {
  MaterialSplit split;
  ConeSampling cone;
};

FredholmFixture fredholm_fixture() {
  const Grid3 grid = Grid3::centered(0.5, {6, 6, 6});
  std::vector<double> freqs;
  for (int m = 1; m <= 64; ++m) freqs.push_back(0.125 * m);
  auto split = material_split(two_material_record(grid, freqs));
  std::vector<std::size_t> excluded;
  for (std::size_t m = 0; m < freqs.size(); ++m)
    if (m != 11 && m != 15 && m != 19) excluded.push_back(m);
  auto cone = make_cone_sampling(freqs, cap_directions(10, 0.6), cap_area(0.6) / 10.0, 1.0, excluded);
  return {std::move(split), std::move(cone)};
}

Eigen::VectorXcd random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd x(Eigen::Index(n), 1);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = cplx(g(rng), g(rng));
  return x;
}

}  // namespace

std::string format_check(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s measured=%.3e tolerance=%.3e", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.measured, r.tolerance);
  std::string out = buf;
  if (!r.detail.empty()) out += " " + r.detail;
  return out;
}

CheckResult check_oct_linearity_suite(std::size_t n) {
  const double tol = 1e-8;
  try {
    const Grid3 grid = Grid3::centered(2.0 / double(n), {n, n, n});
    const auto lat = FrequencyLattice::uniform(0.1, 41);
    const LorentzInclusion inc[2] = {{Vec3(0.1, -0.1, 0.0), 0.5, 0.5, 2.5, 0.8},
                                     {Vec3(-0.3, 0.3, 0.2), 0.3, 0.3, 1.8, 0.5}};
    const auto medium = build_lorentzian_phantom(grid, lat, inc);
    const std::vector<Vec3> points = {Vec3(0.0, 0.0, 30.0), Vec3(3.0, -2.0, 30.0),
                                      Vec3(-5.0, 4.0, 30.0), Vec3(6.0, 6.0, 30.0)};
    const std::array<std::array<PulseSpectrum, 3>, 3> configs = {{
        {pulse(2.0, 0.3, Vec3::UnitX(), PulseShape::raised_cosine),
         pulse(2.0, 0.3, Vec3::UnitY(), PulseShape::smooth_bump),
         pulse(2.0, 0.3, planar(0.9273), PulseShape::gaussian)},
        {pulse(1.8, 0.4, planar(0.9273)), pulse(2.2, 0.5, planar(2.4981)),
         pulse(2.0, 0.25, Vec3::UnitX(), PulseShape::raised_cosine)},
        {pulse(2.5, 0.5, planar(0.3), PulseShape::gaussian, cplx(0.5, 1.0), 0.7),
         pulse(2.5, 0.5, planar(1.2), PulseShape::smooth_bump, cplx(-1.2, 0.1)),
         pulse(2.4, 0.4, Vec3::UnitY())},
    }};
    double worst = 0.0;
    std::size_t evaluations = 0;
    for (const auto& c : configs) {
      const auto rep = check_linearity(medium, c, points, FieldModel::born);
      worst = std::max(worst, rep.max_violation);
      evaluations += rep.evaluations;
    }
    return finish("oct_linearity", worst, tol,
                  "grid=" + std::to_string(n) + "^3 evaluations=" + std::to_string(evaluations));
  } catch (const std::exception& e) {
    return failed("oct_linearity", tol, e);
  }
}

CheckResult check_born_scaling() {
  const double tol = 0.15;
  try {
    const Grid3 grid = Grid3::centered(0.2, {10, 10, 10});
    const auto lat = FrequencyLattice::uniform(0.5, 8);
    const double nu = 2.0, R = 100.0;
    const auto f = pulse(nu, 0.5, planar(0.9273));
    const std::vector<Vec3> dirs = {Vec3::UnitZ(), Vec3(0.3, 0.1, 0.9).normalized(),
                                    Vec3(-0.2, 0.4, 0.8).normalized()};
    std::vector<double> la, lg;
    std::string detail = "gaps:";
    for (double a : {0.02, 0.04, 0.08, 0.16}) {
      const LorentzInclusion inc{Vec3(0.05, 0.0, -0.05), 0.6, a, 2.5, 0.8};
      const auto medium = build_lorentzian_phantom(grid, lat, std::span(&inc, 1));
      LippmannSchwingerOptions opt;
      opt.tol = 1e-12;
      const auto e = lippmann_schwinger_solve(medium, f, nu, opt);
      double num = 0.0, den = 0.0;
      for (const auto& th : dirs) {
        const cplx hb = h_tilde(born_far_field(medium, f, nu, th, R).value, f, nu, th, R).value;
        const cplx hl = h_tilde(far_field_from_solution(medium, e, f, th, R).value, f, nu, th, R).value;
        num += std::norm(hl - hb);
        den += std::norm(hb);
      }
      const double gap = std::sqrt(num / den);
      la.push_back(std::log(a));
      lg.push_back(std::log(gap));
      char buf[32];
      std::snprintf(buf, sizeof buf, " %.3e", gap);
      detail += buf;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < la.size(); ++i) {
      mx += la[i] / double(la.size());
      my += lg[i] / double(la.size());
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < la.size(); ++i) {
      sxy += (la[i] - mx) * (lg[i] - my);
      sxx += (la[i] - mx) * (la[i] - mx);
    }
    const double slope = sxy / sxx;
    char buf[48];
    std::snprintf(buf, sizeof buf, " slope=%.4f", slope);
    return finish("born_scaling", std::abs(slope - 1.0), tol, detail + buf);
  } catch (const std::exception& e) {
    return failed("born_scaling", tol, e);
  }
}

CheckResult check_retarded_oracle(std::size_t probes) {
  const double tol = 0.01;
  try {
    const GaussianBlobCurrent blob;
    const auto src = blob.source();
    const std::vector<Vec3> all = {Vec3(1.2, -2.0, 1.5), Vec3(-2.5, 0.5, 2.0), Vec3(0.4, 1.8, -2.6)};
    const std::vector<double> omegas = {2.0, 1.5, 2.5};
    const Grid3 g = Grid3::centered(0.05, {61, 61, 61});
    RetardedOracleOptions opt;
    opt.rel_tol = 1e-7;
    double worst = 0.0;
    for (std::size_t p = 0; p < std::min<std::size_t>(probes, all.size()); ++p) {
      const Vec3& x = all[p];
      const double omega = omegas[p];
      const double d = x.norm();
      const double t0 = blob.pulse_time + d - src.support_radius - 6.0 * blob.pulse_width;
      const double t1 = blob.pulse_time + d + src.support_radius + 6.0 * blob.pulse_width;
      const double dt = 0.05;
      CVec3 time_route = CVec3::Zero();
      for (double t = t0; t <= t1; t += dt)
        time_route += (dt * std::polar(1.0, omega * t)) * retarded_field_oracle(src, t, x, opt).cast<cplx>();
      std::vector<CVec3> j(g.size());
      for (std::size_t v = 0; v < g.size(); ++v) j[v] = blob.current_spectrum(omega, g.center(v));
      const CVec3 freq_route = radiate(g, j, omega, x);
      worst = std::max(worst, (time_route - freq_route).norm() / freq_route.norm());
    }
    return finish("retarded_oracle", worst, tol, "probes=" + std::to_string(probes));
  } catch (const std::exception& e) {
    return failed("retarded_oracle", tol, e);
  }
}

CheckResult check_plancherel(std::size_t fixtures, std::uint64_t seed) {
  const double tol = 1e-8;
  try {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto lat = FrequencyLattice::uniform(0.05, 121);
    double worst = 0.0;
    for (std::size_t k = 0; k < fixtures; ++k) {
      const LorentzOscillator osc{0.2 + u(rng), 1.0 + 3.0 * u(rng), 0.2 + 0.8 * u(rng)};
      std::vector<cplx> mu(lat.size());
      for (std::size_t m = 0; m < lat.size(); ++m) mu[m] = osc.response(lat[m]);
      const double lo = 0.5 + 2.0 * u(rng);
      const double hi = lo + 0.5 + 2.0 * u(rng);
      const auto spec = random_band(rng, lat, lo, hi);
      const auto sig = BandSignal::from_lattice(lat, spec);
      const std::size_t n = 512;
      const auto e = sig.sample(-5.0 * u(rng), sig.period() / double(n), n);
      const double spectral = absorbed_energy_spectral(lat, spec, mu);
      const double timed = absorbed_energy_time(e, [&](double w) { return osc.response(w); });
      worst = std::max(worst, std::abs(timed - spectral) / std::abs(spectral));
    }
    return finish("plancherel", worst, tol, "fixtures=" + std::to_string(fixtures));
  } catch (const std::exception& e) {
    return failed("plancherel", tol, e);
  }
}

CheckResult check_kramers_kronig() {
  const double tol = 0.01;
  try {
    const LorentzOscillator osc{1.0, 2.0, 0.5};
    const auto lat = FrequencyLattice::uniform(0.0625, 257);
    std::vector<double> re(lat.size()), im(lat.size());
    for (std::size_t m = 0; m < lat.size(); ++m) {
      re[m] = osc.response(lat[m]).real();
      im[m] = osc.response(lat[m]).imag();
    }
    const auto kk = kramers_kronig(lat, re);
    const std::size_t n = lat.size(), lo = n / 10, hi = n - n / 10;
    double err = 0.0, scale = 0.0;
    for (std::size_t m = lo; m < hi; ++m) {
      err = std::max(err, std::abs(kk[m] - im[m]));
      scale = std::max(scale, std::abs(im[m]));
    }
    return finish("kramers_kronig", err / scale, tol, "lattice=0.0625x257");
  } catch (const std::exception& e) {
    return failed("kramers_kronig", tol, e);
  }
}

CheckResult check_r_cancellation() {
  const double tol = 1e-10;
  try {
    const Grid3 grid = Grid3::centered(0.25, {10, 10, 10});
    const auto lat = FrequencyLattice::uniform(0.25, 17);
    const LorentzInclusion inc{Vec3(0.1, 0.0, -0.1), 0.6, 1.0, 2.0, 0.5};
    const auto medium = build_lorentzian_phantom(grid, lat, std::span(&inc, 1));
    double worst = 0.0;
    for (double nu : {1.5, 2.0, 3.0})
      for (const Vec3& th : cap_directions(8, 0.8)) {
        const auto f = pulse(nu, 0.2, planar(0.9273));
        double R = 100.0;
        const cplx a = h_tilde(born_far_field(medium, f, nu, th, R).value, f, nu, th, R).value;
        R = 200.0;
        const cplx b = h_tilde(born_far_field(medium, f, nu, th, R).value, f, nu, th, R).value;
        worst = std::max(worst, std::abs(a - b) / std::abs(a));
      }
    return finish("r_cancellation", worst, tol, "R=100,200");
  } catch (const std::exception& e) {
    return failed("r_cancellation", tol, e);
  }
}

CheckResult check_fredholm_identity() {
  const double tol = 1e-15;
  try {
    auto fx = fredholm_fixture();
    std::fill(fx.split.residual.begin(), fx.split.residual.end(), 0.0);
    const auto h = random_vector(fx.cone.size(), 5);
    const std::vector<cplx> data(h.data(), h.data() + h.size());
    const auto r = fredholm_solve(data, fx.split, fx.cone);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      err = std::max(err, std::abs(r.gamma_hat[i] - data[i]));
      scale = std::max(scale, std::abs(data[i]));
    }
    return finish("fredholm_identity", err / scale, tol);
  } catch (const std::exception& e) {
    return failed("fredholm_identity", tol, e);
  }
}

CheckResult check_manufactured_solution(double solver_tol) {
  const double tol = 10.0 * solver_tol;
  try {
    auto fx = fredholm_fixture();
    const double norm0 = FredholmOperator(fx.split, fx.cone).norm_estimate(60);
    if (norm0 == 0.0) throw PreconditionError("manufactured solution: fixture operator vanishes");
    for (double& e : fx.split.residual) e *= 0.45 / norm0;
    const FredholmOperator op(fx.split, fx.cone);
    const double norm = op.norm_estimate(60);
    const auto gstar = random_vector(fx.cone.size(), 9);
    const Eigen::VectorXcd h = gstar + op.apply(gstar);
    FredholmOptions opt;
    opt.tol = solver_tol;
    const auto r = fredholm_solve(std::vector<cplx>(h.data(), h.data() + h.size()), fx.split, fx.cone, opt);
    const Eigen::VectorXcd got =
        Eigen::Map<const Eigen::VectorXcd>(r.gamma_hat.data(), Eigen::Index(r.gamma_hat.size()));
    const double err = op.weighted_norm(got - gstar) / op.weighted_norm(gstar);
    char buf[96];
    std::snprintf(buf, sizeof buf, "norm=%.3f iterations=%zu", norm, r.iterations);
    return finish("manufactured_solution", err, tol, buf);
  } catch (const std::exception& e) {
    return failed("manufactured_solution", tol, e);
  }
}

CheckResult check_symmetry(bool broken) {
  const double tol = 1e-12;
  try {
    const LorentzOscillator osc{0.7, 2.0, 0.6};
    const auto half = FrequencyLattice::uniform(0.1, 41);
    std::mt19937_64 rng(17);
    const auto spec = random_band(rng, half, 1.0, 3.0);
    std::vector<cplx> mu(half.size());
    for (std::size_t m = 0; m < half.size(); ++m) mu[m] = osc.response(half[m]);
    const double reference = absorbed_energy_spectral(half, spec, mu);

    std::vector<double> w;
    std::vector<CVec3> e;
    std::vector<cplx> full_mu;
    for (std::size_t m = half.size() - 1; m > 0; --m) {
      w.push_back(-half[m]);
      e.push_back(spec[m].conjugate());
      full_mu.push_back(osc.response(-half[m]));
    }
    for (std::size_t m = 0; m < half.size(); ++m) {
      w.push_back(half[m]);
      e.push_back(spec[m]);
      full_mu.push_back(mu[m]);
    }
    if (broken) full_mu[half.size() / 2] *= cplx(1.0, 0.2);
    const double explicit_sum = absorbed_energy_spectral(FrequencyLattice(w, false), e, full_mu);
    return finish("symmetry", std::abs(explicit_sum - reference) / std::abs(reference), tol);
  } catch (const std::exception& e) {
    return failed("symmetry", tol, e);
  }
}

const std::vector<std::string>& default_check_names() {
  static const std::vector<std::string> names = {
      "linearity",      "plancherel",         "kramers_kronig",        "born_scaling",
      "r_cancellation", "fredholm_identity", "manufactured_solution", "symmetry"};
  return names;
}

const std::vector<std::string>& all_check_names() {
  static const std::vector<std::string> names = [] {
    auto n = default_check_names();
    n.push_back("retarded_oracle");
    return n;
  }();
  return names;
}

std::vector<CheckResult> run_checks(const std::vector<std::string>& names, const std::string& fault) {
  const auto& known = all_check_names();
  for (const auto& n : names)
    if (std::find(known.begin(), known.end(), n) == known.end())
      throw PreconditionError("unknown check: " + n);
  if (!fault.empty() && fault != "symmetry")
    throw PreconditionError("fault injection is available for the symmetry check only");
  std::vector<CheckResult> out;
  for (const auto& n : names) {
    if (n == "linearity") out.push_back(check_oct_linearity_suite());
    else if (n == "plancherel") out.push_back(check_plancherel());
    else if (n == "kramers_kronig") out.push_back(check_kramers_kronig());
    else if (n == "born_scaling") out.push_back(check_born_scaling());
    else if (n == "r_cancellation") out.push_back(check_r_cancellation());
    else if (n == "fredholm_identity") out.push_back(check_fredholm_identity());
    else if (n == "manufactured_solution") out.push_back(check_manufactured_solution());
    else if (n == "symmetry") out.push_back(check_symmetry(fault == "symmetry"));
    else if (n == "retarded_oracle") out.push_back(check_retarded_oracle());
  }
  return out;
}

}  // namespace pactomo
