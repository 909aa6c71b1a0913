#include "pactomo/oct_detector.hpp"

#include "pactomo/error.hpp"
#include "pactomo/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace pactomo {

namespace {

constexpr cplx kI(0.0, 1.0);

// Index of t = 0 on the grid of `s`.
std::size_t zero_index(const TimeSeries& s) {
  if (s.t0 > 0.0) throw PreconditionError("time series must start at or before t = 0");
  const double n = -s.t0 / s.dt;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9) throw PreconditionError("t = 0 must be a sample of the time grid");
  if (std::size_t(r) >= s.values.size()) throw PreconditionError("time series ends before t = 0");
  return std::size_t(r);
}

void check_same_grid(const TimeSeries& a, const TimeSeries& b) {
  if (a.values.size() != b.values.size() || a.t0 != b.t0 || a.dt != b.dt)
    throw PreconditionError("field and reference series must share one time grid");
}

void check_coverage(const TimeSeries& s, int j, double tol, const char* what) {
  double peak = 0.0;
  for (const auto& v : s.values) peak = std::max(peak, std::abs(v[j]));
  if (peak == 0.0) return;
  if (std::abs(s.values.back()[j]) > tol * peak) {
    std::ostringstream msg;
    msg << what << ": time grid does not cover the signal support (final sample "
        << std::abs(s.values.back()[j]) << " vs peak " << peak << ")";
    throw PreconditionError(msg.str());
  }
}

void check_component(int j) {
  if (j < 0 || j > 2) throw PreconditionError("component index must be 0, 1 or 2");
}

// Trapezoid over samples n0..end of g(n).
template <class G>
double trapezoid_from(std::size_t n0, std::size_t n_end, double dt, const G& g) {
  if (n_end <= n0 + 1) return 0.0;
  double s = 0.5 * (g(n0) + g(n_end - 1));
  for (std::size_t n = n0 + 1; n + 1 < n_end; ++n) s += g(n);
  return s * dt;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

BandSignal::BandSignal(std::vector<double> omegas, std::vector<double> weights,
                       std::vector<CVec3> spectrum)
    : omegas_(std::move(omegas)), weights_(std::move(weights)), spectrum_(std::move(spectrum)),
      period_(std::numeric_limits<double>::infinity()) {
  if (omegas_.size() != weights_.size() || omegas_.size() != spectrum_.size())
    throw PreconditionError("BandSignal: size mismatch");
  if (omegas_.size() >= 2) period_ = 2.0 * kPi / (omegas_[1] - omegas_[0]);
}

BandSignal BandSignal::from_lattice(const FrequencyLattice& lattice, std::vector<CVec3> spectrum) {
  if (!lattice.symmetric_closure() || lattice[0] != 0.0 || !lattice.uniform_spacing())
    throw PreconditionError(
        "BandSignal: needs a uniform half lattice starting at omega = 0 with symmetric closure");
  if (spectrum.size() != lattice.size()) throw PreconditionError("BandSignal: size mismatch");
  std::vector<double> w = lattice.trapezoid_weights();
  std::vector<double> om = lattice.values();
  BandSignal s(std::move(om), std::move(w), std::move(spectrum));
  s.period_ = 2.0 * kPi / *lattice.uniform_spacing();
  return s;
}

Vec3 BandSignal::operator()(double t) const {
  CVec3 sum = CVec3::Zero();
  for (std::size_t m = 0; m < omegas_.size(); ++m) {
    if (spectrum_[m].isZero(0.0)) continue;
    sum += (weights_[m] * std::polar(1.0, -omegas_[m] * t)) * spectrum_[m];
  }
  return sum.real() / kPi;
}

TimeSeries BandSignal::sample(double t0, double dt, std::size_t count) const {
  TimeSeries s{t0, dt, std::vector<Vec3>(count)};
  for (std::size_t n = 0; n < count; ++n) s.values[n] = (*this)(s.time(n));
  return s;
}

namespace {

std::vector<CVec3> pulse_samples(const PulseSpectrum& pulse, const FrequencyLattice& lattice) {
  std::vector<CVec3> s(lattice.size(), CVec3::Zero());
  for (std::size_t m = 0; m < lattice.size(); ++m) s[m][0] = pulse(lattice[m]);
  return s;
}

}  // namespace

PulseWaveform::PulseWaveform(const PulseSpectrum& pulse, const FrequencyLattice& lattice)
    : pulse_(pulse), signal_(BandSignal::from_lattice(lattice, pulse_samples(pulse, lattice))) {}

Vec3 mirror_reference_field(const PulseWaveform& f, double z, double t, const Vec3& x, double c) {
  if (x[2] <= z) return Vec3::Zero();
  const double s = t + x[2] / c;
  return (f(s) - f(s + 2.0 * (z - x[2]) / c)) * f.pulse().polarization();
}

// ---------------------------------------------------------------------------

double interferometric_intensity(const TimeSeries& e, const TimeSeries& ez, int j,
                                 double coverage_tol) {
  check_component(j);
  check_same_grid(e, ez);
  const std::size_t n0 = zero_index(e);
  check_coverage(e, j, coverage_tol, "interferometric_intensity");
  check_coverage(ez, j, coverage_tol, "interferometric_intensity");
  return trapezoid_from(n0, e.values.size(), e.dt, [&](std::size_t n) {
    const double s = e.values[n][j] + ez.values[n][j];
    return s * s;
  });
}

EffectiveMeasurement effective_measurement_routes(const TimeSeries& e, const TimeSeries& ez, int j,
                                                  double coverage_tol) {
  const double total = interferometric_intensity(e, ez, j, coverage_tol);
  const std::size_t n0 = zero_index(e), n1 = e.values.size();
  auto sq = [j](const TimeSeries& s) {
    return [&s, j](std::size_t n) { return s.values[n][j] * s.values[n][j]; };
  };
  const double ee = trapezoid_from(n0, n1, e.dt, sq(e));
  const double rr = trapezoid_from(n0, n1, e.dt, sq(ez));
  const double cross = trapezoid_from(n0, n1, e.dt, [&](std::size_t n) {
    return e.values[n][j] * ez.values[n][j];
  });
  return {0.5 * (total - ee - rr), cross};
}

double effective_measurement(const TimeSeries& e, const TimeSeries& ez, int j, double coverage_tol) {
  return effective_measurement_routes(e, ez, j, coverage_tol).product;
}

DepthScan oct_depth_scan(const TimeSeries& e, const PulseWaveform& f, const Vec3& xi, double z0,
                         std::size_t depth_count, double c) {
  const std::size_t n0 = zero_index(e);
  const std::size_t nt = e.values.size();
  check_coverage(e, 0, 1e-6, "oct_depth_scan");
  check_coverage(e, 1, 1e-6, "oct_depth_scan");
  DepthScan scan;
  scan.z0 = z0;
  scan.dz = 0.5 * c * e.dt;
  const Vec3& eta = f.pulse().polarization();
  // Incident part f(t + xi3/c) and the reflected part f(t + (2 z - xi3)/c);
  // the latter at depth k is the base sequence shifted by k samples.
  std::vector<double> direct(nt), reflected(nt + depth_count);
  for (std::size_t n = n0; n < nt; ++n) direct[n] = f(e.time(n) + xi[2] / c);
  for (std::size_t n = n0; n < nt + depth_count; ++n)
    reflected[n] = f(e.t0 + e.dt * double(n) + (2.0 * z0 - xi[2]) / c);
  for (int j = 0; j < 2; ++j) {
    scan.values[j].assign(depth_count, 0.0);
    for (std::size_t k = 0; k < depth_count; ++k) {
      const double z = z0 + scan.dz * double(k);
      if (xi[2] <= z) continue;  // mirror above the detector: no reference field
      scan.values[j][k] = trapezoid_from(n0, nt, e.dt, [&](std::size_t n) {
        return e.values[n][j] * eta[j] * (direct[n] - reflected[n + k]);
      });
    }
  }
  return scan;
}

Eigen::Vector2cd extract_h(const DepthScan& scan, const PulseSpectrum& pulse, const Vec3& xi,
                           double omega, double c, double coverage_tol) {
  const cplx fneg = pulse(-omega);
  if (fneg == cplx(0.0))
    throw PreconditionError(
        "extract_h: F f(-omega) = 0; the Fourier transform of the pulse must be nonzero at "
        "every extracted frequency");
  const Vec3& eta = pulse.polarization();
  if (eta[0] == 0.0 || eta[1] == 0.0)
    throw PreconditionError("extract_h: both polarization components eta_1, eta_2 must be nonzero");
  const CVec3 e0 = incident_plane_wave(pulse, omega, xi, c);
  Eigen::Vector2cd out;
  for (int j = 0; j < 2; ++j) {
    const auto& v = scan.values[j];
    if (v.size() < 2) throw PreconditionError("extract_h: depth scan needs at least two depths");
    double peak = 0.0;
    for (double x : v) peak = std::max(peak, std::abs(x));
    if (peak > 0.0 && std::max(std::abs(v.front()), std::abs(v.back())) > coverage_tol * peak)
      throw PreconditionError("extract_h: the depth lattice does not span the support of I~");
    cplx integral = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double z = scan.z0 + scan.dz * double(k);
      const double w = (k == 0 || k + 1 == v.size()) ? 0.5 : 1.0;
      integral += w * v[k] * std::polar(1.0, -(omega / c) * (2.0 * z - xi[2]));
    }
    integral *= scan.dz;
    out[j] = e0[j] - 2.0 / (c * eta[j] * fneg) * integral;
  }
  return out;
}

HTilde h_tilde(const CVec3& far_field, const PulseSpectrum& pulse, double nu, const Vec3& theta,
               double R, double c) {
  if (!(nu > 0.0)) throw PreconditionError("h_tilde: frequency must be positive");
  check_detector_direction(theta);
  const cplx fnu = pulse(nu);
  if (fnu == cplx(0.0)) throw PreconditionError("h_tilde: F f_nu(nu) = 0");
  const Vec3& eta = pulse.polarization();
  const Vec3 dc = double_cross(theta, eta);
  const cplx incident = std::polar(1.0, -nu * R * theta[2] / c);
  const cplx factor = kI * R * c * c * std::polar(1.0, -nu * R / c) / nu;
  cplx est[2];
  int used = 0;
  cplx sum = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (std::abs(dc[j]) <= 1e-8) continue;
    est[used] = (far_field[j] / fnu - incident * eta[j]) * factor / dc[j];
    sum += est[used];
    ++used;
  }
  if (used == 0)
    throw PreconditionError(
        "h_tilde: degenerate direction, (theta x theta x eta)_j vanishes for j = 1, 2");
  const cplx avg = sum / double(used);
  double spread = 0.0;
  for (int u = 0; u < used; ++u) spread = std::max(spread, std::abs(est[u] - avg));
  return {avg, spread, used};
}

// ---------------------------------------------------------------------------

std::vector<Vec3> DetectorPlane::directions() const {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.normalized());
  return out;
}

void DetectorPlane::check_against(const PulseSpectrum& pulse, double c) const {
  if (!(d > 0.0)) throw PreconditionError("DetectorPlane: depth d must be positive");
  for (const auto& p : points)
    if (std::abs(p[2] - d) > 1e-12 * std::max(1.0, d))
      throw PreconditionError("DetectorPlane: sample point is not on the plane x3 = d");
  const double extent = pulse.temporal_extent(1e-8);
  if (pulse.params().delay + extent >= d / c) {
    std::ostringstream msg;
    msg << "DetectorPlane: the incident pulse (delay " << pulse.params().delay << ", extent "
        << extent << ") has not left the plane x3 = " << d << " by t = 0";
    throw PreconditionError(msg.str());
  }
}

double cap_area(double max_polar) { return 2.0 * kPi * (1.0 - std::cos(max_polar)); }

std::vector<Vec3> cap_directions(std::size_t count, double max_polar, double jitter,
                                 std::uint64_t seed) {
  if (count == 0) throw PreconditionError("cap_directions: count must be positive");
  if (!(max_polar > 0.0) || !(max_polar < 0.5 * kPi))
    throw PreconditionError("cap_directions: aperture must lie in (0, pi/2)");
  if (jitter < 0.0 || jitter > 0.5) throw PreconditionError("cap_directions: jitter must be in [0, 0.5]");
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  const double zmin = std::cos(max_polar);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> out(count);
  for (std::size_t n = 0; n < count; ++n) {
    double s = (double(n) + 0.5) / double(count);
    double phi = golden * double(n);
    if (jitter > 0.0) {
      s += jitter * u(rng) / double(count);
      phi += jitter * u(rng) * 2.0 * kPi / std::sqrt(double(count));
    }
    s = std::clamp(s, 0.0, 1.0);
    const double z = 1.0 - s * (1.0 - zmin);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    out[n] = Vec3(r * std::cos(phi), r * std::sin(phi), z).normalized();
  }
  return out;
}

// ---------------------------------------------------------------------------

LinearityReport check_linearity(const SusceptibilityField& medium,
                                const std::array<PulseSpectrum, 3>& pulses,
                                std::span<const Vec3> detector_points, FieldModel model, double c,
                                double solver_tol) {
  const Vec3& e1 = pulses[0].polarization();
  const Vec3& e2 = pulses[1].polarization();
  const Vec3& e3 = pulses[2].polarization();
  Eigen::Matrix2d basis;
  basis << e1[0], e2[0], e1[1], e2[1];
  if (std::abs(basis.determinant()) < 1e-6)
    throw PreconditionError("check_linearity: polarizations eta^1, eta^2 are (nearly) parallel");
  const Eigen::Vector2d coef = basis.partialPivLu().solve(Eigen::Vector2d(e3[0], e3[1]));
  LinearityReport report;
  report.c1 = coef[0];
  report.c2 = coef[1];

  const auto& lat = medium.freqs();
  for (std::size_t m = 0; m < lat.size(); ++m) {
    const double w = lat[m];
    if (w == 0.0) continue;
    std::array<cplx, 3> spec;
    bool all = true;
    for (int k = 0; k < 3; ++k) {
      spec[k] = pulses[k](w);
      all = all && spec[k] != cplx(0.0);
    }
    if (!all) continue;
    std::array<std::vector<Eigen::Vector2cd>, 3> h;
    for (int k = 0; k < 3; ++k) {
      const auto field = simulate_field(medium, pulses[k], w, model, c, solver_tol);
      for (const auto& xi : detector_points) {
        CVec3 e = incident_plane_wave(pulses[k], w, xi, c);
        if (model != FieldModel::incident) e += scattered_field_at(medium, field, xi, c);
        h[k].push_back(e.head<2>());
      }
    }
    for (std::size_t p = 0; p < detector_points.size(); ++p) {
      const Eigen::Vector2cd rhs = coef[0] * (spec[2] / spec[0]) * h[0][p] +
                                   coef[1] * (spec[2] / spec[1]) * h[1][p];
      const double den = h[2][p].norm();
      if (den == 0.0) continue;
      report.max_violation = std::max(report.max_violation, (h[2][p] - rhs).norm() / den);
      ++report.evaluations;
    }
  }
  if (report.evaluations == 0)
    throw PreconditionError("check_linearity: no lattice frequency where all three spectra are nonzero");
  return report;
}

// ---------------------------------------------------------------------------

OCTRecord synthesize_oct_record(const SusceptibilityField& medium,
                                std::span<const PulseSpectrum> pulses,
                                std::span<const Vec3> directions, double R, double c,
                                std::size_t workers) {
  OCTRecord rec;
  rec.directions.assign(directions.begin(), directions.end());
  for (const auto& p : pulses) rec.frequencies.push_back(p.center());
  rec.values.assign(pulses.size() * directions.size(), cplx(0.0));
  parallel_for(pulses.size(), workers, [&](std::size_t m) {
    const double nu = pulses[m].center();
    for (std::size_t d = 0; d < directions.size(); ++d) {
      const auto ff = born_far_field(medium, pulses[m], nu, directions[d], R, c);
      rec.values[m * directions.size() + d] = h_tilde(ff.value, pulses[m], nu, directions[d], R, c).value;
    }
  });
  return rec;
}

void write_oct_csv(const std::filesystem::path& path, const OCTRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "nu,theta_x,theta_y,theta_z,re_h,im_h\n";
  for (std::size_t m = 0; m < record.frequencies.size(); ++m)
    for (std::size_t d = 0; d < record.directions.size(); ++d) {
      const Vec3& t = record.directions[d];
      const cplx v = record.at(m, d);
      out << format_double(record.frequencies[m]) << ',' << format_double(t[0]) << ','
          << format_double(t[1]) << ',' << format_double(t[2]) << ',' << format_double(v.real())
          << ',' << format_double(v.imag()) << '\n';
    }
  if (!out) throw IoError("write failed for " + path.string());
}

OCTRecord read_oct_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "nu,theta_x,theta_y,theta_z,re_h,im_h")
    throw IoError(path.string() + ": missing or unexpected OCT header");
  OCTRecord rec;
  std::vector<std::array<double, 6>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 6> r{};
    std::istringstream ss(line);
    std::string cell;
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(ss, cell, ',')) throw IoError(path.string() + ": short row '" + line + "'");
      try {
        r[k] = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError(path.string() + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(r);
  }
  if (rows.empty()) return rec;
  for (const auto& r : rows) {
    if (rec.frequencies.empty() || rec.frequencies.back() != r[0]) rec.frequencies.push_back(r[0]);
    if (rec.frequencies.size() == 1) rec.directions.emplace_back(r[1], r[2], r[3]);
  }
  const std::size_t nd = rec.directions.size();
  if (rows.size() != nd * rec.frequencies.size())
    throw IoError(path.string() + ": rows do not form a (nu, theta) lattice");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const Vec3& t = rec.directions[i % nd];
    if (r[0] != rec.frequencies[i / nd] || r[1] != t[0] || r[2] != t[1] || r[3] != t[2])
      throw IoError(path.string() + ": rows are not nu-major over one direction list");
    rec.values.emplace_back(r[4], r[5]);
  }
  return rec;
}

}  // namespace pactomo
