#pragma once

#include "pactomo/forward_maxwell.hpp"

#include <filesystem>
#include <functional>

namespace pactomo {

/// Uniformly sampled real signal(s) on t_n = t0 + n dt.
struct TimeSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<Vec3> values;

  double time(std::size_t n) const { return t0 + dt * double(n); }
};

/// Band-limited real signal synthesized from frequency samples on a uniform
/// half lattice: s(t) = (1/pi) Re sum_m w_m S(omega_m) e^{-i omega_m t}, the
/// trapezoid form of the inverse transform (period 2 pi / spacing).
class BandSignal {
 public:
  BandSignal(std::vector<double> omegas, std::vector<double> weights, std::vector<CVec3> spectrum);

  /// Samples of F_t E over every lattice point where `spectrum` is given.
  static BandSignal from_lattice(const FrequencyLattice& lattice, std::vector<CVec3> spectrum);

  Vec3 operator()(double t) const;
  TimeSeries sample(double t0, double dt, std::size_t count) const;
  double period() const { return period_; }

 private:
  std::vector<double> omegas_, weights_;
  std::vector<CVec3> spectrum_;
  double period_;
};

/// Time-domain realization f(t) of a pulse from its samples on a lattice.
class PulseWaveform {
 public:
  PulseWaveform(const PulseSpectrum& pulse, const FrequencyLattice& lattice);
  double operator()(double t) const { return signal_(t)[0]; }
  const PulseSpectrum& pulse() const { return pulse_; }
  const BandSignal& signal() const { return signal_; }

 private:
  PulseSpectrum pulse_;
  BandSignal signal_;
};

/// E^z(t, x) = (f(t + x3/c) - f(t + x3/c + 2 (z - x3)/c)) eta above the
/// mirror (x3 > z), zero below.
Vec3 mirror_reference_field(const PulseWaveform& f, double z, double t, const Vec3& x,
                            double c = kDefaultLightSpeed);

/// I_j = int_0^inf |E_j + E^z_j|^2 dt (trapezoid). `j` is 0-based. Both
/// series must share the time grid, start at or before t = 0 with 0 on the
/// grid, and decay to `coverage_tol` of their peak at the far end.
double interferometric_intensity(const TimeSeries& e, const TimeSeries& ez, int j,
                                 double coverage_tol = 1e-6);

struct EffectiveMeasurement {
  double definition;  ///< (I_j - int |E_j|^2 - int |E^z_j|^2) / 2
  double product;     ///< int E_j E^z_j dt
};

EffectiveMeasurement effective_measurement_routes(const TimeSeries& e, const TimeSeries& ez, int j,
                                                  double coverage_tol = 1e-6);

/// I~_j = int_0^inf E_j E^z_j dt.
double effective_measurement(const TimeSeries& e, const TimeSeries& ez, int j,
                             double coverage_tol = 1e-6);

/// Uniform mirror-depth lattice z_k = z0 + k dz with I~_j(z_k) for j = 0, 1.
struct DepthScan {
  double z0 = 0.0;
  double dz = 1.0;
  std::array<std::vector<double>, 2> values;
};

/// Effective measurements of the field series `e` at detector point xi for
/// the mirror-depth lattice. The depth step must equal c dt / 2 so that
/// mirror positions shift the reference by whole samples.
DepthScan oct_depth_scan(const TimeSeries& e, const PulseWaveform& f, const Vec3& xi, double z0,
                         std::size_t depth_count, double c = kDefaultLightSpeed);

/// F_t h_j(omega, xi) for j = 0, 1 from the depth scan:
///   F_t E0_j(omega, xi) - 2 / (c eta_j F f(-omega)) int I~_j(z) e^{-i (omega/c)(2 z - xi_3)} dz.
Eigen::Vector2cd extract_h(const DepthScan& scan, const PulseSpectrum& pulse, const Vec3& xi,
                           double omega, double c = kDefaultLightSpeed,
                           double coverage_tol = 1e-4);

struct HTilde {
  cplx value;
  /// Largest deviation of a per-component estimate from the average.
  double spread;
  int components_used;
};

/// h~(nu, theta) from the far-field value F_t E(nu, R theta): the per
/// component estimates
///   (F_t E_j / F f(nu) - e^{-i nu R theta_3/c} eta_j) i R c^2 e^{-i nu R/c} / (nu (theta x theta x eta)_j)
/// averaged over j = 1, 2 where (theta x theta x eta)_j is not negligible.
HTilde h_tilde(const CVec3& far_field, const PulseSpectrum& pulse, double nu, const Vec3& theta,
               double R, double c = kDefaultLightSpeed);

/// Point detectors on the plane x3 = d.
struct DetectorPlane {
  double d;
  std::vector<Vec3> points;

  std::vector<Vec3> directions() const;
  /// Throws unless the incident pulse has left the plane by t = 0, i.e.
  /// delay + temporal extent < d / c.
  void check_against(const PulseSpectrum& pulse, double c = kDefaultLightSpeed) const;
};

/// Equal-area (Fibonacci) directions on the cap theta_3 >= cos(max_polar)
/// with optional seeded jitter in units of one cell.
std::vector<Vec3> cap_directions(std::size_t count, double max_polar, double jitter = 0.0,
                                 std::uint64_t seed = 0);

/// Area of the cap theta_3 >= cos(max_polar).
double cap_area(double max_polar);

struct LinearityReport {
  double max_violation = 0.0;
  double c1 = 0.0, c2 = 0.0;
  std::size_t evaluations = 0;
};

/// Simulates three experiments with pulses f1, f2, f3 (polarizations inside)
/// and returns the largest relative deviation of
///   F_t h^3 = sum_k c_k (F f^3 / F f^k) F_t h^k,  eta^3 = c_1 eta^1 + c_2 eta^2,
/// over all lattice frequencies where the three spectra are nonzero and all
/// detector points. h^k is the (E_1, E_2) field at the detector.
LinearityReport check_linearity(const SusceptibilityField& medium,
                                const std::array<PulseSpectrum, 3>& pulses,
                                std::span<const Vec3> detector_points,
                                FieldModel model = FieldModel::born,
                                double c = kDefaultLightSpeed, double solver_tol = 1e-12);

/// h~ on a (nu, theta) lattice, nu-major.
struct OCTRecord {
  std::vector<double> frequencies;
  std::vector<Vec3> directions;
  std::vector<cplx> values;

  cplx at(std::size_t m, std::size_t d) const { return values[m * directions.size() + d]; }
};

/// Born far field then h~ for each pulse (evaluated at its center) and direction.
OCTRecord synthesize_oct_record(const SusceptibilityField& medium,
                                std::span<const PulseSpectrum> pulses,
                                std::span<const Vec3> directions, double R,
                                double c = kDefaultLightSpeed, std::size_t workers = 1);

/// CSV with header nu,theta_x,theta_y,theta_z,re_h,im_h; rows nu-major.
void write_oct_csv(const std::filesystem::path& path, const OCTRecord& record);
OCTRecord read_oct_csv(const std::filesystem::path& path);

}  // namespace pactomo
