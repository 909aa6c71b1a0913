#pragma once

#include "pactomo/medium.hpp"
#include "pactomo/pulse.hpp"

#include <memory>

namespace pactomo {

/// F_t E(omega, .) sampled at voxel centers.
struct ComplexVectorField {
  Grid3 grid;
  double frequency;
  std::vector<CVec3> values;
};

struct FarFieldSample {
  double frequency;
  Vec3 direction;
  CVec3 value;
};

/// F_t of the illuminating wave f(t + x_3/c) eta: F f(omega) exp(-i omega x_3 / c) eta.
CVec3 incident_plane_wave(const PulseSpectrum& pulse, double omega, const Vec3& x,
                          double c = kDefaultLightSpeed);

/// theta x (theta x eta) = theta <theta, eta> - eta.
Vec3 double_cross(const Vec3& theta, const Vec3& eta);

/// Throws unless |theta| = 1 within 1e-12 and theta_3 > 0.
void check_detector_direction(const Vec3& theta);

/// Volume scattering operator of the frequency-domain integral equation,
///   (T u)(x) = (grad div + omega^2/c^2) int i e^{i omega |x-y|/c} / (omega |x-y|) u(y) dy,
/// discretized by midpoint quadrature over voxels and applied as an FFT
/// circular convolution on a grid zero-padded to twice the size per axis.
/// The grad-div acts analytically on the kernel; the singular self voxel is
/// integrated exactly over the volume-equivalent ball of radius
/// spacing * (3 / (4 pi))^{1/3}.
class ScatteringOperator {
 public:
  ScatteringOperator(const Grid3& grid, double omega, double c = kDefaultLightSpeed);
  ~ScatteringOperator();
  ScatteringOperator(ScatteringOperator&&) noexcept;
  ScatteringOperator& operator=(ScatteringOperator&&) noexcept;

  std::vector<CVec3> apply(std::span<const CVec3> u) const;

  const Grid3& grid() const;
  double omega() const;

  /// Dyadic kernel entry between distinct voxels separated by r (includes
  /// the voxel volume); exposed for tests.
  static Eigen::Matrix3cd kernel(const Vec3& r, double omega, double c, double voxel_volume);
  /// Ball-integrated self term (times the identity).
  static cplx self_term(double omega, double c, double spacing);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LippmannSchwingerOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 500;
  /// Fall back to restarted GMRES when the fixed-point map stalls.
  bool gmres_fallback = true;
  double c = kDefaultLightSpeed;
};

struct LippmannSchwingerReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool used_gmres = false;
};

/// Total field F_t E(omega, .) on the medium grid, the fixed point of
///   E = E0 + T(F_t mu E).
/// Throws ConvergenceError carrying the last residual when neither the
/// fixed-point iteration nor the fallback reaches `tol`.
ComplexVectorField lippmann_schwinger_solve(const SusceptibilityField& medium,
                                            const PulseSpectrum& pulse, double omega,
                                            const LippmannSchwingerOptions& options = {},
                                            LippmannSchwingerReport* report = nullptr);

/// Which simulated field enters an experiment.
enum class FieldModel { incident, born, full };

/// Field on the grid under `model`: E0, the Born field, or the
/// Lippmann-Schwinger solution at tolerance `solver_tol`.
ComplexVectorField simulate_field(const SusceptibilityField& medium, const PulseSpectrum& pulse,
                                  double omega, FieldModel model, double c = kDefaultLightSpeed,
                                  double solver_tol = 1e-10);

/// Single-scattering field E0 + T(F_t mu E0) on the grid.
ComplexVectorField born_field(const SusceptibilityField& medium, const PulseSpectrum& pulse,
                              double omega, double c = kDefaultLightSpeed);

/// Scattered field T(F_t mu E)(x) at a point x away from every voxel center
/// (typically outside the grid), by direct summation of the dyadic kernel.
CVec3 scattered_field_at(const SusceptibilityField& medium, const ComplexVectorField& field,
                         const Vec3& x, double c = kDefaultLightSpeed);

/// Same with an arbitrary source density s(y) = F_t mu E on the grid.
CVec3 radiate(const Grid3& grid, std::span<const CVec3> source, double omega, const Vec3& x,
              double c = kDefaultLightSpeed);

/// int e^{-i (nu/c) <theta + e_3, y>} F_t mu(nu, y) dy by midpoint quadrature.
cplx born_scattering_integral(const SusceptibilityField& medium, double nu, const Vec3& theta,
                              double c = kDefaultLightSpeed);

/// Born far field at R theta:
///   F f(nu) [ e^{-i nu R theta_3/c} eta - (i nu e^{i nu R/c} / (R c^2)) theta x theta x eta * integral ].
FarFieldSample born_far_field(const SusceptibilityField& medium, const PulseSpectrum& pulse,
                              double nu, const Vec3& theta, double R,
                              double c = kDefaultLightSpeed);

/// Far field at R theta generated by a full total-field solution: the Born
/// formula with the incident field inside the integral replaced by `field`.
FarFieldSample far_field_from_solution(const SusceptibilityField& medium,
                                       const ComplexVectorField& field, const PulseSpectrum& pulse,
                                       const Vec3& theta, double R, double c = kDefaultLightSpeed);

}  // namespace pactomo
