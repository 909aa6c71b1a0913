#pragma once

#include "pactomo/medium.hpp"

#include <functional>

namespace pactomo {

/// Time-domain source of the free-space wave equation for e, given through
/// its forcing term grad rho + (1/c^2) d/dt j and a ball containing the
/// support of the forcing for all times.
struct RetardedSource {
  std::function<Vec3(double t, const Vec3& y)> forcing;
  Vec3 support_center = Vec3::Zero();
  double support_radius = 0.0;
};

struct RetardedOracleOptions {
  double c = kDefaultLightSpeed;
  double rel_tol = 1e-9;
  double abs_tol = 1e-14;
  std::size_t max_depth = 40;
  /// Gauss-Legendre nodes in the polar angle of the cap and trapezoid nodes
  /// in the azimuth.
  std::size_t polar_nodes = 32;
  std::size_t azimuth_nodes = 32;
};

/// e(t, x) = e0(t, x) - int_{B_ct(x)} f(t - |y-x|/c, y) / |y-x| dy, the
/// retarded solution with zero initial data plus the homogeneous part e0.
/// The ball integral runs over spherical shells around x: adaptive
/// Gauss-Kronrod in the radius, fixed product rule over the cap of each
/// shell that meets the support ball. Throws ConvergenceError carrying the
/// error bound when the radial quadrature does not reach its tolerance.
Vec3 retarded_field_oracle(const RetardedSource& source, double t, const Vec3& x,
                           const RetardedOracleOptions& options = {},
                           const std::function<Vec3(double, const Vec3&)>& e0 = {});

/// Gaussian blob current j(t, y) = P'(t) G(y) u with P(t) = exp(-(t-t0)^2 / (2 tau^2)),
/// G(y) = exp(-|y-y0|^2 / (2 sigma^2)) and unit direction u. The charge
/// density follows from continuity, rho = -P(t) u . grad G.
struct GaussianBlobCurrent {
  Vec3 center = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double width = 0.25;       // sigma
  double pulse_width = 0.4;  // tau
  double pulse_time = 3.0;   // t0

  /// grad rho + (1/c^2) d/dt j.
  Vec3 forcing(double t, const Vec3& y, double c = kDefaultLightSpeed) const;
  /// F_t j(omega, y).
  CVec3 current_spectrum(double omega, const Vec3& y) const;
  /// Source description with the support truncated at `sigmas` widths.
  RetardedSource source(double c = kDefaultLightSpeed, double sigmas = 6.0) const;
};

}  // namespace pactomo
