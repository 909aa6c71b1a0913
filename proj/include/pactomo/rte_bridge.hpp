#pragma once

#include "pactomo/forward_maxwell.hpp"

namespace pactomo {

/// Radiative-transfer coefficients per voxel.
struct RTEParams {
  Grid3 grid;
  std::vector<double> mu_a;    ///< absorption coefficient, >= 0
  std::vector<double> mu_s;    ///< scattering coefficient, >= 0
  std::vector<double> theta1;  ///< first anisotropy moment

  static RTEParams constant(const Grid3& grid, double mu_a, double mu_s, double theta1);
};

/// [3 (mu_a + (1 - theta1 / 3) mu_s)]^-1 at `voxel`; throws when the bracket
/// is not positive.
double diffusion_coefficient(const RTEParams& p, std::size_t voxel);

/// p0 = gamma mu_a fluence voxelwise; the fluence is an input.
std::vector<double> rte_initial_pressure(const GruneisenField& gamma, const RTEParams& p,
                                         std::span<const double> fluence);

/// F_t B from the curl of F_t E: (-i omega / c) F_t B = -curl F_t E.
CVec3 magnetic_from_curl(const CVec3& curl_e, double omega, double c = kDefaultLightSpeed);

/// curl of a sampled field: central differences inside, second-order
/// one-sided differences on the faces. Needs at least 3 points per axis.
std::vector<CVec3> grid_curl(const ComplexVectorField& field);

/// F_t B on the grid from F_t E through grid_curl.
ComplexVectorField magnetic_field(const ComplexVectorField& e, double c = kDefaultLightSpeed);

/// (c / 8 pi) Re(F_t E x conj F_t B).
Vec3 poynting_time_averaged(const CVec3& e, const CVec3& b, double c = kDefaultLightSpeed);

struct Ball {
  Vec3 center;
  double radius;
};

/// Voxels whose centers lie in the closed ball. Throws unless the ball fits
/// inside the grid's bounding box of voxel centers.
std::vector<std::size_t> ball_voxels(const Grid3& grid, const Ball& ball);

/// |B| = voxel count times spacing^3.
double ball_volume(const Grid3& grid, const Ball& ball);

/// (|B| / S^-) int_B Re F_t mu(nu, x) dx by voxel quadrature.
double absorption_estimate(const SusceptibilityField& medium, const Ball& ball,
                           double incident_flux, double nu);

/// (1 / |B|) int_B |S^-(x)| dx by voxel quadrature.
double incident_rate(const Grid3& grid, std::span<const Vec3> s_minus, const Ball& ball);

/// Outward flux of S through the staircase surface of the voxelized ball:
/// every face between an inside and an outside voxel contributes
/// h^2 <S_face, n> with S_face the mean of the two voxel values. This is the
/// discrete divergence theorem of the voxel set; against the true sphere the
/// surface error is O(h).
double sphere_flux(const Grid3& grid, std::span<const Vec3> s, const Ball& ball);

/// (|B| / S^-) times the outward flux of the scattered Poynting field S^+.
double scattering_estimate(const Grid3& grid, std::span<const Vec3> s_plus, const Ball& ball,
                           double incident_flux);

}  // namespace pactomo
