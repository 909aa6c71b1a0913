#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pactomo {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = 3.14159265358979323846;

/// Speed of light in the dimensionless unit system (Gaussian units, c = 1).
inline constexpr double kDefaultLightSpeed = 1.0;

// ---------------------------------------------------------------------------
// Grid3

/// Uniform Cartesian voxel grid. Voxel (i, j, k) has center
/// origin + spacing * (i, j, k); linear index (i * ny + j) * nz + k.
class Grid3 {
 public:
  Grid3(Vec3 origin, double spacing, std::array<std::size_t, 3> dims);

  /// Grid with `dims` voxels centred on the coordinate origin.
  static Grid3 centered(double spacing, std::array<std::size_t, 3> dims);

  const Vec3& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  const std::array<std::size_t, 3>& dims() const { return dims_; }
  std::size_t size() const { return dims_[0] * dims_[1] * dims_[2]; }
  double voxel_volume() const { return spacing_ * spacing_ * spacing_; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * dims_[1] + j) * dims_[2] + k;
  }
  std::array<std::size_t, 3> unravel(std::size_t linear) const;
  Vec3 center(std::size_t i, std::size_t j, std::size_t k) const {
    return origin_ + spacing_ * Vec3(double(i), double(j), double(k));
  }
  Vec3 center(std::size_t linear) const;

  /// True when the voxel lies within `width` voxels of any face.
  bool in_boundary_layer(std::size_t linear, std::size_t width) const;

  bool operator==(const Grid3& other) const;

 private:
  Vec3 origin_;
  double spacing_;
  std::array<std::size_t, 3> dims_;
};

// ---------------------------------------------------------------------------
// FrequencyLattice

/// Strictly increasing angular frequencies. With symmetric closure the
/// lattice holds omega >= 0 only and negative frequencies are implied by
/// conjugate symmetry.
class FrequencyLattice {
 public:
  FrequencyLattice(std::vector<double> values, bool symmetric_closure = true);

  /// {0, step, 2 step, ..., count-1 steps}.
  static FrequencyLattice uniform(double step, std::size_t count);

  const std::vector<double>& values() const { return values_; }
  bool symmetric_closure() const { return symmetric_closure_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t m) const { return values_[m]; }

  /// Index of the lattice point equal to omega (relative tolerance 1e-9).
  std::optional<std::size_t> find(double omega) const;

  /// Uniform spacing, or nullopt when the lattice is not uniform.
  std::optional<double> uniform_spacing() const;

  /// Trapezoid weights over the stored values.
  std::vector<double> trapezoid_weights() const;

 private:
  std::vector<double> values_;
  bool symmetric_closure_;
};

// ---------------------------------------------------------------------------
// Causal response models. Each returns the temporal Fourier transform
// F_t mu(omega) of mu = sigma + d/dt chi for one material.

/// Lorentz oscillator susceptibility chi = s / (w0^2 - w^2 - i G w); mu = d/dt chi.
struct LorentzOscillator {
  double strength;
  double resonance;
  double damping;
  cplx response(double omega) const;
};

/// Debye relaxation chi = s / (1 - i w tau); mu = d/dt chi.
struct DebyeRelaxation {
  double strength;
  double relaxation_time;
  cplx response(double omega) const;
};

/// Drude conductivity sigma = s / (G - i w); mu = sigma.
struct DrudeConductor {
  double strength;
  double collision_rate;
  cplx response(double omega) const;
};

using ResponseModel = std::variant<LorentzOscillator, DebyeRelaxation, DrudeConductor>;

cplx evaluate_response(const ResponseModel& model, double omega);

struct Inclusion {
  Vec3 center;
  double radius;
  ResponseModel model;
  /// Multiplies the response; the single-material density profile.
  double density = 1.0;
};

// ---------------------------------------------------------------------------
// SusceptibilityField

/// Samples of F_t mu(omega, x) for every lattice frequency and voxel,
/// frequency-major.
class SusceptibilityField {
 public:
  SusceptibilityField(Grid3 grid, FrequencyLattice freqs, std::vector<cplx> values,
                      std::size_t boundary_width = 1);

  static SusceptibilityField zeros(Grid3 grid, FrequencyLattice freqs,
                                   std::size_t boundary_width = 1);

  const Grid3& grid() const { return grid_; }
  const FrequencyLattice& freqs() const { return freqs_; }
  std::size_t boundary_width() const { return boundary_width_; }
  const std::vector<cplx>& values() const { return values_; }

  cplx at(std::size_t m, std::size_t voxel) const { return values_[m * grid_.size() + voxel]; }
  std::span<const cplx> slice(std::size_t m) const {
    return {values_.data() + m * grid_.size(), grid_.size()};
  }

  /// Slice at an arbitrary signed frequency; uses conjugate symmetry for
  /// omega < 0 when the lattice has symmetric closure. Throws when omega is
  /// not a lattice point.
  std::vector<cplx> slice_at(double omega) const;

 private:
  Grid3 grid_;
  FrequencyLattice freqs_;
  std::vector<cplx> values_;
  std::size_t boundary_width_;
};

/// Real volumetric Grüneisen parameter.
struct GruneisenField {
  Grid3 grid;
  std::vector<double> values;

  static GruneisenField constant(const Grid3& grid, double value) {
    return {grid, std::vector<double>(grid.size(), value)};
  }
};

/// Phantom of (possibly overlapping) spherical inclusions; overlaps sum.
/// Throws PreconditionError when an inclusion reaches into the zero
/// boundary layer.
SusceptibilityField build_phantom(const Grid3& grid, const FrequencyLattice& freqs,
                                  std::span<const Inclusion> inclusions,
                                  std::size_t boundary_width = 1);

struct LorentzInclusion {
  Vec3 center;
  double radius;
  double strength;
  double resonance;
  double damping;
};

SusceptibilityField build_lorentzian_phantom(const Grid3& grid, const FrequencyLattice& freqs,
                                             std::span<const LorentzInclusion> inclusions,
                                             std::size_t boundary_width = 1);

struct MediumReport {
  double max_boundary_magnitude = 0.0;
  double max_symmetry_violation = 0.0;
  /// Inclusive voxel-index bounding box of nonzero samples; empty when the
  /// field vanishes.
  std::optional<std::array<std::array<std::size_t, 2>, 3>> support_box;
  bool passed = true;
};

MediumReport validate_medium(const SusceptibilityField& medium, double tolerance = 1e-12);

}  // namespace pactomo
