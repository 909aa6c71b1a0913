#pragma once

#include "pactomo/medium.hpp"

namespace pactomo {

enum class PulseShape {
  raised_cosine,  ///< cos^2 bump in frequency
  smooth_bump,    ///< C-infinity bump exp(1 - 1/(1 - s^2))
  gaussian,       ///< exp(-18 s^2) shifted to vanish at the band edges; near-Gaussian in time
};

/// Band-limited illumination pulse F f_nu(omega) with polarization eta.
///
/// The spectrum is supported on |omega| in [nu - eps, nu + eps] and is
/// Hermitian, so f is real. It is normalized so that the energy over the
/// stored half line omega >= 0 is 1/2 (times |amplitude|^2); the full-line
/// energy is therefore 1 and the narrowband PAT limit is gamma * Re F_t mu.
class PulseSpectrum {
 public:
  struct Params {
    double center = 1.0;
    double half_width = 0.1;
    Vec3 polarization = Vec3(1.0, 0.0, 0.0);
    PulseShape shape = PulseShape::smooth_bump;
    /// Time shift t0: f(t) -> f(t - t0).
    double delay = 0.0;
    /// Complex gain applied for omega > 0 (its conjugate for omega < 0).
    cplx amplitude = 1.0;
  };

  explicit PulseSpectrum(const Params& params);

  double center() const { return p_.center; }
  double half_width() const { return p_.half_width; }
  const Vec3& polarization() const { return p_.polarization; }
  const Params& params() const { return p_; }

  /// F f_nu(omega) at any signed frequency.
  cplx operator()(double omega) const;

  bool in_band(double omega) const;

  std::vector<cplx> sample(const FrequencyLattice& lattice) const;

  /// f(t) by quadrature of the inverse transform over the band.
  double time_domain(double t) const;

  /// Half-length of the interval around `delay` outside which |f| stays
  /// below `relative_threshold` * max|f|.
  double temporal_extent(double relative_threshold = 1e-8) const;

  /// Copy with the complex gain multiplied by `factor`.
  PulseSpectrum scaled(cplx factor) const;

 private:
  double envelope(double s) const;

  Params p_;
  double norm_;  // real amplitude giving half-line energy 1/2
};

}  // namespace pactomo
