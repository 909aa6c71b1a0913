#include "pactomo/pulse.hpp"

#include "pactomo/error.hpp"

#include <cmath>

namespace pactomo {

namespace {

constexpr int kBandQuadrature = 4096;

}  // namespace

PulseSpectrum::PulseSpectrum(const Params& params) : p_(params), norm_(1.0) {
  if (!(p_.center > 0.0)) throw PreconditionError("PulseSpectrum: center frequency must be positive");
  if (!(p_.half_width > 0.0) || !(p_.half_width < p_.center))
    throw PreconditionError("PulseSpectrum: half width must satisfy 0 < eps < nu");
  if (std::abs(p_.polarization.norm() - 1.0) > 1e-12 || p_.polarization[2] != 0.0)
    throw PreconditionError("PulseSpectrum: polarization must be a unit vector with eta_3 = 0");
  if (p_.amplitude == cplx(0.0)) throw PreconditionError("PulseSpectrum: zero amplitude");

  // eps * int_{-1}^{1} b(s)^2 ds, by the trapezoid rule (spectrally accurate
  // for these compactly supported smooth envelopes).
  const int n = 20000;
  double sum = 0.0;
  for (int q = 1; q < n; ++q) {
    const double b = envelope(-1.0 + 2.0 * q / n);
    sum += b * b;
  }
  const double energy = p_.half_width * sum * (2.0 / n);
  norm_ = std::sqrt(0.5 / energy);
}

double PulseSpectrum::envelope(double s) const {
  if (std::abs(s) >= 1.0) return 0.0;
  switch (p_.shape) {
    case PulseShape::raised_cosine: {
      const double c = std::cos(0.5 * kPi * s);
      return c * c;
    }
    case PulseShape::smooth_bump:
      return std::exp(1.0 - 1.0 / (1.0 - s * s));
    case PulseShape::gaussian: {
      const double edge = std::exp(-18.0);
      return (std::exp(-18.0 * s * s) - edge) / (1.0 - edge);
    }
  }
  return 0.0;
}

bool PulseSpectrum::in_band(double omega) const {
  return std::abs(std::abs(omega) - p_.center) < p_.half_width;
}

cplx PulseSpectrum::operator()(double omega) const {
  const double s = (std::abs(omega) - p_.center) / p_.half_width;
  const double b = envelope(s);
  if (b == 0.0) return 0.0;
  const cplx gain = omega >= 0.0 ? p_.amplitude : std::conj(p_.amplitude);
  return norm_ * b * gain * std::polar(1.0, omega * p_.delay);
}

std::vector<cplx> PulseSpectrum::sample(const FrequencyLattice& lattice) const {
  std::vector<cplx> out(lattice.size());
  for (std::size_t m = 0; m < lattice.size(); ++m) out[m] = (*this)(lattice[m]);
  return out;
}

double PulseSpectrum::time_domain(double t) const {
  // f(t) = (1/pi) Re int_0^inf F f(w) e^{-i w t} dw
  const double lo = p_.center - p_.half_width;
  const double dw = 2.0 * p_.half_width / kBandQuadrature;
  cplx sum = 0.0;
  for (int q = 1; q < kBandQuadrature; ++q) {
    const double w = lo + q * dw;
    sum += (*this)(w) * std::polar(1.0, -w * t);
  }
  return (sum * dw).real() / kPi;
}

double PulseSpectrum::temporal_extent(double relative_threshold) const {
  const double peak = std::abs(time_domain(p_.delay));
  const double step = kPi / (4.0 * (p_.center + p_.half_width));
  // Scan outward; the envelope decays monotonically apart from carrier
  // oscillation, so require a long run of sub-threshold samples.
  const double max_span = 2000.0 * kPi / p_.half_width;
  double last_above = 0.0;
  for (double tau = 0.0; tau < max_span; tau += step) {
    const double a = std::max(std::abs(time_domain(p_.delay + tau)),
                              std::abs(time_domain(p_.delay - tau)));
    if (a > relative_threshold * peak) last_above = tau;
    if (tau - last_above > 8.0 * kPi / p_.half_width) break;
  }
  return last_above + step;
}

PulseSpectrum PulseSpectrum::scaled(cplx factor) const {
  Params q = p_;
  q.amplitude *= factor;
  return PulseSpectrum(q);
}

}  // namespace pactomo
