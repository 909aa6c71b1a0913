#pragma once

#include "pactomo/oct_detector.hpp"

#include <filesystem>
#include <functional>

namespace pactomo {

/// p~(nu, x) = 2 pi p0_nu(x) on a grid for each illumination center nu,
/// nu-major.
struct PATRecord {
  Grid3 grid;
  std::vector<double> frequencies;
  std::vector<double> values;

  std::span<const double> slice(std::size_t m) const {
    return {values.data() + m * grid.size(), grid.size()};
  }
};

/// (1/2 pi) int F_t mu(omega) |F_t E(omega)|^2 domega, trapezoid over the
/// lattice. With symmetric closure the stored omega >= 0 half stands for the
/// full line (conjugate extension); otherwise the lattice is summed as given.
/// Throws when the imaginary residual exceeds `imag_tol` relative.
double absorbed_energy_spectral(const FrequencyLattice& lattice, std::span<const CVec3> field,
                                std::span<const cplx> mu, double imag_tol = 1e-10);

/// int int mu(tau) <E(t), E(t - tau)> dtau dt for a real field sampled on one
/// full period of a band-limited periodic signal, evaluated through the
/// discrete convolution theorem. `mu_hat` is F_t mu at signed frequencies.
/// Throws when the samples do not resolve the band (energy in the Nyquist
/// bin above `nyquist_tol` relative).
double absorbed_energy_time(const TimeSeries& e, const std::function<cplx(double)>& mu_hat,
                            double nyquist_tol = 1e-12);

struct PressureOptions {
  FieldModel model = FieldModel::incident;
  double c = kDefaultLightSpeed;
  double solver_tol = 1e-10;
  std::size_t workers = 1;
};

/// p~(nu, x) = 2 pi gamma(x) absorbed_energy_spectral(x) with the field of
/// `options.model` on every lattice frequency in the pulse band.
std::vector<double> initial_pressure(const SusceptibilityField& medium, const GruneisenField& gamma,
                                     const PulseSpectrum& pulse, const PressureOptions& options = {});

/// p~(nu, x) = gamma(x) Re F_t mu(nu, x).
std::vector<double> narrowband_pressure(const SusceptibilityField& medium,
                                        const GruneisenField& gamma, double nu);

/// Real volume with the illumination centers as frequency list.
void write_pat_record(const std::filesystem::path& stem, const PATRecord& record);
PATRecord read_pat_record(const std::filesystem::path& path);

}  // namespace pactomo
