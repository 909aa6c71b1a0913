#include "pactomo/pat_detector.hpp"

#include "pactomo/error.hpp"
#include "pactomo/fft.hpp"
#include "pactomo/parallel.hpp"
#include "pactomo/volume_io.hpp"

#include <cmath>
#include <sstream>

namespace pactomo {

double absorbed_energy_spectral(const FrequencyLattice& lattice, std::span<const CVec3> field,
                                std::span<const cplx> mu, double imag_tol) {
  if (field.size() != lattice.size() || mu.size() != lattice.size())
    throw PreconditionError("absorbed_energy_spectral: field and medium must cover the lattice");
  const std::vector<double> w = lattice.trapezoid_weights();
  cplx total = 0.0;
  double scale = 0.0;
  for (std::size_t m = 0; m < lattice.size(); ++m) {
    const cplx term = w[m] * mu[m] * field[m].squaredNorm();
    scale += std::abs(term);
    if (!lattice.symmetric_closure()) {
      total += term;
    } else if (lattice[m] == 0.0) {
      total += 2.0 * term;  // full-line weight at the origin
    } else {
      total += 2.0 * term.real();  // omega and -omega together
    }
  }
  if (lattice.symmetric_closure()) scale *= 2.0;
  if (std::abs(total.imag()) > imag_tol * scale) {
    std::ostringstream msg;
    msg << "absorbed_energy_spectral: imaginary residual " << total.imag()
        << " violates Hermitian symmetry of the integrand";
    throw PreconditionError(msg.str());
  }
  return total.real() / (2.0 * kPi);
}

double absorbed_energy_time(const TimeSeries& e, const std::function<cplx(double)>& mu_hat,
                            double nyquist_tol) {
  const std::size_t n = e.values.size();
  if (n < 4) throw PreconditionError("absorbed_energy_time: too few samples");
  if (!(e.dt > 0.0)) throw PreconditionError("absorbed_energy_time: time step must be positive");
  const double period = e.dt * double(n);
  std::vector<double> power(n, 0.0);
  std::vector<cplx> buf(n);
  for (int j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < n; ++k) buf[k] = e.values[k][j];
    fft1d(buf, true);  // sum_n x_n e^{+2 pi i n k / N}
    for (std::size_t k = 0; k < n; ++k) power[k] += std::norm(buf[k] * e.dt);
  }
  double energy = 0.0;
  for (double p : power) energy += p;
  if (energy == 0.0) return 0.0;
  const std::size_t half = n / 2;
  const double nyquist = n % 2 == 0 ? power[half] : std::max(power[half], power[half + 1]);
  if (nyquist > nyquist_tol * energy)
    throw PreconditionError("absorbed_energy_time: time grid too coarse for the field band");
  cplx sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (power[k] == 0.0) continue;
    const double kk = k <= half ? double(k) : double(k) - double(n);
    sum += mu_hat(2.0 * kPi * kk / period) * power[k];
  }
  return sum.real() / period;
}

std::vector<double> initial_pressure(const SusceptibilityField& medium, const GruneisenField& gamma,
                                     const PulseSpectrum& pulse, const PressureOptions& options) {
  const Grid3& grid = medium.grid();
  if (!(gamma.grid == grid) || gamma.values.size() != grid.size())
    throw PreconditionError("initial_pressure: Grueneisen field must share the medium grid");
  const auto& lat = medium.freqs();
  std::vector<std::size_t> band;
  for (std::size_t m = 0; m < lat.size(); ++m)
    if (lat[m] > 0.0 && pulse(lat[m]) != cplx(0.0)) band.push_back(m);
  if (band.empty()) throw PreconditionError("initial_pressure: lattice misses the pulse band");

  std::vector<std::vector<CVec3>> fields(band.size());
  parallel_for(band.size(), options.workers, [&](std::size_t b) {
    fields[b] = simulate_field(medium, pulse, lat[band[b]], options.model, options.c,
                               options.solver_tol).values;
  });

  std::vector<double> out(grid.size(), 0.0);
  parallel_for(grid.size(), options.workers, [&](std::size_t v) {
    if (gamma.values[v] == 0.0) return;
    std::vector<CVec3> e(lat.size(), CVec3::Zero());
    std::vector<cplx> mu(lat.size());
    bool any = false;
    for (std::size_t m = 0; m < lat.size(); ++m) {
      mu[m] = medium.at(m, v);
      any = any || mu[m] != cplx(0.0);
    }
    if (!any) return;
    for (std::size_t b = 0; b < band.size(); ++b) e[band[b]] = fields[b][v];
    out[v] = 2.0 * kPi * gamma.values[v] * absorbed_energy_spectral(lat, e, mu);
  });
  return out;
}

std::vector<double> narrowband_pressure(const SusceptibilityField& medium,
                                        const GruneisenField& gamma, double nu) {
  if (!(gamma.grid == medium.grid()) || gamma.values.size() != medium.grid().size())
    throw PreconditionError("narrowband_pressure: Grueneisen field must share the medium grid");
  const std::vector<cplx> mu = medium.slice_at(nu);
  std::vector<double> out(mu.size());
  for (std::size_t v = 0; v < mu.size(); ++v) out[v] = gamma.values[v] * mu[v].real();
  return out;
}

void write_pat_record(const std::filesystem::path& stem, const PATRecord& record) {
  if (record.values.size() != record.frequencies.size() * record.grid.size())
    throw PreconditionError("write_pat_record: size mismatch");
  VolumeData data{record.grid, record.frequencies, false, false, record.values, {}};
  write_volume(stem, data);
}

PATRecord read_pat_record(const std::filesystem::path& path) {
  VolumeData data = read_volume(path);
  if (data.is_complex) throw IoError(path.string() + ": PAT record must be real");
  return {data.grid, std::move(data.frequencies), std::move(data.real)};
}

}  // namespace pactomo
