#include "pactomo/forward_maxwell.hpp"

#include "pactomo/error.hpp"
#include "pactomo/fft.hpp"
#include "pactomo/linear_solvers.hpp"

#include <cmath>
#include <sstream>

namespace pactomo {

namespace {

constexpr cplx kI(0.0, 1.0);

double norm2(std::span<const CVec3> v) {
  double s = 0.0;
  for (const auto& x : v) s += x.squaredNorm();
  return std::sqrt(s);
}

}  // namespace

CVec3 incident_plane_wave(const PulseSpectrum& pulse, double omega, const Vec3& x, double c) {
  const cplx amp = pulse(omega) * std::polar(1.0, -omega * x[2] / c);
  return amp * pulse.polarization().cast<cplx>();
}

Vec3 double_cross(const Vec3& theta, const Vec3& eta) { return theta * theta.dot(eta) - eta; }

void check_detector_direction(const Vec3& theta) {
  if (std::abs(theta.norm() - 1.0) > 1e-12)
    throw PreconditionError("direction must be a unit vector (|theta| = 1 within 1e-12)");
  if (!(theta[2] > 0.0))
    throw PreconditionError("direction must point towards the detector plane (theta_3 > 0)");
}

// ---------------------------------------------------------------------------

struct ScatteringOperator::Impl {
  Grid3 grid;
  double omega;
  std::array<std::size_t, 3> padded;
  Fft3 fft;
  // Spectra of the six independent dyadic components xx, yy, zz, xy, xz, yz.
  std::array<std::vector<cplx>, 6> spectra;

  Impl(const Grid3& g, double w, std::array<std::size_t, 3> p) : grid(g), omega(w), padded(p), fft(p) {}
};

Eigen::Matrix3cd ScatteringOperator::kernel(const Vec3& r, double omega, double c,
                                            double voxel_volume) {
  const double k = omega / c;
  const double d = r.norm();
  const Vec3 rh = r / d;
  const cplx g = kI * std::polar(1.0, k * d) / (omega * d);
  const cplx near = (1.0 - kI * k * d) / (d * d);
  const cplx diag = k * k - near;
  const cplx outer = 3.0 * near - k * k;
  Eigen::Matrix3cd m = (outer * (rh * rh.transpose()).cast<cplx>());
  m.diagonal().array() += diag;
  return g * voxel_volume * m;
}

cplx ScatteringOperator::self_term(double omega, double c, double spacing) {
  const double k = omega / c;
  const double a = spacing * std::cbrt(3.0 / (4.0 * kPi));
  const cplx phi_k2 = std::polar(1.0, k * a) * (1.0 - kI * k * a) - 1.0;  // k^2 * ball potential
  return (4.0 * kPi * kI / omega) * (-1.0 / 3.0 + (2.0 / 3.0) * phi_k2);
}

ScatteringOperator::ScatteringOperator(const Grid3& grid, double omega, double c) {
  if (omega == 0.0) throw PreconditionError("scattering operator: omega = 0 is singular (kernel ~ 1/omega)");
  const auto& n = grid.dims();
  std::array<std::size_t, 3> p{2 * n[0], 2 * n[1], 2 * n[2]};
  impl_ = std::make_unique<Impl>(grid, omega, p);
  const std::size_t total = p[0] * p[1] * p[2];
  for (auto& s : impl_->spectra) s.assign(total, cplx(0.0));

  auto lag = [](std::size_t idx, std::size_t nn, std::size_t pp) -> long {
    const long l = idx < nn ? long(idx) : long(idx) - long(pp);
    return std::abs(l) <= long(nn) - 1 ? l : std::numeric_limits<long>::min();
  };
  const double h = grid.spacing();
  const cplx self = self_term(omega, c, h);
  for (std::size_t a = 0; a < p[0]; ++a) {
    const long la = lag(a, n[0], p[0]);
    if (la == std::numeric_limits<long>::min()) continue;
    for (std::size_t b = 0; b < p[1]; ++b) {
      const long lb = lag(b, n[1], p[1]);
      if (lb == std::numeric_limits<long>::min()) continue;
      for (std::size_t q = 0; q < p[2]; ++q) {
        const long lq = lag(q, n[2], p[2]);
        if (lq == std::numeric_limits<long>::min()) continue;
        const std::size_t at = (a * p[1] + b) * p[2] + q;
        if (la == 0 && lb == 0 && lq == 0) {
          impl_->spectra[0][at] = impl_->spectra[1][at] = impl_->spectra[2][at] = self;
          continue;
        }
        const Eigen::Matrix3cd K = kernel(h * Vec3(double(la), double(lb), double(lq)), omega, c,
                                          grid.voxel_volume());
        impl_->spectra[0][at] = K(0, 0);
        impl_->spectra[1][at] = K(1, 1);
        impl_->spectra[2][at] = K(2, 2);
        impl_->spectra[3][at] = K(0, 1);
        impl_->spectra[4][at] = K(0, 2);
        impl_->spectra[5][at] = K(1, 2);
      }
    }
  }
  for (auto& s : impl_->spectra) impl_->fft.forward(s);
}

ScatteringOperator::~ScatteringOperator() = default;
ScatteringOperator::ScatteringOperator(ScatteringOperator&&) noexcept = default;
ScatteringOperator& ScatteringOperator::operator=(ScatteringOperator&&) noexcept = default;

const Grid3& ScatteringOperator::grid() const { return impl_->grid; }
double ScatteringOperator::omega() const { return impl_->omega; }

std::vector<CVec3> ScatteringOperator::apply(std::span<const CVec3> u) const {
  const auto& grid = impl_->grid;
  const auto& n = grid.dims();
  const auto& p = impl_->padded;
  const std::size_t total = p[0] * p[1] * p[2];
  if (u.size() != grid.size()) throw PreconditionError("ScatteringOperator::apply: size mismatch");

  std::array<std::vector<cplx>, 3> buf;
  for (int comp = 0; comp < 3; ++comp) {
    buf[comp].assign(total, cplx(0.0));
    for (std::size_t i = 0; i < n[0]; ++i)
      for (std::size_t j = 0; j < n[1]; ++j)
        for (std::size_t k = 0; k < n[2]; ++k)
          buf[comp][(i * p[1] + j) * p[2] + k] = u[grid.index(i, j, k)][comp];
    impl_->fft.forward(buf[comp]);
  }
  const auto& s = impl_->spectra;
  for (std::size_t q = 0; q < total; ++q) {
    const cplx ux = buf[0][q], uy = buf[1][q], uz = buf[2][q];
    buf[0][q] = s[0][q] * ux + s[3][q] * uy + s[4][q] * uz;
    buf[1][q] = s[3][q] * ux + s[1][q] * uy + s[5][q] * uz;
    buf[2][q] = s[4][q] * ux + s[5][q] * uy + s[2][q] * uz;
  }
  std::vector<CVec3> out(grid.size());
  const double scale = 1.0 / double(total);
  for (int comp = 0; comp < 3; ++comp) {
    impl_->fft.backward(buf[comp]);
    for (std::size_t i = 0; i < n[0]; ++i)
      for (std::size_t j = 0; j < n[1]; ++j)
        for (std::size_t k = 0; k < n[2]; ++k)
          out[grid.index(i, j, k)][comp] = scale * buf[comp][(i * p[1] + j) * p[2] + k];
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<CVec3> incident_on_grid(const Grid3& grid, const PulseSpectrum& pulse, double omega,
                                    double c) {
  std::vector<CVec3> e0(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v)
    e0[v] = incident_plane_wave(pulse, omega, grid.center(v), c);
  return e0;
}

std::vector<CVec3> multiply(std::span<const cplx> mu, std::span<const CVec3> e) {
  std::vector<CVec3> out(e.size());
  for (std::size_t v = 0; v < e.size(); ++v) out[v] = mu[v] * e[v];
  return out;
}

Eigen::VectorXcd flatten(std::span<const CVec3> f) {
  Eigen::VectorXcd out(Eigen::Index(3 * f.size()));
  for (std::size_t v = 0; v < f.size(); ++v) out.segment<3>(Eigen::Index(3 * v)) = f[v];
  return out;
}

std::vector<CVec3> unflatten(const Eigen::VectorXcd& x) {
  std::vector<CVec3> out(std::size_t(x.size() / 3));
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = x.segment<3>(Eigen::Index(3 * v));
  return out;
}

}  // namespace

ComplexVectorField lippmann_schwinger_solve(const SusceptibilityField& medium,
                                            const PulseSpectrum& pulse, double omega,
                                            const LippmannSchwingerOptions& options,
                                            LippmannSchwingerReport* report) {
  if (omega == 0.0) throw PreconditionError("lippmann_schwinger_solve: omega = 0 is singular");
  if (!(options.tol > 0.0)) throw PreconditionError("lippmann_schwinger_solve: tol must be positive");
  const auto& grid = medium.grid();
  const std::vector<cplx> mu = medium.slice_at(omega);
  const std::vector<CVec3> e0 = incident_on_grid(grid, pulse, omega, options.c);
  LippmannSchwingerReport local;
  LippmannSchwingerReport& rep = report ? *report : local;
  rep = {};

  const double e0norm = norm2(e0);
  if (e0norm == 0.0) return {grid, omega, e0};

  const ScatteringOperator op(grid, omega, options.c);
  std::vector<CVec3> e = e0;
  double previous = std::numeric_limits<double>::infinity();
  std::size_t stalls = 0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const std::vector<CVec3> te = op.apply(multiply(mu, e));
    double diff = 0.0;
    for (std::size_t v = 0; v < e.size(); ++v) diff += (e0[v] + te[v] - e[v]).squaredNorm();
    rep.relative_residual = std::sqrt(diff) / e0norm;
    rep.iterations = it;
    if (rep.relative_residual <= options.tol) return {grid, omega, std::move(e)};
    if (!std::isfinite(rep.relative_residual)) break;
    stalls = rep.relative_residual > 0.9 * previous ? stalls + 1 : 0;
    if (stalls >= 3) break;
    previous = rep.relative_residual;
    for (std::size_t v = 0; v < e.size(); ++v) e[v] = e0[v] + te[v];
  }

  if (options.gmres_fallback) {
    rep.used_gmres = true;
    auto apply = [&](const Eigen::VectorXcd& x) {
      const auto field = unflatten(x);
      return Eigen::VectorXcd(x - flatten(op.apply(multiply(mu, field))));
    };
    const Eigen::VectorXcd b = flatten(e0);
    Eigen::VectorXcd x = b;
    const auto res = gmres(apply, b, x, options.tol, options.max_iterations);
    rep.iterations += res.iterations;
    rep.relative_residual = res.relative_residual;
    if (res.converged) return {grid, omega, unflatten(x)};
  }
  std::ostringstream msg;
  msg << "lippmann_schwinger_solve: no convergence at omega = " << omega
      << " (relative residual " << rep.relative_residual
      << "); the medium contrast is too strong for the fixed-point map";
  throw ConvergenceError(msg.str(), rep.relative_residual);
}

ComplexVectorField born_field(const SusceptibilityField& medium, const PulseSpectrum& pulse,
                              double omega, double c) {
  const auto& grid = medium.grid();
  const std::vector<cplx> mu = medium.slice_at(omega);
  std::vector<CVec3> e = incident_on_grid(grid, pulse, omega, c);
  const ScatteringOperator op(grid, omega, c);
  const auto te = op.apply(multiply(mu, e));
  for (std::size_t v = 0; v < e.size(); ++v) e[v] += te[v];
  return {grid, omega, std::move(e)};
}

ComplexVectorField simulate_field(const SusceptibilityField& medium, const PulseSpectrum& pulse,
                                  double omega, FieldModel model, double c, double solver_tol) {
  switch (model) {
    case FieldModel::incident:
      return {medium.grid(), omega, incident_on_grid(medium.grid(), pulse, omega, c)};
    case FieldModel::born:
      return born_field(medium, pulse, omega, c);
    case FieldModel::full: {
      LippmannSchwingerOptions opt;
      opt.tol = solver_tol;
      opt.c = c;
      return lippmann_schwinger_solve(medium, pulse, omega, opt);
    }
  }
  throw PreconditionError("simulate_field: unknown field model");
}

CVec3 radiate(const Grid3& grid, std::span<const CVec3> source, double omega, const Vec3& x,
              double c) {
  if (omega == 0.0) throw PreconditionError("radiate: omega = 0 is singular");
  if (source.size() != grid.size()) throw PreconditionError("radiate: size mismatch");
  CVec3 out = CVec3::Zero();
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (source[v].isZero(0.0)) continue;
    const Vec3 r = x - grid.center(v);
    if (r.norm() < 1e-9 * grid.spacing())
      throw PreconditionError("radiate: observation point coincides with a voxel center");
    out += ScatteringOperator::kernel(r, omega, c, grid.voxel_volume()) * source[v];
  }
  return out;
}

CVec3 scattered_field_at(const SusceptibilityField& medium, const ComplexVectorField& field,
                         const Vec3& x, double c) {
  const std::vector<cplx> mu = medium.slice_at(field.frequency);
  return radiate(medium.grid(), multiply(mu, field.values), field.frequency, x, c);
}

cplx born_scattering_integral(const SusceptibilityField& medium, double nu, const Vec3& theta,
                              double c) {
  const auto& grid = medium.grid();
  const std::vector<cplx> mu = medium.slice_at(nu);
  const Vec3 w = (theta + Vec3::UnitZ()) * (nu / c);
  cplx sum = 0.0;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (mu[v] == cplx(0.0)) continue;
    sum += std::polar(1.0, -w.dot(grid.center(v))) * mu[v];
  }
  return sum * grid.voxel_volume();
}

FarFieldSample born_far_field(const SusceptibilityField& medium, const PulseSpectrum& pulse,
                              double nu, const Vec3& theta, double R, double c) {
  if (!(nu > 0.0)) throw PreconditionError("born_far_field: frequency must be positive");
  if (!(R > 0.0)) throw PreconditionError("born_far_field: detector radius must be positive");
  check_detector_direction(theta);
  if (!medium.freqs().find(nu))
    throw PreconditionError("born_far_field: frequency is not on the medium lattice");
  const cplx fnu = pulse(nu);
  if (fnu == cplx(0.0))
    throw PreconditionError("born_far_field: pulse spectrum vanishes at nu (F f_nu(nu) = 0)");
  const cplx integral = born_scattering_integral(medium, nu, theta, c);
  const Vec3& eta = pulse.polarization();
  const cplx incident_phase = std::polar(1.0, -nu * R * theta[2] / c);
  const cplx scatter = kI * nu * std::polar(1.0, nu * R / c) / (R * c * c);
  const CVec3 value =
      fnu * (incident_phase * eta.cast<cplx>() - scatter * integral * double_cross(theta, eta).cast<cplx>());
  return {nu, theta, value};
}

FarFieldSample far_field_from_solution(const SusceptibilityField& medium,
                                       const ComplexVectorField& field, const PulseSpectrum& pulse,
                                       const Vec3& theta, double R, double c) {
  check_detector_direction(theta);
  const double nu = field.frequency;
  const auto& grid = medium.grid();
  const std::vector<cplx> mu = medium.slice_at(nu);
  CVec3 current = CVec3::Zero();
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (mu[v] == cplx(0.0)) continue;
    current += std::polar(1.0, -(nu / c) * theta.dot(grid.center(v))) * mu[v] * field.values[v];
  }
  current *= grid.voxel_volume();
  const CVec3 t = theta.cast<cplx>();
  const CVec3 transverse = current - t * (t.transpose() * current)(0);
  const cplx scatter = kI * nu * std::polar(1.0, nu * R / c) / (R * c * c);
  const CVec3 value = pulse(nu) * std::polar(1.0, -nu * R * theta[2] / c) *
                          pulse.polarization().cast<cplx>() +
                      scatter * transverse;
  return {nu, theta, value};
}

}  // namespace pactomo
