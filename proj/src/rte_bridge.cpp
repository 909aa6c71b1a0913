#include "pactomo/rte_bridge.hpp"

#include "pactomo/error.hpp"

#include <cmath>

namespace pactomo {

namespace {

void check_params(const RTEParams& p) {
  const std::size_t n = p.grid.size();
  if (p.mu_a.size() != n || p.mu_s.size() != n || p.theta1.size() != n)
    throw PreconditionError("RTEParams: coefficient volumes must match the grid");
}

}  // namespace

RTEParams RTEParams::constant(const Grid3& grid, double mu_a, double mu_s, double theta1) {
  return {grid, std::vector<double>(grid.size(), mu_a), std::vector<double>(grid.size(), mu_s),
          std::vector<double>(grid.size(), theta1)};
}

double diffusion_coefficient(const RTEParams& p, std::size_t voxel) {
  check_params(p);
  if (voxel >= p.grid.size()) throw PreconditionError("diffusion_coefficient: voxel out of range");
  const double den = 3.0 * (p.mu_a[voxel] + (1.0 - p.theta1[voxel] / 3.0) * p.mu_s[voxel]);
  if (!(den > 0.0))
    throw PreconditionError("diffusion_coefficient: 3 (mu_a + (1 - theta1/3) mu_s) must be positive");
  return 1.0 / den;
}

std::vector<double> rte_initial_pressure(const GruneisenField& gamma, const RTEParams& p,
                                         std::span<const double> fluence) {
  check_params(p);
  if (!(gamma.grid == p.grid) || gamma.values.size() != p.grid.size() ||
      fluence.size() != p.grid.size())
    throw PreconditionError("rte_initial_pressure: volumes must share one grid");
  std::vector<double> out(p.grid.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = gamma.values[v] * p.mu_a[v] * fluence[v];
  return out;
}

CVec3 magnetic_from_curl(const CVec3& curl_e, double omega, double c) {
  if (omega == 0.0) throw PreconditionError("magnetic_from_curl: omega = 0 is singular");
  return (c / (cplx(0.0, 1.0) * omega)) * curl_e;
}

std::vector<CVec3> grid_curl(const ComplexVectorField& field) {
  const Grid3& g = field.grid;
  const auto& d = g.dims();
  if (field.values.size() != g.size()) throw PreconditionError("grid_curl: field size mismatch");
  if (d[0] < 3 || d[1] < 3 || d[2] < 3) throw PreconditionError("grid_curl: needs 3 points per axis");
  const double h = g.spacing();
  // partial_a of component j at voxel (i0, i1, i2)
  auto partial = [&](const std::array<std::size_t, 3>& i, int a, int j) -> cplx {
    auto at = [&](long shift) {
      auto k = i;
      k[a] = std::size_t(long(k[a]) + shift);
      return field.values[g.index(k[0], k[1], k[2])][j];
    };
    if (i[a] == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    if (i[a] + 1 == d[a]) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h);
    return (at(1) - at(-1)) / (2.0 * h);
  };
  std::vector<CVec3> out(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    const auto i = g.unravel(v);
    out[v] = CVec3(partial(i, 1, 2) - partial(i, 2, 1), partial(i, 2, 0) - partial(i, 0, 2),
                   partial(i, 0, 1) - partial(i, 1, 0));
  }
  return out;
}

ComplexVectorField magnetic_field(const ComplexVectorField& e, double c) {
  ComplexVectorField b{e.grid, e.frequency, grid_curl(e)};
  for (auto& v : b.values) v = magnetic_from_curl(v, e.frequency, c);
  return b;
}

Vec3 poynting_time_averaged(const CVec3& e, const CVec3& b, double c) {
  return (c / (8.0 * kPi)) * e.cross(b.conjugate()).real();
}

std::vector<std::size_t> ball_voxels(const Grid3& grid, const Ball& ball) {
  if (!(ball.radius > 0.0)) throw PreconditionError("ball: radius must be positive");
  const auto& d = grid.dims();
  const Vec3 lo = grid.origin();
  const Vec3 hi = grid.center(d[0] - 1, d[1] - 1, d[2] - 1);
  for (int a = 0; a < 3; ++a)
    if (ball.center[a] - ball.radius < lo[a] || ball.center[a] + ball.radius > hi[a])
      throw PreconditionError("ball: must lie within the grid");
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < grid.size(); ++v)
    if ((grid.center(v) - ball.center).norm() <= ball.radius) out.push_back(v);
  if (out.empty()) throw PreconditionError("ball: contains no voxel center");
  return out;
}

double ball_volume(const Grid3& grid, const Ball& ball) {
  return double(ball_voxels(grid, ball).size()) * grid.voxel_volume();
}

double absorption_estimate(const SusceptibilityField& medium, const Ball& ball,
                           double incident_flux, double nu) {
  if (!(incident_flux > 0.0)) throw PreconditionError("absorption_estimate: incident flux must be positive");
  const auto voxels = ball_voxels(medium.grid(), ball);
  const auto mu = medium.slice_at(nu);
  double integral = 0.0;
  for (auto v : voxels) integral += mu[v].real();
  const double h3 = medium.grid().voxel_volume();
  return double(voxels.size()) * h3 / incident_flux * integral * h3;
}

double incident_rate(const Grid3& grid, std::span<const Vec3> s_minus, const Ball& ball) {
  if (s_minus.size() != grid.size()) throw PreconditionError("incident_rate: field size mismatch");
  const auto voxels = ball_voxels(grid, ball);
  double sum = 0.0;
  for (auto v : voxels) sum += s_minus[v].norm();
  return sum / double(voxels.size());
}

double sphere_flux(const Grid3& grid, std::span<const Vec3> s, const Ball& ball) {
  if (s.size() != grid.size()) throw PreconditionError("sphere_flux: field size mismatch");
  const auto voxels = ball_voxels(grid, ball);
  std::vector<bool> inside(grid.size(), false);
  for (auto v : voxels) inside[v] = true;
  const auto& d = grid.dims();
  const double area = grid.spacing() * grid.spacing();
  double flux = 0.0;
  for (auto v : voxels) {
    const auto i = grid.unravel(v);
    for (int a = 0; a < 3; ++a)
      for (int side : {-1, 1}) {
        auto j = i;
        j[a] = std::size_t(long(j[a]) + side);
        if (j[a] >= d[a]) throw PreconditionError("sphere_flux: the ball surface must lie inside the grid");
        const std::size_t u = grid.index(j[0], j[1], j[2]);
        if (inside[u]) continue;
        flux += area * side * 0.5 * (s[v][a] + s[u][a]);
      }
  }
  return flux;
}

double scattering_estimate(const Grid3& grid, std::span<const Vec3> s_plus, const Ball& ball,
                           double incident_flux) {
  if (!(incident_flux > 0.0)) throw PreconditionError("scattering_estimate: incident flux must be positive");
  return ball_volume(grid, ball) / incident_flux * sphere_flux(grid, s_plus, ball);
}

}  // namespace pactomo
