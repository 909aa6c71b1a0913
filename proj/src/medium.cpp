#include "pactomo/medium.hpp"

#include "pactomo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pactomo {

Grid3::Grid3(Vec3 origin, double spacing, std::array<std::size_t, 3> dims)
    : origin_(std::move(origin)), spacing_(spacing), dims_(dims) {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw PreconditionError("Grid3: spacing must be positive and finite");
  for (auto n : dims_)
    if (n < 1) throw PreconditionError("Grid3: every dimension must be >= 1");
}

Grid3 Grid3::centered(double spacing, std::array<std::size_t, 3> dims) {
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = -0.5 * spacing * double(dims[a] - 1);
  return Grid3(origin, spacing, dims);
}

std::array<std::size_t, 3> Grid3::unravel(std::size_t linear) const {
  const std::size_t k = linear % dims_[2];
  const std::size_t ij = linear / dims_[2];
  return {ij / dims_[1], ij % dims_[1], k};
}

Vec3 Grid3::center(std::size_t linear) const {
  auto [i, j, k] = unravel(linear);
  return center(i, j, k);
}

bool Grid3::in_boundary_layer(std::size_t linear, std::size_t width) const {
  const auto idx = unravel(linear);
  for (int a = 0; a < 3; ++a) {
    if (idx[a] < width || idx[a] + width >= dims_[a]) return true;
  }
  return false;
}

bool Grid3::operator==(const Grid3& other) const {
  return dims_ == other.dims_ && spacing_ == other.spacing_ && origin_ == other.origin_;
}

// ---------------------------------------------------------------------------

FrequencyLattice::FrequencyLattice(std::vector<double> values, bool symmetric_closure)
    : values_(std::move(values)), symmetric_closure_(symmetric_closure) {
  if (values_.empty()) throw PreconditionError("FrequencyLattice: empty lattice");
  for (std::size_t m = 0; m < values_.size(); ++m) {
    if (!std::isfinite(values_[m]))
      throw PreconditionError("FrequencyLattice: non-finite frequency");
    if (m > 0 && !(values_[m] > values_[m - 1]))
      throw PreconditionError("FrequencyLattice: frequencies must be strictly increasing");
  }
  if (symmetric_closure_ && values_.front() < 0.0)
    throw PreconditionError(
        "FrequencyLattice: a lattice with symmetric closure stores omega >= 0 only");
}

FrequencyLattice FrequencyLattice::uniform(double step, std::size_t count) {
  if (!(step > 0.0)) throw PreconditionError("FrequencyLattice::uniform: step must be positive");
  std::vector<double> v(count);
  for (std::size_t m = 0; m < count; ++m) v[m] = step * double(m);
  return FrequencyLattice(std::move(v), true);
}

std::optional<std::size_t> FrequencyLattice::find(double omega) const {
  const double scale = std::max(std::abs(values_.back()), std::abs(values_.front()));
  const double tol = 1e-9 * std::max(scale, 1e-300);
  auto it = std::lower_bound(values_.begin(), values_.end(), omega - tol);
  if (it != values_.end() && std::abs(*it - omega) <= tol)
    return std::size_t(it - values_.begin());
  return std::nullopt;
}

std::optional<double> FrequencyLattice::uniform_spacing() const {
  if (values_.size() < 2) return std::nullopt;
  const double step = (values_.back() - values_.front()) / double(values_.size() - 1);
  for (std::size_t m = 1; m < values_.size(); ++m) {
    if (std::abs(values_[m] - values_[m - 1] - step) > 1e-9 * step) return std::nullopt;
  }
  return step;
}

std::vector<double> FrequencyLattice::trapezoid_weights() const {
  std::vector<double> w(values_.size(), 0.0);
  for (std::size_t m = 0; m + 1 < values_.size(); ++m) {
    const double half = 0.5 * (values_[m + 1] - values_[m]);
    w[m] += half;
    w[m + 1] += half;
  }
  return w;
}

// ---------------------------------------------------------------------------

cplx LorentzOscillator::response(double omega) const {
  const cplx i(0.0, 1.0);
  return strength * (-i * omega) /
         (resonance * resonance - omega * omega - i * damping * omega);
}

cplx DebyeRelaxation::response(double omega) const {
  const cplx i(0.0, 1.0);
  return strength * (-i * omega) / (1.0 - i * omega * relaxation_time);
}

cplx DrudeConductor::response(double omega) const {
  const cplx i(0.0, 1.0);
  return strength / (collision_rate - i * omega);
}

cplx evaluate_response(const ResponseModel& model, double omega) {
  return std::visit([omega](const auto& m) { return m.response(omega); }, model);
}

// ---------------------------------------------------------------------------

SusceptibilityField::SusceptibilityField(Grid3 grid, FrequencyLattice freqs,
                                         std::vector<cplx> values, std::size_t boundary_width)
    : grid_(std::move(grid)),
      freqs_(std::move(freqs)),
      values_(std::move(values)),
      boundary_width_(boundary_width) {
  if (values_.size() != grid_.size() * freqs_.size())
    throw PreconditionError("SusceptibilityField: value count does not match grid x lattice");
}

SusceptibilityField SusceptibilityField::zeros(Grid3 grid, FrequencyLattice freqs,
                                               std::size_t boundary_width) {
  std::vector<cplx> v(grid.size() * freqs.size(), cplx(0.0));
  return SusceptibilityField(std::move(grid), std::move(freqs), std::move(v), boundary_width);
}

std::vector<cplx> SusceptibilityField::slice_at(double omega) const {
  if (auto m = freqs_.find(omega)) {
    auto s = slice(*m);
    return {s.begin(), s.end()};
  }
  if (freqs_.symmetric_closure() && omega < 0.0) {
    if (auto m = freqs_.find(-omega)) {
      auto s = slice(*m);
      std::vector<cplx> out(s.size());
      std::transform(s.begin(), s.end(), out.begin(), [](cplx z) { return std::conj(z); });
      return out;
    }
  }
  std::ostringstream msg;
  msg << "SusceptibilityField: frequency " << omega << " is not on the lattice";
  throw PreconditionError(msg.str());
}

// ---------------------------------------------------------------------------

SusceptibilityField build_phantom(const Grid3& grid, const FrequencyLattice& freqs,
                                  std::span<const Inclusion> inclusions,
                                  std::size_t boundary_width) {
  const double h = grid.spacing();
  for (std::size_t n = 0; n < inclusions.size(); ++n) {
    const auto& inc = inclusions[n];
    if (!(inc.radius > 0.0))
      throw PreconditionError("build_phantom: inclusion radius must be positive");
    if (const auto* lz = std::get_if<LorentzOscillator>(&inc.model); lz && !(lz->damping > 0.0))
      throw PreconditionError("build_phantom: Lorentz damping must be positive");
    // The ball must stay strictly inside the interior voxels' cells.
    for (int a = 0; a < 3; ++a) {
      const double lo = grid.origin()[a] + h * (double(boundary_width) - 0.5);
      const double hi =
          grid.origin()[a] + h * (double(grid.dims()[a]) - 1.0 - double(boundary_width) + 0.5);
      if (inc.center[a] - inc.radius < lo || inc.center[a] + inc.radius > hi) {
        std::ostringstream msg;
        msg << "build_phantom: inclusion " << n << " (axis " << a << ", extent ["
            << inc.center[a] - inc.radius << ", " << inc.center[a] + inc.radius
            << "]) touches the zero boundary layer of width " << boundary_width
            << " voxels; allowed interior is [" << lo << ", " << hi << "]";
        throw PreconditionError(msg.str());
      }
    }
  }

  const std::size_t nv = grid.size();
  std::vector<cplx> values(nv * freqs.size(), cplx(0.0));
  for (const auto& inc : inclusions) {
    std::vector<cplx> spectrum(freqs.size());
    for (std::size_t m = 0; m < freqs.size(); ++m)
      spectrum[m] = inc.density * evaluate_response(inc.model, freqs[m]);
    for (std::size_t v = 0; v < nv; ++v) {
      if ((grid.center(v) - inc.center).norm() > inc.radius) continue;
      for (std::size_t m = 0; m < freqs.size(); ++m) values[m * nv + v] += spectrum[m];
    }
  }
  return SusceptibilityField(grid, freqs, std::move(values), boundary_width);
}

SusceptibilityField build_lorentzian_phantom(const Grid3& grid, const FrequencyLattice& freqs,
                                             std::span<const LorentzInclusion> inclusions,
                                             std::size_t boundary_width) {
  std::vector<Inclusion> generic;
  generic.reserve(inclusions.size());
  for (const auto& l : inclusions)
    generic.push_back({l.center, l.radius, LorentzOscillator{l.strength, l.resonance, l.damping}});
  return build_phantom(grid, freqs, generic, boundary_width);
}

MediumReport validate_medium(const SusceptibilityField& medium, double tolerance) {
  MediumReport report;
  const auto& grid = medium.grid();
  const auto& freqs = medium.freqs();
  const std::size_t nv = grid.size();

  std::array<std::array<std::size_t, 2>, 3> box{};
  bool any = false;
  for (std::size_t v = 0; v < nv; ++v) {
    double peak = 0.0;
    for (std::size_t m = 0; m < freqs.size(); ++m) peak = std::max(peak, std::abs(medium.at(m, v)));
    if (peak == 0.0) continue;
    if (grid.in_boundary_layer(v, medium.boundary_width()))
      report.max_boundary_magnitude = std::max(report.max_boundary_magnitude, peak);
    const auto idx = grid.unravel(v);
    for (int a = 0; a < 3; ++a) {
      if (!any) box[a] = {idx[a], idx[a]};
      box[a][0] = std::min(box[a][0], idx[a]);
      box[a][1] = std::max(box[a][1], idx[a]);
    }
    any = true;
  }
  if (any) report.support_box = box;

  // Pairs (omega, -omega) present in the lattice; with closure only omega = 0
  // pairs with itself and must be real.
  for (std::size_t m = 0; m < freqs.size(); ++m) {
    std::optional<std::size_t> partner;
    if (freqs.symmetric_closure()) {
      if (freqs[m] == 0.0) partner = m;
    } else {
      partner = freqs.find(-freqs[m]);
      if (freqs[m] == 0.0) partner = m;
    }
    if (!partner) continue;
    for (std::size_t v = 0; v < nv; ++v) {
      const double d = std::abs(medium.at(*partner, v) - std::conj(medium.at(m, v)));
      report.max_symmetry_violation = std::max(report.max_symmetry_violation, d);
    }
  }
  report.passed = report.max_boundary_magnitude <= tolerance &&
                  report.max_symmetry_violation <= tolerance;
  return report;
}

}  // namespace pactomo
