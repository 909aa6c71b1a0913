#include "pactomo/inversion.hpp"

#include "pactomo/error.hpp"
#include "pactomo/fft.hpp"
#include "pactomo/linear_solvers.hpp"
#include "pactomo/parallel.hpp"
#include "pactomo/volume_io.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace pactomo {

namespace {

constexpr cplx kI(0.0, 1.0);

// Hilbert transform of samples on a uniform lattice by the sign multiplier
// -i sgn(xi) on a zero-padded FFT buffer, after tapering both ends.
std::vector<double> hilbert_uniform(std::span<const double> g, const KramersKronigOptions& opt) {
  const std::size_t n = g.size();
  if (opt.padding < 2) throw PreconditionError("kramers_kronig: padding factor must be at least 2");
  if (opt.taper_fraction < 0.0 || opt.taper_fraction >= 0.5)
    throw PreconditionError("kramers_kronig: taper fraction must lie in [0, 0.5)");
  const std::size_t p = opt.padding * n;
  const std::size_t taper = std::size_t(std::ceil(opt.taper_fraction * double(n)));
  std::vector<cplx> buf(p, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t d = std::min(j, n - 1 - j);
    const double w = d < taper ? 0.5 * (1.0 - std::cos(kPi * double(d) / double(taper))) : 1.0;
    buf[j] = w * g[j];
  }
  fft1d(buf, false);
  for (std::size_t k = 0; k < p; ++k) {
    if (k == 0 || 2 * k == p) {
      buf[k] = 0.0;
    } else if (2 * k < p) {
      buf[k] *= -kI;
    } else {
      buf[k] *= kI;
    }
  }
  fft1d(buf, true);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = buf[j].real() / double(p);
  return out;
}

double check_uniform(std::span<const double> nu) {
  if (nu.size() < 2) throw PreconditionError("kramers_kronig: needs at least two frequencies");
  const double d = nu[1] - nu[0];
  for (std::size_t m = 1; m < nu.size(); ++m)
    if (std::abs((nu[m] - nu[m - 1]) - d) > 1e-9 * d)
      throw PreconditionError("kramers_kronig: frequency lattice must be uniform");
  return d;
}

// Even extension of half-line samples on 0 or spacing, ..., then the odd
// transform restricted to the stored points.
std::vector<double> kk_half_line(std::span<const double> nu, std::span<const double> g,
                                 const KramersKronigOptions& opt) {
  const double d = check_uniform(nu);
  if (nu[0] < 0.0 || (std::abs(nu[0]) > 1e-9 * d && std::abs(nu[0] - d) > 1e-9 * d))
    throw PreconditionError(
        "kramers_kronig: a half lattice must start at 0 or at its spacing");
  std::vector<double> half;  // samples at 0, d, 2d, ...
  const bool has_zero = std::abs(nu[0]) <= 1e-9 * d;
  if (!has_zero) {
    const double g2 = g.size() > 1 ? g[1] : g[0];
    half.push_back((4.0 * g[0] - g2) / 3.0);
  }
  half.insert(half.end(), g.begin(), g.end());
  const std::size_t L = half.size() - 1;
  std::vector<double> full(2 * L + 1);
  for (std::size_t j = 0; j <= L; ++j) {
    full[L + j] = half[j];
    full[L - j] = half[j];
  }
  const auto h = hilbert_uniform(full, opt);
  std::vector<double> out(g.size());
  const std::size_t offset = has_zero ? 0 : 1;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const std::size_t j = m + offset;
    out[m] = 0.5 * (h[L + j] - h[L - j]);  // odd part
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Separable plane-wave phases e^{-i <k_n, y>} for grid voxels y.
struct PhaseTables {
  std::array<std::size_t, 3> dims;
  std::vector<cplx> ex, ey, ez;  // sample-major

  PhaseTables(const Grid3& grid, const ConeSampling& sampling) : dims(grid.dims()) {
    const std::size_t n = sampling.size();
    ex.resize(n * dims[0]);
    ey.resize(n * dims[1]);
    ez.resize(n * dims[2]);
    const Vec3& o = grid.origin();
    const double h = grid.spacing();
    for (std::size_t s = 0; s < n; ++s) {
      const Vec3& k = sampling.samples[s].k;
      for (std::size_t i = 0; i < dims[0]; ++i) ex[s * dims[0] + i] = std::polar(1.0, -k[0] * (o[0] + h * double(i)));
      for (std::size_t j = 0; j < dims[1]; ++j) ey[s * dims[1] + j] = std::polar(1.0, -k[1] * (o[1] + h * double(j)));
      for (std::size_t l = 0; l < dims[2]; ++l) ez[s * dims[2] + l] = std::polar(1.0, -k[2] * (o[2] + h * double(l)));
    }
  }

  cplx operator()(std::size_t n, const std::array<std::size_t, 3>& v) const {
    return ex[n * dims[0] + v[0]] * ey[n * dims[1] + v[1]] * ez[n * dims[2] + v[2]];
  }
};

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> kramers_kronig(const FrequencyLattice& lattice, std::span<const double> g,
                                   const KramersKronigOptions& options) {
  if (g.size() != lattice.size()) throw PreconditionError("kramers_kronig: size mismatch");
  if (lattice.symmetric_closure()) return kk_half_line(lattice.values(), g, options);
  check_uniform(lattice.values());
  return hilbert_uniform(g, options);
}

ConeSampling make_cone_sampling(std::span<const double> frequencies,
                                std::span<const Vec3> directions, double direction_weight,
                                double c, std::span<const std::size_t> excluded) {
  if (frequencies.empty() || directions.empty())
    throw PreconditionError("make_cone_sampling: empty frequency or direction list");
  if (!(direction_weight > 0.0)) throw PreconditionError("make_cone_sampling: weight must be positive");
  std::vector<double> fw(frequencies.size(), 1.0);
  if (frequencies.size() > 1) {
    std::fill(fw.begin(), fw.end(), 0.0);
    for (std::size_t m = 0; m + 1 < frequencies.size(); ++m) {
      const double half = 0.5 * (frequencies[m + 1] - frequencies[m]);
      if (!(half > 0.0)) throw PreconditionError("make_cone_sampling: frequencies must increase");
      fw[m] += half;
      fw[m + 1] += half;
    }
  }
  ConeSampling out;
  for (std::size_t m = 0; m < frequencies.size(); ++m) {
    if (std::find(excluded.begin(), excluded.end(), m) != excluded.end()) continue;
    const double nu = frequencies[m];
    if (!(nu > 0.0)) throw PreconditionError("make_cone_sampling: frequencies must be positive");
    for (std::size_t d = 0; d < directions.size(); ++d) {
      const Vec3& t = directions[d];
      check_detector_direction(t);
      const Vec3 k = (nu / c) * (t + Vec3::UnitZ());
      const double jac = nu * nu / (c * c * c) * (1.0 + t[2]);
      out.samples.push_back({m, d, nu, t, k, jac * fw[m] * direction_weight});
    }
  }
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = a + 1; b < out.size() && out.samples[b].frequency_index == out.samples[a].frequency_index; ++b)
      if ((out.samples[a].k - out.samples[b].k).norm() <= 1e-12 * out.samples[a].k.norm())
        throw PreconditionError("make_cone_sampling: duplicate k vectors (repeated directions)");
  return out;
}

std::vector<cplx> pat_bracket(const PATRecord& record, const KramersKronigOptions& options) {
  const std::size_t nv = record.grid.size(), nf = record.frequencies.size();
  if (record.values.size() != nv * nf) throw PreconditionError("pat_bracket: record size mismatch");
  if (nf < 2)
    throw PreconditionError("pat_bracket: the Hilbert transform needs at least two frequencies");
  std::vector<cplx> out(nv * nf, 0.0);
  std::vector<double> col(nf);
  for (std::size_t v = 0; v < nv; ++v) {
    bool any = false;
    for (std::size_t m = 0; m < nf; ++m) {
      col[m] = record.values[m * nv + v];
      any = any || col[m] != 0.0;
    }
    if (!any) continue;
    const auto kk = kk_half_line(record.frequencies, col, options);
    for (std::size_t m = 0; m < nf; ++m) out[m * nv + v] = cplx(col[m], kk[m]);
  }
  return out;
}

cplx kernel_K(const PATRecord& record, std::span<const cplx> bracket, std::size_t m,
              const Vec3& theta, std::size_t voxel, double c) {
  if (m >= record.frequencies.size() || voxel >= record.grid.size())
    throw PreconditionError("kernel_K: index out of range");
  const double nu = record.frequencies[m];
  const Vec3 y = record.grid.center(voxel);
  return bracket[m * record.grid.size() + voxel] *
         std::polar(1.0, -(nu / c) * (theta + Vec3::UnitZ()).dot(y));
}

std::vector<cplx> apply_forward(const PATRecord& record, std::span<const double> gamma_inv,
                                const ConeSampling& sampling, std::size_t workers) {
  const Grid3& grid = record.grid;
  if (gamma_inv.size() != grid.size()) throw PreconditionError("apply_forward: grid mismatch");
  const auto bracket = pat_bracket(record);
  std::vector<std::size_t> support;
  std::vector<std::array<std::size_t, 3>> idx;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (gamma_inv[v] == 0.0) continue;
    bool any = false;
    for (std::size_t m = 0; m < record.frequencies.size() && !any; ++m)
      any = bracket[m * grid.size() + v] != cplx(0.0);
    if (!any) continue;
    support.push_back(v);
    idx.push_back(grid.unravel(v));
  }
  const PhaseTables phases(grid, sampling);
  std::vector<cplx> out(sampling.size(), 0.0);
  parallel_for(sampling.size(), workers, [&](std::size_t n) {
    const std::size_t m = sampling.samples[n].frequency_index;
    if (m >= record.frequencies.size())
      throw PreconditionError("apply_forward: cone sample frequency outside the record");
    cplx sum = 0.0;
    for (std::size_t s = 0; s < support.size(); ++s)
      sum += bracket[m * grid.size() + support[s]] * phases(n, idx[s]) * gamma_inv[support[s]];
    out[n] = sum * grid.voxel_volume();
  });
  return out;
}

// ---------------------------------------------------------------------------

MaterialSplit material_split(const PATRecord& record, double profile_tol,
                             const KramersKronigOptions& options) {
  const std::size_t nf = record.frequencies.size(), nv = record.grid.size();
  if (record.values.size() != nf * nv) throw PreconditionError("material_split: size mismatch");
  Eigen::MatrixXd p(nf, nv);
  for (std::size_t m = 0; m < nf; ++m)
    for (std::size_t v = 0; v < nv; ++v) p(m, v) = record.values[m * nv + v];
  if (p.norm() == 0.0) throw PreconditionError("material_split: p~ vanishes identically");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(p, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd alpha = svd.matrixU().col(0);
  Eigen::VectorXd beta = svd.singularValues()[0] * svd.matrixV().col(0);
  if (beta.sum() < 0.0) {
    alpha = -alpha;
    beta = -beta;
  }
  MaterialSplit out{record.grid, record.frequencies, {}, {}, {}, {}, {}, {}, 0.0};
  out.alpha.assign(alpha.data(), alpha.data() + nf);
  out.beta.assign(beta.data(), beta.data() + nv);
  out.singular_values.assign(svd.singularValues().data(),
                             svd.singularValues().data() + svd.singularValues().size());
  const Eigen::MatrixXd eps = p - alpha * beta.transpose();
  out.residual.resize(nf * nv);
  for (std::size_t m = 0; m < nf; ++m)
    for (std::size_t v = 0; v < nv; ++v) out.residual[m * nv + v] = eps(m, v);
  out.residual_norm = eps.norm();
  if (nf >= 2) {
    const auto kk = kk_half_line(out.frequencies, out.alpha, options);
    out.profile.resize(nf);
    for (std::size_t m = 0; m < nf; ++m) out.profile[m] = cplx(out.alpha[m], kk[m]);
  } else {
    out.profile = {cplx(out.alpha[0], 0.0)};
  }
  double peak = 0.0;
  for (const auto& a : out.profile) peak = std::max(peak, std::abs(a));
  for (std::size_t m = 0; m < nf; ++m)
    if (std::abs(out.profile[m]) <= profile_tol * peak) out.dropped.push_back(m);
  return out;
}

std::vector<cplx> normalized_data(std::span<const cplx> h_tilde, const MaterialSplit& split,
                                  const ConeSampling& sampling) {
  if (h_tilde.size() != sampling.size()) throw PreconditionError("normalized_data: size mismatch");
  std::vector<cplx> out(h_tilde.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    const std::size_t m = sampling.samples[n].frequency_index;
    if (std::find(split.dropped.begin(), split.dropped.end(), m) != split.dropped.end() ||
        split.profile[m] == cplx(0.0))
      throw PreconditionError("normalized_data: A(nu) = 0 at a sampled frequency");
    out[n] = h_tilde[n] / split.profile[m];
  }
  return out;
}

// ---------------------------------------------------------------------------

struct FredholmOperator::Impl {
  const ConeSampling* sampling;
  Grid3 grid;
  std::size_t workers;
  std::vector<std::array<std::size_t, 3>> support;
  std::vector<std::vector<cplx>> b_eps;  // [frequency][support voxel]
  std::vector<cplx> inv_a;               // per sample
  std::vector<double> weights;
  PhaseTables phases;
  double c0;

  Impl(const MaterialSplit& split, const ConeSampling& s, std::size_t w,
       const KramersKronigOptions& opt)
      : sampling(&s), grid(split.grid), workers(w), phases(split.grid, s) {
    const std::size_t nf = split.frequencies.size(), nv = grid.size();
    std::vector<std::size_t> voxels;
    for (std::size_t v = 0; v < nv; ++v)
      for (std::size_t m = 0; m < nf; ++m)
        if (split.residual[m * nv + v] != 0.0) {
          voxels.push_back(v);
          break;
        }
    b_eps.assign(nf, std::vector<cplx>(voxels.size()));
    std::vector<double> col(nf);
    for (std::size_t s = 0; s < voxels.size(); ++s) {
      support.push_back(grid.unravel(voxels[s]));
      for (std::size_t m = 0; m < nf; ++m) col[m] = split.residual[m * nv + voxels[s]];
      const auto kk = nf >= 2 ? kk_half_line(split.frequencies, col, opt) : std::vector<double>(nf, 0.0);
      for (std::size_t m = 0; m < nf; ++m) b_eps[m][s] = cplx(col[m], kk[m]);
    }
    for (const auto& sample : s.samples) {
      const std::size_t m = sample.frequency_index;
      if (m >= nf) throw PreconditionError("FredholmOperator: cone sample frequency outside the split");
      const cplx a = split.profile[m];
      if (a == cplx(0.0) ||
          std::find(split.dropped.begin(), split.dropped.end(), m) != split.dropped.end())
        throw PreconditionError("FredholmOperator: A(nu) = 0 at a sampled frequency (singular profile)");
      inv_a.push_back(1.0 / a);
      weights.push_back(sample.weight);
    }
    c0 = grid.voxel_volume() / std::pow(2.0 * kPi, 3);
  }

  // g_s = sum_n conj(phase(n, s)) x_n
  std::vector<cplx> to_space(const std::vector<cplx>& x) const {
    std::vector<cplx> g(support.size());
    parallel_for(support.size(), workers, [&](std::size_t s) {
      cplx sum = 0.0;
      for (std::size_t n = 0; n < x.size(); ++n)
        if (x[n] != cplx(0.0)) sum += std::conj(phases(n, support[s])) * x[n];
      g[s] = sum;
    });
    return g;
  }
};

FredholmOperator::FredholmOperator(const MaterialSplit& split, const ConeSampling& sampling,
                                   std::size_t workers, const KramersKronigOptions& options)
    : impl_(std::make_unique<Impl>(split, sampling, workers, options)) {}
FredholmOperator::~FredholmOperator() = default;
FredholmOperator::FredholmOperator(FredholmOperator&&) noexcept = default;
FredholmOperator& FredholmOperator::operator=(FredholmOperator&&) noexcept = default;

std::size_t FredholmOperator::size() const { return impl_->weights.size(); }
bool FredholmOperator::is_zero() const { return impl_->support.empty(); }

Eigen::VectorXcd FredholmOperator::apply(const Eigen::VectorXcd& gamma) const {
  const Impl& p = *impl_;
  const std::size_t n = size();
  if (std::size_t(gamma.size()) != n) throw PreconditionError("FredholmOperator: size mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index(n));
  if (is_zero()) return out;
  std::vector<cplx> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = p.weights[i] * gamma[Eigen::Index(i)];
  const auto g = p.to_space(x);
  parallel_for(n, p.workers, [&](std::size_t i) {
    const auto& b = p.b_eps[p.sampling->samples[i].frequency_index];
    cplx sum = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) sum += b[s] * p.phases(i, p.support[s]) * g[s];
    out[Eigen::Index(i)] = p.c0 * p.inv_a[i] * sum;
  });
  return out;
}

Eigen::VectorXcd FredholmOperator::adjoint(const Eigen::VectorXcd& u) const {
  const Impl& p = *impl_;
  const std::size_t n = size();
  if (std::size_t(u.size()) != n) throw PreconditionError("FredholmOperator: size mismatch");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index(n));
  if (is_zero()) return out;
  std::vector<cplx> r(p.support.size());
  parallel_for(p.support.size(), p.workers, [&](std::size_t s) {
    cplx sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx v = p.weights[i] * std::conj(p.inv_a[i]) * u[Eigen::Index(i)];
      if (v == cplx(0.0)) continue;
      const auto& b = p.b_eps[p.sampling->samples[i].frequency_index];
      sum += std::conj(b[s] * p.phases(i, p.support[s])) * v;
    }
    r[s] = sum;
  });
  parallel_for(n, p.workers, [&](std::size_t i) {
    cplx sum = 0.0;
    for (std::size_t s = 0; s < r.size(); ++s) sum += p.phases(i, p.support[s]) * r[s];
    out[Eigen::Index(i)] = p.c0 * sum;
  });
  return out;
}

double FredholmOperator::weighted_norm(const Eigen::VectorXcd& v) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += impl_->weights[std::size_t(i)] * std::norm(v[i]);
  return std::sqrt(s);
}

double FredholmOperator::norm_estimate(std::size_t iterations, std::uint64_t seed) const {
  if (is_zero() || size() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index(size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(g(rng), g(rng));
  v /= weighted_norm(v);
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const Eigen::VectorXcd tv = apply(v);
    estimate = weighted_norm(tv);
    if (estimate == 0.0) return 0.0;
    Eigen::VectorXcd w = adjoint(tv);
    const double wn = weighted_norm(w);
    if (wn == 0.0) break;
    v = w / wn;
  }
  return estimate;
}

FredholmResult fredholm_solve(std::span<const cplx> h_hat, const MaterialSplit& split,
                              const ConeSampling& sampling, const FredholmOptions& options) {
  if (h_hat.size() != sampling.size()) throw PreconditionError("fredholm_solve: size mismatch");
  const FredholmOperator op(split, sampling, options.workers);
  FredholmResult out;
  const Eigen::VectorXcd b = Eigen::Map<const Eigen::VectorXcd>(h_hat.data(), Eigen::Index(h_hat.size()));
  auto finish = [&](const Eigen::VectorXcd& x) {
    out.gamma_hat.assign(x.data(), x.data() + x.size());
    return out;
  };
  if (op.is_zero()) return finish(b);
  out.operator_norm = op.norm_estimate(options.norm_iterations);
  if (out.operator_norm >= 1.0) {
    std::ostringstream msg;
    msg << "fredholm_solve: operator norm estimate " << out.operator_norm
        << " >= 1, the second-kind equation is not a contraction";
    throw ConvergenceError(msg.str(), out.operator_norm);
  }
  const double bnorm = op.weighted_norm(b);
  if (bnorm == 0.0) return finish(Eigen::VectorXcd::Zero(b.size()));
  Eigen::VectorXcd x = b;
  double previous = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (;;) {
    const Eigen::VectorXcd tx = op.apply(x);
    out.relative_residual = op.weighted_norm(b - x - tx) / bnorm;
    if (out.relative_residual <= options.tol) return finish(x);
    if (out.iterations >= options.max_iterations) break;
    stalled = out.relative_residual > 0.9 * previous ? stalled + 1 : 0;
    if (stalled >= 3) break;
    previous = out.relative_residual;
    x = b - tx;
    ++out.iterations;
  }
  if (!options.gmres_fallback)
    throw ConvergenceError("fredholm_solve: Neumann iteration did not reach the tolerance",
                           out.relative_residual);
  out.used_gmres = true;
  auto apply = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return v + op.apply(v); };
  const auto r = gmres(apply, b, x, 0.1 * options.tol, options.max_iterations);
  out.iterations += r.iterations;
  out.relative_residual = op.weighted_norm(b - apply(x)) / bnorm;
  if (out.relative_residual > options.tol)
    throw ConvergenceError("fredholm_solve: GMRES fallback did not reach the tolerance",
                           out.relative_residual);
  return finish(x);
}

// ---------------------------------------------------------------------------

GammaEstimate recover_gamma(std::span<const cplx> gamma_hat, const MaterialSplit& split,
                            const ConeSampling& sampling, const GammaOptions& options) {
  if (!(options.reg > 0.0)) throw PreconditionError("recover_gamma: reg must be positive");
  if (gamma_hat.size() != sampling.size()) throw PreconditionError("recover_gamma: size mismatch");
  const Grid3& grid = split.grid;
  double bmax = 0.0;
  for (double b : split.beta) bmax = std::max(bmax, std::abs(b));
  std::vector<std::size_t> unknowns;
  for (std::size_t v = 0; v < grid.size(); ++v)
    if (bmax > 0.0 && std::abs(split.beta[v]) > options.beta_threshold * bmax) unknowns.push_back(v);
  if (unknowns.empty()) throw PreconditionError("recover_gamma: empty mask (beta vanishes)");

  std::vector<std::array<std::size_t, 3>> idx;
  for (auto v : unknowns) idx.push_back(grid.unravel(v));
  const PhaseTables phases(grid, sampling);
  const double h3 = grid.voxel_volume();
  const std::size_t n = sampling.size(), nu = unknowns.size();
  const bool gradient = options.penalty == GammaPenalty::inverse_gradient;
  // q_s = scale_s x_s
  std::vector<double> scale(nu, 1.0);
  if (gradient)
    for (std::size_t s = 0; s < nu; ++s) scale[s] = split.beta[unknowns[s]];
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = sampling.samples[i].weight;
  // Face-neighbour pairs among the unknowns.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  if (gradient) {
    std::vector<std::size_t> slot(grid.size(), nu);
    for (std::size_t s = 0; s < nu; ++s) slot[unknowns[s]] = s;
    const auto& d = grid.dims();
    for (std::size_t s = 0; s < nu; ++s)
      for (int a = 0; a < 3; ++a) {
        auto j = idx[s];
        if (++j[a] >= d[a]) continue;
        const std::size_t t = slot[grid.index(j[0], j[1], j[2])];
        if (t < nu) edges.emplace_back(s, t);
      }
  }

  auto forward = [&](const Eigen::VectorXd& x) {
    std::vector<cplx> out(n);
    parallel_for(n, options.workers, [&](std::size_t i) {
      cplx sum = 0.0;
      for (std::size_t s = 0; s < nu; ++s) sum += phases(i, idx[s]) * (scale[s] * x[Eigen::Index(s)]);
      out[i] = h3 * sum;
    });
    return out;
  };
  // Re(F^H W u)
  auto adjoint = [&](const std::vector<cplx>& u) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index(nu));
    parallel_for(nu, options.workers, [&](std::size_t s) {
      cplx sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += std::conj(phases(i, idx[s])) * (w[i] * u[i]);
      out[Eigen::Index(s)] = h3 * scale[s] * sum.real();
    });
    return out;
  };
  auto normal = [&](const Eigen::VectorXd& x) { return adjoint(forward(x)); };
  auto penalty = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (!gradient) return x;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    for (const auto& [a, b] : edges) {
      const double d = x[Eigen::Index(a)] - x[Eigen::Index(b)];
      out[Eigen::Index(a)] += d;
      out[Eigen::Index(b)] -= d;
    }
    return out;
  };

  // Operator norm of the normal map by power iteration.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(Eigen::Index(nu)).normalized();
  double nnorm = 0.0;
  for (int it = 0; it < 30; ++it) {
    const Eigen::VectorXd nv = normal(v);
    nnorm = nv.norm();
    if (nnorm == 0.0) break;
    v = nv / nnorm;
  }
  if (nnorm == 0.0) throw PreconditionError("recover_gamma: cone samples carry no information");

  GammaEstimate est{grid, {}, {}, {}, {}};
  est.diagnostics.lambda = options.reg * nnorm;
  const Eigen::VectorXd rhs = adjoint(std::vector<cplx>(gamma_hat.begin(), gamma_hat.end()));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(Eigen::Index(nu));
  const double lambda = est.diagnostics.lambda;
  const auto cg = conjugate_gradient(
      [&](const Eigen::VectorXd& y) -> Eigen::VectorXd { return normal(y) + lambda * penalty(y); },
      rhs, x, options.tol, options.max_iterations);
  est.diagnostics.cg_iterations = cg.iterations;
  if (!cg.converged)
    throw ConvergenceError("recover_gamma: conjugate gradients did not converge", cg.relative_residual);

  const auto fq = forward(x);
  Eigen::VectorXd q(x.size());
  for (std::size_t s = 0; s < nu; ++s) q[Eigen::Index(s)] = scale[s] * x[Eigen::Index(s)];
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += w[i] * std::norm(fq[i] - gamma_hat[i]);
    den += w[i] * std::norm(gamma_hat[i]);
  }
  est.diagnostics.data_residual = den > 0.0 ? std::sqrt(num / den) : 0.0;

  est.values.assign(grid.size(), 0.0);
  est.q.assign(grid.size(), 0.0);
  est.mask.assign(grid.size(), false);
  const double qmax = q.cwiseAbs().maxCoeff();
  std::size_t kept = 0;
  for (std::size_t s = 0; s < nu; ++s) {
    const std::size_t v = unknowns[s];
    est.q[v] = q[Eigen::Index(s)];
    if (qmax > 0.0 && std::abs(q[Eigen::Index(s)]) > options.q_threshold * qmax) {
      est.values[v] = split.beta[v] / q[Eigen::Index(s)];
      est.mask[v] = true;
      ++kept;
    }
  }
  est.diagnostics.mask_fraction = double(kept) / double(grid.size());
  double kmax = 0.0;
  for (const auto& s : sampling.samples) kmax = std::max(kmax, s.k.norm());
  std::ostringstream note;
  note << "limited data: the cone reaches |k| <= " << kmax
       << "; features below length " << (kmax > 0.0 ? kPi / kmax : 0.0)
       << " and directions outside the cone are set by the regularization";
  est.diagnostics.note = note.str();
  return est;
}

void write_gamma_hat_csv(const std::filesystem::path& path, const ConeSampling& sampling,
                         std::span<const cplx> gamma_hat) {
  if (gamma_hat.size() != sampling.size()) throw PreconditionError("write_gamma_hat_csv: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "kx,ky,kz,re_gamma_hat,im_gamma_hat\n";
  for (std::size_t n = 0; n < sampling.size(); ++n) {
    const Vec3& k = sampling.samples[n].k;
    out << format_double(k[0]) << ',' << format_double(k[1]) << ',' << format_double(k[2]) << ','
        << format_double(gamma_hat[n].real()) << ',' << format_double(gamma_hat[n].imag()) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_gamma_estimate(const std::filesystem::path& stem, const GammaEstimate& estimate) {
  VolumeData data{estimate.grid, {}, false, false, estimate.values, {}};
  write_volume(stem, data);
  std::filesystem::path diag = stem;
  diag += "_diagnostics.txt";
  std::ofstream out(diag);
  if (!out) throw IoError("cannot write " + diag.string());
  const auto& d = estimate.diagnostics;
  out << "data_residual: " << format_double(d.data_residual) << '\n'
      << "mask_fraction: " << format_double(d.mask_fraction) << '\n'
      << "lambda: " << format_double(d.lambda) << '\n'
      << "cg_iterations: " << d.cg_iterations << '\n'
      << "neumann_iterations: " << d.neumann_iterations << '\n'
      << "operator_norm: " << format_double(d.operator_norm) << '\n'
      << "note: " << d.note << '\n';
  if (!out) throw IoError("write failed for " + diag.string());
}

}  // namespace pactomo
