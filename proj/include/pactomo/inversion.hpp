#pragma once

#include "pactomo/pat_detector.hpp"

#include <filesystem>
#include <string>

namespace pactomo {

/// Options of the discrete Hilbert transform.
struct KramersKronigOptions {
  /// Zero padding factor of the FFT buffer.
  std::size_t padding = 8;
  /// Fraction of the lattice at each end under the cosine taper.
  double taper_fraction = 0.1;
};

/// KK[g](nu) = -(1/pi) PV int g(s) / (s - nu) ds on a uniform lattice, by the
/// FFT sign multiplier. A lattice with symmetric closure holds the nu >= 0
/// half of an even function (starting at 0 or at the spacing, in which case
/// g(0) is extrapolated); the odd result is returned on the stored points.
/// Otherwise the lattice is taken as given.
std::vector<double> kramers_kronig(const FrequencyLattice& lattice, std::span<const double> g,
                                   const KramersKronigOptions& options = {});

/// One cone sample k = (nu/c)(theta + e3) with its quadrature weight
/// (nu^2/c^3)(1 + theta3) dnu dS(theta).
struct ConeSample {
  std::size_t frequency_index;
  std::size_t direction_index;
  double nu;
  Vec3 theta;
  Vec3 k;
  double weight;
};

struct ConeSampling {
  std::vector<ConeSample> samples;
  std::size_t size() const { return samples.size(); }
};

/// Cone samples nu-major over `frequencies` (indices into that list, skipping
/// `excluded`) and `directions`, each direction carrying the solid angle
/// `direction_weight`. Frequency weights are trapezoid weights of the list.
ConeSampling make_cone_sampling(std::span<const double> frequencies,
                                std::span<const Vec3> directions, double direction_weight,
                                double c = kDefaultLightSpeed,
                                std::span<const std::size_t> excluded = {});

/// Bracket p~ + i KK[p~] for every (nu, voxel) of the record, nu-major.
std::vector<cplx> pat_bracket(const PATRecord& record, const KramersKronigOptions& options = {});

/// K[p~](nu_m, theta; y_v) from a precomputed bracket.
cplx kernel_K(const PATRecord& record, std::span<const cplx> bracket, std::size_t m,
              const Vec3& theta, std::size_t voxel, double c = kDefaultLightSpeed);

/// int K[p~](nu, theta; y) gamma_inv(y) dy for every cone sample (midpoint rule).
std::vector<cplx> apply_forward(const PATRecord& record, std::span<const double> gamma_inv,
                                const ConeSampling& sampling, std::size_t workers = 1);

struct MaterialSplit {
  Grid3 grid;
  std::vector<double> frequencies;
  std::vector<double> alpha;      ///< unit norm
  std::vector<double> beta;       ///< per voxel, sum >= 0
  std::vector<double> residual;   ///< epsilon, nu-major
  std::vector<cplx> profile;      ///< A(nu) = alpha + i KK[alpha]
  std::vector<double> singular_values;
  std::vector<std::size_t> dropped;  ///< frequencies where A vanishes
  double residual_norm = 0.0;        ///< Frobenius norm of epsilon
};

/// Dominant singular pair of the (nu x voxel) matrix of p~.
MaterialSplit material_split(const PATRecord& record, double profile_tol = 1e-8,
                             const KramersKronigOptions& options = {});

/// h^(k) = h~(nu, theta) / A(nu) for each sample; `h_tilde` is given per sample.
std::vector<cplx> normalized_data(std::span<const cplx> h_tilde, const MaterialSplit& split,
                                  const ConeSampling& sampling);

/// Discretized operator Gamma -> (1/A(nu)) int K^(k; kappa) Gamma(kappa) dkappa on
/// the cone with
///   K^(k; kappa) = (2 pi)^{-3} int K[epsilon](nu, theta; y) e^{i <kappa, y>} dy.
class FredholmOperator {
 public:
  FredholmOperator(const MaterialSplit& split, const ConeSampling& sampling,
                   std::size_t workers = 1, const KramersKronigOptions& options = {});
  ~FredholmOperator();
  FredholmOperator(FredholmOperator&&) noexcept;
  FredholmOperator& operator=(FredholmOperator&&) noexcept;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& gamma) const;
  /// Adjoint in the weighted inner product sum_n w_n conj(u_n) v_n.
  Eigen::VectorXcd adjoint(const Eigen::VectorXcd& u) const;
  /// Power-iteration estimate of the weighted operator norm.
  double norm_estimate(std::size_t iterations = 40, std::uint64_t seed = 1) const;
  /// Weighted norm sqrt(sum_n w_n |v_n|^2).
  double weighted_norm(const Eigen::VectorXcd& v) const;
  std::size_t size() const;
  bool is_zero() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct FredholmOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 500;
  bool gmres_fallback = true;
  std::size_t norm_iterations = 40;
  std::size_t workers = 1;
};

struct FredholmResult {
  std::vector<cplx> gamma_hat;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  double operator_norm = 0.0;
  bool used_gmres = false;
};

/// Solves Gamma + T Gamma = h^ on the cone. Throws PreconditionError when A
/// vanishes at a used frequency and ConvergenceError (carrying the norm
/// estimate) when the operator is not a contraction.
FredholmResult fredholm_solve(std::span<const cplx> h_hat, const MaterialSplit& split,
                              const ConeSampling& sampling, const FredholmOptions& options = {});

/// Penalty of the regularized least-squares fit.
enum class GammaPenalty {
  /// lambda |q|^2
  amplitude,
  /// q = beta g with lambda sum over neighbouring unknown voxels (g_a - g_b)^2;
  /// constant gamma carries no penalty.
  inverse_gradient,
};

struct GammaOptions {
  GammaPenalty penalty = GammaPenalty::inverse_gradient;
  /// Tikhonov weight relative to the norm of the weighted normal operator.
  double reg = 1e-3;
  /// Voxels with |beta| above this fraction of max |beta| are unknowns.
  double beta_threshold = 1e-6;
  /// gamma is reported where |q| exceeds this fraction of max |q|.
  double q_threshold = 0.05;
  double tol = 1e-10;
  std::size_t max_iterations = 2000;
  std::size_t workers = 1;
};

struct GammaDiagnostics {
  double data_residual = 0.0;   ///< weighted relative misfit of F q against Gamma
  double mask_fraction = 0.0;   ///< reported voxels / grid size
  double lambda = 0.0;          ///< absolute Tikhonov weight used
  std::size_t cg_iterations = 0;
  std::size_t neumann_iterations = 0;
  double operator_norm = 0.0;
  std::string note;
};

struct GammaEstimate {
  Grid3 grid;
  std::vector<double> values;  ///< gamma, 0 outside the mask
  std::vector<double> q;       ///< beta / gamma on the unknown voxels, 0 elsewhere
  std::vector<bool> mask;
  GammaDiagnostics diagnostics;
};

/// Regularized least-squares estimate of q = beta / gamma from
/// Gamma(k) = int q(y) e^{-i <k, y>} dy on the cone, then gamma = beta / q.
/// The weighted normal equations are solved by conjugate gradients.
GammaEstimate recover_gamma(std::span<const cplx> gamma_hat, const MaterialSplit& split,
                            const ConeSampling& sampling, const GammaOptions& options = {});

/// CSV with header kx,ky,kz,re_gamma_hat,im_gamma_hat.
void write_gamma_hat_csv(const std::filesystem::path& path, const ConeSampling& sampling,
                         std::span<const cplx> gamma_hat);

/// gamma as a real volume plus `<stem>_diagnostics.txt`.
void write_gamma_estimate(const std::filesystem::path& stem, const GammaEstimate& estimate);

}  // namespace pactomo
