#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>

namespace pactomo {

struct IterativeResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES(m) for A x = b with a matrix-free complex operator.
/// `x` holds the initial guess on entry.
template <class Apply>
IterativeResult gmres(const Apply& apply, const Eigen::VectorXcd& b, Eigen::VectorXcd& x,
                      double tol, std::size_t max_iterations, std::size_t restart = 40) {
  using Eigen::VectorXcd;
  IterativeResult result;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }
  const Eigen::Index n = b.size();
  while (result.iterations < max_iterations) {
    VectorXcd r = b - apply(x);
    double beta = r.norm();
    result.relative_residual = beta / bnorm;
    if (result.relative_residual <= tol) {
      result.converged = true;
      return result;
    }
    const std::size_t m = restart;
    Eigen::MatrixXcd V(n, Eigen::Index(m + 1));
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(Eigen::Index(m + 1), Eigen::Index(m));
    Eigen::VectorXcd cs = Eigen::VectorXcd::Zero(Eigen::Index(m));
    Eigen::VectorXcd sn = Eigen::VectorXcd::Zero(Eigen::Index(m));
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(Eigen::Index(m + 1));
    V.col(0) = r / beta;
    g(0) = beta;
    Eigen::Index k = 0;
    for (; k < Eigen::Index(m) && result.iterations < max_iterations; ++k) {
      ++result.iterations;
      VectorXcd w = apply(V.col(k));
      for (Eigen::Index j = 0; j <= k; ++j) {  // modified Gram-Schmidt
        H(j, k) = V.col(j).dot(w);
        w -= H(j, k) * V.col(j);
      }
      H(k + 1, k) = w.norm();
      if (std::abs(H(k + 1, k)) > 0.0) V.col(k + 1) = w / H(k + 1, k);
      for (Eigen::Index j = 0; j < k; ++j) {  // apply previous Givens rotations
        const auto t = std::conj(cs(j)) * H(j, k) + std::conj(sn(j)) * H(j + 1, k);
        H(j + 1, k) = -sn(j) * H(j, k) + cs(j) * H(j + 1, k);
        H(j, k) = t;
      }
      const double denom = std::hypot(std::abs(H(k, k)), std::abs(H(k + 1, k)));
      cs(k) = H(k, k) / denom;
      sn(k) = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = std::conj(cs(k)) * g(k);
      result.relative_residual = std::abs(g(k + 1)) / bnorm;
      if (result.relative_residual <= tol) {
        ++k;
        break;
      }
    }
    Eigen::VectorXcd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    x += V.leftCols(k) * y;
    if (result.relative_residual <= tol) {
      result.relative_residual = (b - apply(x)).norm() / bnorm;
      result.converged = result.relative_residual <= 10.0 * tol;
      if (result.converged) return result;
    }
  }
  return result;
}

/// Conjugate gradients for a symmetric positive definite real operator.
template <class Apply>
IterativeResult conjugate_gradient(const Apply& apply, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                                   double tol, std::size_t max_iterations) {
  IterativeResult result;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }
  Eigen::VectorXd r = b - apply(x);
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  while (result.iterations < max_iterations) {
    result.relative_residual = std::sqrt(rr) / bnorm;
    if (result.relative_residual <= tol) {
      result.converged = true;
      return result;
    }
    ++result.iterations;
    const Eigen::VectorXd Ap = apply(p);
    const double alpha = rr / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  result.relative_residual = std::sqrt(rr) / bnorm;
  result.converged = result.relative_residual <= tol;
  return result;
}

}  // namespace pactomo
