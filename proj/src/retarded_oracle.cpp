#include "pactomo/retarded_oracle.hpp"

#include "pactomo/error.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace pactomo {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
using Gauss7 = boost::math::quadrature::gauss<double, 7>;

struct Panel {
  double a, b;
  Vec3 value;
  double error;
  std::size_t depth;
};

// One G7-K15 panel; the error is the norm of the difference of the two rules.
template <class F>
Panel gk15(const F& f, double a, double b, std::size_t depth) {
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss7::weights();
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  const Vec3 f0 = f(mid);
  Vec3 kron = wk[0] * f0;
  Vec3 gauss = wg[0] * f0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const Vec3 s = f(mid - half * x[i]) + f(mid + half * x[i]);
    kron += wk[i] * s;
    if (i % 2 == 0) gauss += wg[i / 2] * s;
  }
  return {a, b, half * kron, half * (kron - gauss).norm(), depth};
}

// Product rule nodes over a polar cap alpha in [0, amax].
struct CapRule {
  std::vector<double> alpha, weight;  // Gauss-Legendre in alpha
  std::vector<double> cphi, sphi;     // trapezoid in phi
};

CapRule cap_rule(std::size_t polar, std::size_t azimuth) {
  // Gauss-Legendre nodes by Newton iteration on P_n.
  CapRule rule;
  const std::size_t n = polar;
  for (std::size_t i = 0; i < n; ++i) {
    double z = std::cos(kPi * (double(i) + 0.75) / (double(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * double(k) - 1.0) * z * p1 - (double(k) - 1.0) * p0) / double(k);
        p0 = p1;
        p1 = p2;
      }
      dp = double(n) * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    rule.alpha.push_back(z);
    rule.weight.push_back(2.0 / ((1.0 - z * z) * dp * dp));
  }
  for (std::size_t q = 0; q < azimuth; ++q) {
    const double phi = 2.0 * kPi * double(q) / double(azimuth);
    rule.cphi.push_back(std::cos(phi));
    rule.sphi.push_back(std::sin(phi));
  }
  return rule;
}

}  // namespace

Vec3 retarded_field_oracle(const RetardedSource& source, double t, const Vec3& x,
                           const RetardedOracleOptions& options,
                           const std::function<Vec3(double, const Vec3&)>& e0) {
  if (!(options.c > 0.0)) throw PreconditionError("retarded_field_oracle: c must be positive");
  if (!source.forcing && source.support_radius > 0.0)
    throw PreconditionError("retarded_field_oracle: missing forcing term");
  Vec3 result = e0 ? e0(t, x) : Vec3::Zero();
  const double c = options.c;
  const double rs = source.support_radius;
  if (!(rs > 0.0) || t <= 0.0) return result;

  const Vec3 offset = source.support_center - x;
  const double d = offset.norm();
  const double r_lo = std::max(0.0, d - rs);
  const double r_hi = std::min(c * t, d + rs);
  if (r_hi <= r_lo) return result;

  // Orthonormal frame with the third axis pointing at the support center.
  const Vec3 axis = d > 0.0 ? Vec3(offset / d) : Vec3::UnitZ();
  const Vec3 helper = std::abs(axis[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = axis.cross(helper).normalized();
  const Vec3 e2 = axis.cross(e1);
  const CapRule rule = cap_rule(options.polar_nodes, options.azimuth_nodes);
  const double dphi = 2.0 * kPi / double(options.azimuth_nodes);

  // r * int_{cap} f(t - r/c, x + r w) dw: the shell integral of f / r.
  auto shell = [&](double r) -> Vec3 {
    if (r <= 0.0) return Vec3::Zero();
    double amax = kPi;
    if (d > 0.0) {
      const double cmin = (r * r + d * d - rs * rs) / (2.0 * r * d);
      if (cmin >= 1.0) return Vec3::Zero();
      if (cmin > -1.0) amax = std::acos(cmin);
    } else if (r > rs) {
      return Vec3::Zero();
    }
    const double tr = t - r / c;
    Vec3 sum = Vec3::Zero();
    for (std::size_t i = 0; i < rule.alpha.size(); ++i) {
      const double a = 0.5 * amax * (rule.alpha[i] + 1.0);
      const double sa = std::sin(a), ca = std::cos(a);
      Vec3 ring = Vec3::Zero();
      for (std::size_t q = 0; q < rule.cphi.size(); ++q) {
        const Vec3 w = ca * axis + sa * (rule.cphi[q] * e1 + rule.sphi[q] * e2);
        ring += source.forcing(tr, x + r * w);
      }
      sum += (rule.weight[i] * sa) * ring;
    }
    return (0.5 * amax * dphi * r) * sum;
  };

  // Adaptive bisection over eight initial panels, summed in a fixed order.
  std::vector<Panel> work;
  const int initial = 8;
  for (int p = 0; p < initial; ++p) {
    const double a = r_lo + (r_hi - r_lo) * p / initial;
    const double b = r_lo + (r_hi - r_lo) * (p + 1) / initial;
    work.push_back(gk15(shell, a, b, 0));
  }
  std::vector<Panel> done;
  double scale = 0.0;
  for (const auto& p : work) scale += p.value.norm();
  while (!work.empty()) {
    Panel p = work.back();
    work.pop_back();
    const double allowed =
        std::max(options.abs_tol, options.rel_tol * scale) * (p.b - p.a) / (r_hi - r_lo);
    if (p.error <= allowed) {
      done.push_back(p);
      continue;
    }
    if (p.depth >= options.max_depth) {
      double estimate_err = p.error;
      Vec3 estimate = p.value;
      for (const auto& q : done) {
        estimate += q.value;
        estimate_err += q.error;
      }
      std::ostringstream msg;
      msg << "retarded_field_oracle: radial quadrature did not converge (estimate norm "
          << estimate.norm() << ", error bound " << estimate_err << ")";
      throw ConvergenceError(msg.str(), estimate_err);
    }
    const double m = 0.5 * (p.a + p.b);
    work.push_back(gk15(shell, m, p.b, p.depth + 1));
    work.push_back(gk15(shell, p.a, m, p.depth + 1));
  }
  std::sort(done.begin(), done.end(), [](const Panel& u, const Panel& v) { return u.a < v.a; });
  Vec3 integral = Vec3::Zero();
  for (const auto& p : done) integral += p.value;
  return result - integral;
}

// ---------------------------------------------------------------------------

Vec3 GaussianBlobCurrent::forcing(double t, const Vec3& y, double c) const {
  const Vec3 u = y - center;
  const double s2 = width * width;
  const double g = std::exp(-u.squaredNorm() / (2.0 * s2));
  const double dt = t - pulse_time;
  const double tau2 = pulse_width * pulse_width;
  const double p = std::exp(-dt * dt / (2.0 * tau2));
  const double p2 = (dt * dt / (tau2 * tau2) - 1.0 / tau2) * p;
  // grad rho = -P grad(u . grad G) = -P G (-dir / sigma^2 + (dir . u) u / sigma^4)
  const Vec3 grad_rho = -p * g * (-direction / s2 + (direction.dot(u) / (s2 * s2)) * u);
  return grad_rho + (p2 * g / (c * c)) * direction;
}

CVec3 GaussianBlobCurrent::current_spectrum(double omega, const Vec3& y) const {
  const double g = std::exp(-(y - center).squaredNorm() / (2.0 * width * width));
  const cplx fp = pulse_width * std::sqrt(2.0 * kPi) *
                  std::exp(-0.5 * omega * omega * pulse_width * pulse_width) *
                  std::polar(1.0, omega * pulse_time);
  const cplx fdp = cplx(0.0, -omega) * fp;  // F(P') = -i omega F(P)
  return (fdp * g) * direction.cast<cplx>();
}

RetardedSource GaussianBlobCurrent::source(double c, double sigmas) const {
  const GaussianBlobCurrent self = *this;
  return {[self, c](double t, const Vec3& y) { return self.forcing(t, y, c); }, center,
          sigmas * width};
}

}  // namespace pactomo
