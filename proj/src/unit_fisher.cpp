#include "ngrad/unit_fisher.hpp"

#include <cmath>
#include <limits>

namespace ngrad::unit_fisher {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

}  // namespace

Coeffs derive_inverse(double A00, double A0n, double Ann, double damping) {
  Coeffs c;
  c.A00 = A00;
  c.A0n = A0n;
  c.Ann = Ann;
  const double a00 = A00 + damping;
  const double ann = Ann + damping;
  const double d = a00 * ann - A0n * A0n;
  c.D = d;
  c.invertible = a00 > kEpsA && d > kEpsD * std::max(a00 * ann, kEpsA);
  if (c.invertible) {
    c.Abar00 = 1.0 / a00;
    c.X = a00 / d - c.Abar00;
    c.Y = -A0n / d;
    c.Z = ann / d - c.Abar00;
  } else {
    c.Abar00 = c.X = c.Y = c.Z = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

Coeffs coeffs_relu(double w_norm, double w0, double damping) {
  if (w_norm < 0.0) throw ConfigError("coeffs_relu: negative weight norm");
  if (w_norm < kNormEps) {
    const double on = w0 > 0.0 ? 1.0 : 0.0;
    return derive_inverse(on, 0.0, on, damping);
  }
  const double r = w0 / w_norm;
  const double A00 = normal_cdf(r);
  const double A0n = kInvSqrt2Pi * std::exp(-0.5 * r * r);
  const double Ann = A00 - r * A0n;
  return derive_inverse(A00, A0n, Ann, damping);
}

Coeffs coeffs_quadrature(double w_norm, double w0, Activation act, double damping,
                         int quad_order) {
  if (w_norm < 0.0) throw ConfigError("coeffs_quadrature: negative weight norm");
  if (w_norm < kNormEps) {
    const double d0 = dphi(act, w0);
    return derive_inverse(d0 * d0, 0.0, d0 * d0, damping);
  }
  const quad::GaussianExpectation rule(quad_order);
  const double kink = -w0 / w_norm;
  const double width = 1.0 / w_norm;
  const bool split = has_kink(act);
  auto moment = [&](int p) {
    return rule.expect(
        [&](double v) {
          const double d = dphi(act, w_norm * v + w0);
          double f = d * d;
          for (int q = 0; q < p; ++q) f *= v;
          return f;
        },
        kink, width, split);
  };
  return derive_inverse(moment(0), moment(1), moment(2), damping);
}

Coeffs coeffs(double w_norm, double w0, Activation act, double damping,
              int quad_order) {
  switch (act) {
    case Activation::Linear:
      return derive_inverse(1.0, 0.0, 1.0, damping);
    case Activation::ReLU:
      return coeffs_relu(w_norm, w0, damping);
    default:
      return coeffs_quadrature(w_norm, w0, act, damping, quad_order);
  }
}

Mat assemble_G(const Coeffs& c, const UnitWeights& u) {
  const int n = u.dim();
  Mat g = Mat::Zero(n + 1, n + 1);
  g.diagonal().setConstant(c.A00);
  const double w = u.norm();
  if (w >= kNormEps) {
    g.topLeftCorner(n, n) += ((c.Ann - c.A00) / (w * w)) * (u.w * u.w.transpose());
    g.topRightCorner(n, 1) += (c.A0n / w) * u.w;
    g.bottomLeftCorner(1, n) += (c.A0n / w) * u.w.transpose();
  }
  return g;
}

Mat assemble_Ginv(const Coeffs& c, const UnitWeights& u) {
  if (!c.invertible) throw SingularFisher("assemble_Ginv: singular unit Fisher");
  const int n = u.dim();
  Mat g = Mat::Zero(n + 1, n + 1);
  g.diagonal().setConstant(c.Abar00);
  g(n, n) += c.Z;
  const double w = u.norm();
  if (w >= kNormEps) {
    g.topLeftCorner(n, n) += (c.X / (w * w)) * (u.w * u.w.transpose());
    g.topRightCorner(n, 1) += (c.Y / w) * u.w;
    g.bottomLeftCorner(1, n) += (c.Y / w) * u.w.transpose();
  }
  return g;
}

Vec apply_Ginv(const Coeffs& c, const UnitWeights& u, const Eigen::Ref<const Vec>& xstar) {
  if (!c.invertible)
    throw SingularFisher("apply_Ginv: singular unit Fisher (D or A00 below floor)");
  const int n = u.dim();
  if (xstar.size() != n + 1)
    throw ConfigError("apply_Ginv: x* must have n+1 entries");
  const double x0 = xstar[n];
  Vec out = c.Abar00 * xstar;
  out[n] += c.Z * x0;
  const double w = u.norm();
  if (w >= kNormEps) {
    const double wx = u.w.dot(xstar.head(n));
    out.head(n) += (c.X / (w * w) * wx + c.Y / w * x0) * u.w;
    out[n] += c.Y / w * wx;
  }
  if (!out.allFinite()) throw NumericError("apply_Ginv: non-finite result");
  return out;
}

GinvStructure ginv_structure(const Coeffs& c, const UnitWeights& u) {
  const Mat g = assemble_Ginv(c, u);
  const int n = u.dim();
  GinvStructure s;
  s.diag_mass = g.diagonal().squaredNorm();
  s.rank1_mass = g.topLeftCorner(n, n).squaredNorm() -
                 g.topLeftCorner(n, n).diagonal().squaredNorm();
  s.bias_mass = g.topRightCorner(n, 1).squaredNorm() +
                g.bottomLeftCorner(1, n).squaredNorm();
  s.total = g.squaredNorm();
  return s;
}

}  // namespace ngrad::unit_fisher
