#pragma once

#include "ngrad/activation.hpp"
#include "ngrad/common.hpp"
#include "ngrad/quadrature.hpp"

namespace ngrad::unit_fisher {

// Fisher information of a single unit y = phi(w . x + w0) under x ~ N(0, I),
// in the augmented coordinates x* = (x, 1), w* = (w, w0). The bias occupies
// the LAST coordinate. G depends on w only through ||w||, via three Gaussian
// integrals along the w direction:
//   A00 = E[phi'(w v + w0)^2],  A0n = E[v phi'(...)^2],  Ann = E[v^2 phi'(...)^2].

struct UnitWeights {
  Vec w;
  double w0 = 0.0;

  double norm() const { return w.norm(); }
  int dim() const { return static_cast<int>(w.size()); }
};

struct Coeffs {
  double A00 = 0.0, A0n = 0.0, Ann = 0.0;
  // Inverse scalars (from possibly damped A00/Ann):
  //   Abar00 = 1/A00, D = A00*Ann - A0n^2,
  //   X = A00/D - Abar00, Y = -A0n/D, Z = Ann/D - Abar00.
  double Abar00 = 0.0, D = 0.0, X = 0.0, Y = 0.0, Z = 0.0;
  bool invertible = false;
};

inline constexpr double kEpsA = 1e-12;   // absolute floor on A00
inline constexpr double kEpsD = 1e-12;   // floor on D relative to A00*Ann
inline constexpr double kNormEps = 1e-12;  // below this ||w|| uses the w->0+ limit

/// Fills Abar00/D/X/Y/Z from (A00, A0n, Ann), with optional Tikhonov damping
/// added to A00 and Ann before inversion. Marks `invertible`.
Coeffs derive_inverse(double A00, double A0n, double Ann, double damping = 0.0);

/// ReLU closed forms: A00 = Phi(w0/w), A0n = exp(-(w0/w)^2/2)/sqrt(2 pi),
/// Ann = A00 - (w0/w) A0n, with Phi the standard normal CDF.
/// At ||w|| < kNormEps the w->0+ limit applies: A00 = Ann = [w0 > 0], A0n = 0.
Coeffs coeffs_relu(double w_norm, double w0, double damping = 0.0);

/// The three integrals by quadrature (any activation). ReLU integrands are
/// split at the kink v = -w0/w, which reproduces the closed forms to ~1e-14.
Coeffs coeffs_quadrature(double w_norm, double w0, Activation act,
                         double damping = 0.0, int quad_order = quad::kDefaultOrder);

/// Dispatch: closed forms for ReLU and Linear, quadrature otherwise.
Coeffs coeffs(double w_norm, double w0, Activation act, double damping = 0.0,
              int quad_order = quad::kDefaultOrder);

/// Dense (n+1) x (n+1) Fisher matrix in the original coordinates:
/// G = A00 I + ((Ann - A00)/w^2) wt wt^T + (A0n/w)(e0 wt^T + wt e0^T)
/// with wt = (w, 0) and e0 the bias axis (last coordinate).
Mat assemble_G(const Coeffs& c, const UnitWeights& u);

/// Dense inverse assembled from the closed-form scalars (for checks):
/// Ginv = Abar00 I + (X/w^2) wt wt^T + (Y/w)(e0 wt^T + wt e0^T) + Z e0 e0^T.
Mat assemble_Ginv(const Coeffs& c, const UnitWeights& u);

/// O(n) closed-form product G^{-1} x*. Throws SingularFisher when the
/// coefficients are not invertible (saturated unit); callers fall back to the
/// plain gradient for that unit.
Vec apply_Ginv(const Coeffs& c, const UnitWeights& u, const Eigen::Ref<const Vec>& xstar);

/// Support decomposition of G^{-1}: diagonal, off-diagonal rank-1 (wt wt^T)
/// part inside the x-block, and the bias row/column. The supports are
/// disjoint, so the squared Frobenius masses add up to ||Ginv||_F^2 exactly.
struct GinvStructure {
  double diag_mass = 0.0;    // squared Frobenius norm of the diagonal
  double rank1_mass = 0.0;   // off-diagonal x-block (the ww^T coupling)
  double bias_mass = 0.0;    // bias row + column, excluding the corner
  double total = 0.0;        // ||Ginv||_F^2
};
GinvStructure ginv_structure(const Coeffs& c, const UnitWeights& u);

}  // namespace ngrad::unit_fisher
