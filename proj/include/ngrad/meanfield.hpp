#pragma once

#include "ngrad/nets.hpp"
#include "ngrad/quadrature.hpp"

namespace ngrad::meanfield {

/// Per-layer theory trace. Index 0 of A is the input activity A^0; layer l
/// (1-based) lives at tau2[l-1], chi[l-1]. chi_prod[l-1] is the running
/// product chi^L_l = chi^L * ... * chi^l.
struct MeanFieldTrace {
  Vec A;         // size L+1
  Vec tau2;      // size L
  Vec chi;       // size L
  Vec chi_prod;  // size L
  std::vector<bool> chaotic;  // chi^l > 1 per layer
};

struct ActivityStep {
  double A_next;
  double tau2;
};

/// One step of the activity recursion: tau2 = sigma_w2 * A_prev + sigma_b2,
/// A_next = E[phi(tau v)^2]. Closed forms for Linear and ReLU, quadrature
/// otherwise. Throws on negative inputs.
ActivityStep activity_step(double A_prev, double sigma_w2, double sigma_b2,
                           Activation act, int quad_order = quad::kDefaultOrder);

/// Enlargement factor chi = sigma_w2 * E[phi'(tau v)^2].
double chi_step(double A_prev, double sigma_w2, double sigma_b2, Activation act,
                int quad_order = quad::kDefaultOrder);

/// Full per-layer trace for a net config, starting from input activity A0
/// (defaults to 1: standardized inputs).
MeanFieldTrace propagate(const nets::NetConfig& config, double A0 = 1.0,
                         int quad_order = quad::kDefaultOrder);

/// Residual block activity: A_next = sigma_v2 * E[phi(tau v)^2] + alpha^2 * A_prev.
double resnet_activity_step(double A_prev, double sigma_w2, double sigma_b2,
                            double sigma_v2, double alpha, Activation act,
                            int quad_order = quad::kDefaultOrder);

/// Residual enlargement factor: chi_bar = sigma_v2 * chi + alpha.
double resnet_chi(double chi_base, double sigma_v2, double alpha);

/// Residual per-block trace; `diverged` is set when the activity sequence is
/// still strictly growing at the last block (alpha >= 1 territory).
struct ResnetTrace {
  Vec A;        // size L+1
  Vec tau2;     // size L
  Vec chi_bar;  // size L
  bool diverged = false;
};
ResnetTrace resnet_propagate(const nets::ResNetConfig& config, double A0 = 1.0,
                             int quad_order = quad::kDefaultOrder);

/// Fixed point of the activity map, |dA| < 1e-9 or 10^4 iterations.
struct FixedPoint {
  double A = 0.0;
  bool converged = false;
  int iterations = 0;
};
FixedPoint fixed_point_activity(double A0, double sigma_w2, double sigma_b2,
                                Activation act, int quad_order = quad::kDefaultOrder);

}  // namespace ngrad::meanfield
