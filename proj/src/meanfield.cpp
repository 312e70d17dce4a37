#include "ngrad/meanfield.hpp"

#include <cmath>

namespace ngrad::meanfield {

namespace {

void check_nonnegative(double A_prev, double sigma_w2, double sigma_b2) {
  if (!(A_prev >= 0.0)) throw ConfigError("activity: A_prev must be >= 0");
  if (!(sigma_w2 >= 0.0) || !(sigma_b2 >= 0.0))
    throw ConfigError("activity: negative variance input");
}

double expect_phi2(double tau2, Activation act, int quad_order) {
  if (tau2 == 0.0) {
    const double p0 = phi(act, 0.0);
    return p0 * p0;
  }
  const double tau = std::sqrt(tau2);
  switch (act) {
    case Activation::Linear:
      return tau2;
    case Activation::ReLU:
      // E[relu(tau v)^2] = tau^2 * E[v^2 ; v > 0] = tau^2 / 2
      return 0.5 * tau2;
    default: {
      quad::GaussianExpectation rule(quad_order);
      return rule.expect([&](double v) {
        const double p = phi(act, tau * v);
        return p * p;
      }, 0.0, 1.0 / tau);
    }
  }
}

double expect_dphi2(double tau2, Activation act, int quad_order) {
  if (tau2 == 0.0) {
    const double d0 = dphi(act, 0.0);
    return d0 * d0;
  }
  const double tau = std::sqrt(tau2);
  switch (act) {
    case Activation::Linear:
      return 1.0;
    case Activation::ReLU:
      return 0.5;  // P(v > 0)
    default: {
      quad::GaussianExpectation rule(quad_order);
      return rule.expect([&](double v) {
        const double d = dphi(act, tau * v);
        return d * d;
      }, 0.0, 1.0 / tau);
    }
  }
}

}  // namespace

ActivityStep activity_step(double A_prev, double sigma_w2, double sigma_b2,
                           Activation act, int quad_order) {
  check_nonnegative(A_prev, sigma_w2, sigma_b2);
  const double tau2 = sigma_w2 * A_prev + sigma_b2;
  return {expect_phi2(tau2, act, quad_order), tau2};
}

double chi_step(double A_prev, double sigma_w2, double sigma_b2, Activation act,
                int quad_order) {
  check_nonnegative(A_prev, sigma_w2, sigma_b2);
  const double tau2 = sigma_w2 * A_prev + sigma_b2;
  return sigma_w2 * expect_dphi2(tau2, act, quad_order);
}

MeanFieldTrace propagate(const nets::NetConfig& config, double A0, int quad_order) {
  config.validate();
  if (!(A0 >= 0.0)) throw ConfigError("propagate: A0 must be >= 0");
  const int L = config.num_layers();
  MeanFieldTrace t;
  t.A.resize(L + 1);
  t.tau2.resize(L);
  t.chi.resize(L);
  t.chi_prod.resize(L);
  t.chaotic.resize(L);
  t.A[0] = A0;
  for (int l = 0; l < L; ++l) {
    const auto step = activity_step(t.A[l], config.sigma_w2[l], config.sigma_b2[l],
                                    config.activation, quad_order);
    t.A[l + 1] = step.A_next;
    t.tau2[l] = step.tau2;
    t.chi[l] = chi_step(t.A[l], config.sigma_w2[l], config.sigma_b2[l],
                        config.activation, quad_order);
    t.chaotic[l] = t.chi[l] > 1.0;
  }
  // chi^L_l telescopes from the top: chi^L_l = chi^L_{l+1} * chi^l.
  double prod = 1.0;
  for (int l = L - 1; l >= 0; --l) {
    prod *= t.chi[l];
    t.chi_prod[l] = prod;
  }
  return t;
}

double resnet_activity_step(double A_prev, double sigma_w2, double sigma_b2,
                            double sigma_v2, double alpha, Activation act,
                            int quad_order) {
  check_nonnegative(A_prev, sigma_w2, sigma_b2);
  if (!(sigma_v2 >= 0.0)) throw ConfigError("resnet activity: negative sigma_v2");
  const double tau2 = sigma_w2 * A_prev + sigma_b2;
  return sigma_v2 * expect_phi2(tau2, act, quad_order) + alpha * alpha * A_prev;
}

double resnet_chi(double chi_base, double sigma_v2, double alpha) {
  if (!(chi_base >= 0.0) || !(sigma_v2 >= 0.0) || !(alpha >= 0.0))
    throw ConfigError("resnet_chi: inputs must be >= 0");
  return sigma_v2 * chi_base + alpha;
}

ResnetTrace resnet_propagate(const nets::ResNetConfig& config, double A0,
                             int quad_order) {
  const int L = config.base.num_layers();
  ResnetTrace t;
  t.A.resize(L + 1);
  t.tau2.resize(L);
  t.chi_bar.resize(L);
  t.A[0] = A0;
  for (int l = 0; l < L; ++l) {
    const double sw2 = config.base.sigma_w2[l];
    const double sb2 = config.base.sigma_b2[l];
    t.tau2[l] = sw2 * t.A[l] + sb2;
    t.A[l + 1] = resnet_activity_step(t.A[l], sw2, sb2, config.sigma_v2,
                                      config.alpha, config.base.activation,
                                      quad_order);
    const double chi = chi_step(t.A[l], sw2, sb2, config.base.activation, quad_order);
    t.chi_bar[l] = resnet_chi(chi, config.sigma_v2, config.alpha);
  }
  // Diverging when the last growth ratio exceeds 1 and is not decaying
  // toward a fixed point.
  if (L >= 2 && t.A[L - 1] > 0.0 && t.A[L - 2] > 0.0) {
    const double r_last = t.A[L] / t.A[L - 1];
    const double r_prev = t.A[L - 1] / t.A[L - 2];
    t.diverged = r_last > 1.0 + 1e-9 && r_last >= 0.999 * r_prev;
  }
  return t;
}

FixedPoint fixed_point_activity(double A0, double sigma_w2, double sigma_b2,
                                Activation act, int quad_order) {
  constexpr double tol = 1e-9;
  constexpr int max_iter = 10000;
  FixedPoint fp;
  fp.A = A0;
  for (int i = 0; i < max_iter; ++i) {
    const double next = activity_step(fp.A, sigma_w2, sigma_b2, act, quad_order).A_next;
    const double delta = std::abs(next - fp.A);
    fp.A = next;
    fp.iterations = i + 1;
    if (delta < tol) {
      fp.converged = true;
      break;
    }
  }
  return fp;
}

}  // namespace ngrad::meanfield
