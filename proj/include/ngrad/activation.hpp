#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>

#include "ngrad/common.hpp"

namespace ngrad {

enum class Activation { ReLU, Tanh, Sigmoid, Linear };

template <typename Scalar>
  requires std::is_arithmetic_v<Scalar>
Scalar phi(Activation a, Scalar u) {
  switch (a) {
    case Activation::ReLU:
      return u > Scalar(0) ? u : Scalar(0);
    case Activation::Tanh:
      return std::tanh(u);
    case Activation::Sigmoid:
      return Scalar(1) / (Scalar(1) + std::exp(-u));
    case Activation::Linear:
      return u;
  }
  return Scalar(0);
}

// ReLU derivative at u == 0 is defined as 0 (measure-zero; matches the
// indicator form used for the closed-form Fisher integrals).
template <typename Scalar>
  requires std::is_arithmetic_v<Scalar>
Scalar dphi(Activation a, Scalar u) {
  switch (a) {
    case Activation::ReLU:
      return u > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::Tanh: {
      const Scalar t = std::tanh(u);
      return Scalar(1) - t * t;
    }
    case Activation::Sigmoid: {
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-u));
      return s * (Scalar(1) - s);
    }
    case Activation::Linear:
      return Scalar(1);
  }
  return Scalar(0);
}

inline Vec phi(Activation a, const Eigen::Ref<const Vec>& u) {
  return u.unaryExpr([a](double x) { return phi(a, x); });
}

inline Vec dphi(Activation a, const Eigen::Ref<const Vec>& u) {
  return u.unaryExpr([a](double x) { return dphi(a, x); });
}

/// True when phi' is discontinuous (quadrature has to split at the kink).
inline bool has_kink(Activation a) { return a == Activation::ReLU; }

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "?";
}

Activation activation_from_string(std::string_view name);

}  // namespace ngrad
