#include "ngrad/activation.hpp"

namespace ngrad {

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "linear") return Activation::Linear;
  throw ConfigError("unknown activation: '" + std::string(name) +
                    "' (expected relu|tanh|sigmoid|linear)");
}

}  // namespace ngrad
