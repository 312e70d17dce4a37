#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ngrad/activation.hpp"
#include "ngrad/common.hpp"

namespace ngrad::nets {

/// Topology and initialization law of a random deep net.
/// Weights of layer l are N(0, sigma_w2[l-1] / n_{l-1}); biases are
/// N(0, sigma_b2[l-1]). Layers are 1-based, widths run n_0..n_L.
struct NetConfig {
  std::vector<int> layer_widths;
  std::vector<double> sigma_w2;
  std::vector<double> sigma_b2;
  Activation activation = Activation::ReLU;
  std::uint64_t seed = 0;

  int num_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
  int input_dim() const { return layer_widths.front(); }
  int output_dim() const { return layer_widths.back(); }

  /// Throws ConfigError on zero widths, negative variances, < 2 width entries
  /// or per-layer variance lists of the wrong length.
  void validate() const;

  static NetConfig make(std::vector<int> widths, double sigma_w2,
                        double sigma_b2, Activation act, std::uint64_t seed);
};

/// Residual stack of `base.num_layers()` blocks x^l = V phi(W x^{l-1} + b) + alpha x^{l-1}.
/// All block widths must be equal. Mixer entries are N(0, sigma_v2 / n).
struct ResNetConfig {
  NetConfig base;
  double sigma_v2 = 1.0;
  double alpha = 1.0;

  /// Warns on alpha >= 1 (activity diverges across blocks); throws on
  /// alpha outside [0, 1] or unequal widths.
  void validate() const;
};

struct NetworkParams {
  std::vector<Mat> weights;  // W^l: n_l x n_{l-1}
  std::vector<Vec> biases;   // b^l: n_l
  NetConfig config;

  std::int64_t parameter_count() const;
  bool all_finite() const;
};

/// Everything the backward passes need: u^l, x^l and phi'(u^l) per layer.
/// post[0] is the input; pre[l-1], post[l], dphi[l-1] belong to layer l.
struct ForwardTrace {
  std::vector<Vec> pre;
  std::vector<Vec> post;
  std::vector<Vec> dphi;

  const Vec& output() const { return post.back(); }
};

NetworkParams init_random(const NetConfig& config);

/// Fixed random mixers V^l for a residual stack, one n x n matrix per block.
std::vector<Mat> init_mixers(const ResNetConfig& config);

ForwardTrace forward(const NetworkParams& params, const Eigen::Ref<const Vec>& x0);

ForwardTrace forward_resnet(const NetworkParams& params, const std::vector<Mat>& mixers,
                            const ResNetConfig& config, const Eigen::Ref<const Vec>& x0);

/// B^l = d x^l / d x^{l-1} with entries phi'(u_i) w_ij; `layer` is 1-based.
Mat layer_jacobian(const ForwardTrace& trace, const NetworkParams& params, int layer);

/// Residual-block Jacobian B_ik = sum_j v_ij phi'(u_j) w_jk + alpha delta_ik.
Mat layer_jacobian_resnet(const ForwardTrace& trace, const NetworkParams& params,
                          const std::vector<Mat>& mixers, const ResNetConfig& config,
                          int layer);

// --- configuration and parameter files -------------------------------------

/// Net config plus the optional residual keys (sigma_v2, alpha).
struct ParsedConfig {
  NetConfig net;
  std::optional<double> sigma_v2;
  std::optional<double> alpha;

  bool is_resnet() const { return sigma_v2.has_value() || alpha.has_value(); }
  ResNetConfig resnet() const;
};

/// Key-value config file: `key = value` lines, '#' comments.
/// Keys: widths, sigma_w2, sigma_b2, sigma_v2, alpha, activation, seed.
/// Unknown keys are hard errors.
ParsedConfig load_config(const std::string& path);
void save_config(const ParsedConfig& config, const std::string& path);

/// Binary parameter file with a shape header; round-trips bit-exactly.
/// Mixers are stored when present (residual nets).
void save_params(const NetworkParams& params, const std::string& path,
                 const std::vector<Mat>* mixers = nullptr);

struct LoadedParams {
  NetworkParams params;
  std::vector<Mat> mixers;  // empty for plain nets
};
LoadedParams load_params(const std::string& path);

}  // namespace ngrad::nets
