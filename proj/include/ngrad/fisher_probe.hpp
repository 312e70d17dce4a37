#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ngrad/nets.hpp"

namespace ngrad::fisher {

/// Flat indexing of all parameters. Layers are 1-based; within a layer the
/// units are contiguous blocks of n_{l-1}+1 slots, slots 0..n_{l-1}-1 for the
/// incoming weights, the last slot for the bias (the augmented coordinate).
class ParamIndexer {
 public:
  explicit ParamIndexer(const std::vector<int>& layer_widths);

  std::int64_t total() const { return total_; }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int units(int layer) const { return widths_[layer]; }
  int slots(int layer) const { return widths_[layer - 1] + 1; }

  std::int64_t flat(int layer, int unit, int slot) const;

  struct Block {
    std::int64_t begin, end;  // [begin, end)
  };
  Block block(int layer, int unit) const;

  struct Entry {
    int layer, unit, slot;
  };
  Entry unflatten(std::int64_t index) const;

 private:
  std::vector<int> widths_;
  std::vector<std::int64_t> layer_offsets_;
  std::int64_t total_ = 0;
};

/// Per-output-unit coefficient matrices C_l (n_L x n_l) with
/// C_l(o, i) = dx^L_o / du^l_i, from which every parameter gradient is
/// dx^L_o / dw^l_{ij} = C_l(o, i) * x^{l-1}_j (bias slot: x = 1).
std::vector<Mat> output_coefficients(const nets::ForwardTrace& trace,
                                     const nets::NetworkParams& params);
std::vector<Mat> output_coefficients_resnet(const nets::ForwardTrace& trace,
                                            const nets::NetworkParams& params,
                                            const std::vector<Mat>& mixers,
                                            const nets::ResNetConfig& config);

/// Dense n_L x P Jacobian of the network outputs w.r.t. all parameters,
/// computed by reverse accumulation through the layer Jacobians.
Mat grad_outputs(const nets::ForwardTrace& trace, const nets::NetworkParams& params);
Mat grad_outputs_resnet(const nets::ForwardTrace& trace, const nets::NetworkParams& params,
                        const std::vector<Mat>& mixers, const nets::ResNetConfig& config);

struct FisherOptions {
  std::int64_t n_samples = 10000;
  std::uint64_t seed = 0;
  int batches = 10;             // jackknife groups
  std::int64_t max_params = 20000;  // refuse to materialize beyond this
  double input_scale = 1.0;     // x ~ input_scale * N(0, I)
};

/// Monte-Carlo estimate of G = E_x[ sum_o (dx^L_o/dtheta)(dx^L_o/dtheta)^T ]
/// with x ~ N(0, I_{n_0}); `se` holds per-entry standard errors from the
/// batch means. Symmetric PSD by construction.
struct EmpiricalFisher {
  Mat matrix;
  Mat se;
  ParamIndexer index;
  std::int64_t n_samples = 0;
  std::string input_dist;
};
EmpiricalFisher estimate_fisher(const nets::NetworkParams& params,
                                const FisherOptions& opt);

/// Monte-Carlo check of sum_{i_L} B^{i_L}_{i_m} B^{i_L}_{i'_m}: the diagonal
/// mean should approach the theory product chi^L_{m+1}, the off-diagonal rms
/// should be O(1/sqrt(n)).
struct DominoStats {
  int m = 0;
  double diag_mean = 0.0;
  double offdiag_rms = 0.0;
  double theory_chi_prod = 0.0;
};
DominoStats domino_check(const nets::NetworkParams& params, int m,
                         std::int64_t n_samples, std::uint64_t seed);

/// Per-width magnitudes of the empirical Fisher, streamed (never materializes
/// the matrix). Diagonal entries are accumulated exhaustively; off-block
/// entries are sampled per stratum and recombined with their true element
/// fractions. The `same-slot` stripe (two units, one input slot) carries the
/// O(1/sqrt(n)) mass, so uniform element sampling would miss it.
struct DecayRow {
  int width = 0;
  double rms_diag = 0.0;            // diagonal entries, layers with >= 2 units
  double rms_off_same_layer = 0.0;  // off-unit blocks within a layer
  double rms_off_cross_layer = 0.0;
  double rms_stripe = 0.0;          // same-slot stratum alone
  double rms_bulk = 0.0;            // different-slot stratum alone
};
struct BlockDecayReport {
  std::vector<DecayRow> rows;
  double fitted_slope = 0.0;  // log(rms_off_same/rms_diag) vs log(width); needs >= 3 widths
};

/// Widths substitute for every template width equal to the template's first
/// entry; other widths (e.g. a 1-unit readout) are kept as written.
BlockDecayReport block_decay_scan(const std::vector<int>& widths,
                                  const nets::NetConfig& config_template,
                                  std::int64_t n_samples, std::uint64_t seed,
                                  int pairs_per_stratum = 1500);

/// Same scan over residual blocks with fixed mixers (gradients w.r.t. W, b).
BlockDecayReport block_decay_scan_resnet(const std::vector<int>& widths,
                                         const nets::ResNetConfig& config_template,
                                         std::int64_t n_samples, std::uint64_t seed,
                                         int pairs_per_stratum = 1500);

/// The non-closure construction: G = I + B/sqrt(n) with standard normal B.
/// Off-diagonal rms of G^2 stays a constant factor (~sqrt(5)) above G's even
/// though both shrink as 1/sqrt(n).
struct NonclosureReport {
  int n = 0;
  double offdiag_rms_g = 0.0;
  double offdiag_rms_g2 = 0.0;
  double ratio = 0.0;
};
NonclosureReport nonclosure_from(const Mat& b);
NonclosureReport nonclosure_demo(int n, std::uint64_t seed, int reps = 8);

/// Decoupling E[f(u) w_i w_j] vs E[f(u)] E[w_i w_j] for u = sum_k w_k x_k,
/// f = phi'^2, fixed x ~ N(0, I_n), w ~ N(0, sigma_w2/n). Diagonal gaps are
/// pooled over all i, off-diagonal over `n_pairs` adjacent pairs.
struct SelfAvgReport {
  int n = 0;
  std::int64_t n_samples = 0;
  double e_f = 0.0;
  double offdiag_gap = 0.0;   // pooled over pairs
  double offdiag_se = 0.0;    // jackknife over sample batches
  double diag_gap = 0.0;      // pooled signed gap
  double diag_gap_scale = 0.0;  // mean_i |gap_ii|
  double diag_gap_rel = 0.0;  // |diag_gap| / (E[f] sigma_w2 / n)
};
SelfAvgReport self_averaging_check(int n, Activation act, std::int64_t n_samples,
                                   std::uint64_t seed, double sigma_w2 = 2.0,
                                   int n_pairs = 256);

}  // namespace ngrad::fisher
