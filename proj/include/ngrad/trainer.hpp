#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "ngrad/nets.hpp"
#include "ngrad/unit_fisher.hpp"

namespace ngrad::trainer {

enum class Optimizer { SGD, UnitNGD };

struct OptimizerConfig {
  Optimizer kind = Optimizer::SGD;
  double eta = 0.01;
  int batch_size = 32;
  double damping = 0.0;        // Tikhonov term added to A00/Ann before inversion
  bool polyak = false;
  int polyak_window = 1;
  bool compat_eq68_w0 = false; // multiply the bias update by w0 (literal paper form)
  int spot_check_every = 0;    // >0: compare one unit's step against a dense inverse

  void validate() const;
};

struct StepRecord {
  int step = 0;
  double loss = 0.0;       // batch loss before the update
  double step_norm = 0.0;  // ||delta theta||
  int singular_fallbacks = 0;
  double wall_ms = 0.0;
  double spot_check_rel_err = -1.0;  // -1 when not checked this step
};

struct TrainRecord {
  std::vector<StepRecord> steps;
  bool flagged = false;  // some step fell back on >= 50% of units
  double max_spot_check_err = 0.0;
};

struct Batch {
  Mat x;  // inputs, one column per sample
  Mat y;  // targets
  int size() const { return static_cast<int>(x.cols()); }
};

/// Backpropagated errors e^m at every level x^m, m = 0..L:
/// e^L = y - x^L, e^{m} = W_{m+1}^T (e^{m+1} .* phi'(u^{m+1})).
std::vector<Vec> backprop_errors(const nets::ForwardTrace& trace,
                                 const nets::NetworkParams& params,
                                 const Eigen::Ref<const Vec>& y);

/// Residual version: e^{l-1} = W_l^T (phi'(u^l) .* (V_l^T e^l)) + alpha e^l.
std::vector<Vec> backprop_errors_resnet(const nets::ForwardTrace& trace,
                                        const nets::NetworkParams& params,
                                        const std::vector<Mat>& mixers,
                                        const nets::ResNetConfig& config,
                                        const Eigen::Ref<const Vec>& y);

/// theta <- theta - eta * mean_batch dl/dtheta for l = 0.5 |y - x^L|^2.
StepRecord sgd_step(nets::NetworkParams& params, const Batch& batch, double eta);

/// Unit-wise natural gradient: per unit,
///   dw  = eta e phi'(u) [ Abar00 x + (X (w.x)/w^2 + Y/w) w ]
///   dw0 = eta e phi'(u) [ Abar00 + Y (w.x)/w + Z ]        (times w0 in compat mode)
/// with the inverse scalars from the unit's current (||w||, w0), computed once
/// per step. Singular units (SingularFisher) fall back to the plain gradient
/// and are counted.
StepRecord unit_ngd_step(nets::NetworkParams& params, const Batch& batch,
                         const OptimizerConfig& cfg, int step_index = 0);

StepRecord sgd_step_resnet(nets::NetworkParams& params, const std::vector<Mat>& mixers,
                           const nets::ResNetConfig& rescfg, const Batch& batch,
                           double eta);
StepRecord unit_ngd_step_resnet(nets::NetworkParams& params, const std::vector<Mat>& mixers,
                                const nets::ResNetConfig& rescfg, const Batch& batch,
                                const OptimizerConfig& cfg, int step_index = 0);

/// Arithmetic mean of the last `window` parameter iterates (all of them when
/// window exceeds the history).
nets::NetworkParams polyak_average(const std::vector<nets::NetworkParams>& history,
                                   int window);

/// Deterministic teacher-student data: inputs are standard normal keyed by
/// (seed, step, column), targets come from a frozen random teacher.
class TeacherStream {
 public:
  TeacherStream(nets::NetworkParams teacher, std::uint64_t data_seed);
  TeacherStream(nets::NetworkParams teacher, std::vector<Mat> mixers,
                nets::ResNetConfig rescfg, std::uint64_t data_seed);

  Batch batch(int step, int count) const;
  /// A fixed evaluation set, disjoint from the training stream.
  Batch eval_set(int count) const;

  const nets::NetworkParams& teacher() const { return teacher_; }

 private:
  Batch make(std::uint64_t stream_tag, int count) const;

  nets::NetworkParams teacher_;
  std::vector<Mat> mixers_;
  std::optional<nets::ResNetConfig> rescfg_;
  std::uint64_t data_seed_;
};

TrainRecord train(nets::NetworkParams& student, const TeacherStream& data,
                  const OptimizerConfig& cfg, int steps);

/// The fixed-mixer residual loop: only (W, b) are trained, V stays frozen;
/// optional Polyak averaging of the final iterates.
TrainRecord train_resnet(nets::NetworkParams& student, const std::vector<Mat>& mixers,
                         const nets::ResNetConfig& rescfg, const TeacherStream& data,
                         const OptimizerConfig& cfg, int steps);

double eval_loss(const nets::NetworkParams& params, const Batch& batch);
double eval_loss_resnet(const nets::NetworkParams& params, const std::vector<Mat>& mixers,
                        const nets::ResNetConfig& rescfg, const Batch& batch);

}  // namespace ngrad::trainer
