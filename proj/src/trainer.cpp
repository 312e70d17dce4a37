#include "ngrad/trainer.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "ngrad/rng.hpp"

namespace ngrad::trainer {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int total_units(const nets::NetworkParams& p) {
  int n = 0;
  for (const Vec& b : p.biases) n += static_cast<int>(b.size());
  return n;
}

// Per-layer inverse scalars, with singular units demoted to the plain
// gradient (Abar00 = 1, X = Y = Z = 0).
struct LayerCoeffs {
  Vec abar;      // Abar00
  Vec cw;        // X / w^2
  Vec cy;        // Y / w
  Vec cz;        // Z
  std::vector<bool> invertible;
  std::vector<unit_fisher::Coeffs> raw;
  int fallbacks = 0;
};

LayerCoeffs layer_coeffs(const Mat& w, const Vec& b, Activation act, double damping) {
  const int nu = static_cast<int>(w.rows());
  LayerCoeffs lc;
  lc.abar = Vec::Ones(nu);
  lc.cw = Vec::Zero(nu);
  lc.cy = Vec::Zero(nu);
  lc.cz = Vec::Zero(nu);
  lc.invertible.assign(nu, false);
  lc.raw.resize(nu);
  for (int i = 0; i < nu; ++i) {
    const double wn = w.row(i).norm();
    const unit_fisher::Coeffs c = unit_fisher::coeffs(wn, b[i], act, damping);
    lc.raw[i] = c;
    if (c.invertible) {
      lc.invertible[i] = true;
      lc.abar[i] = c.Abar00;
      lc.cz[i] = c.Z;
      if (wn >= unit_fisher::kNormEps) {
        lc.cw[i] = c.X / (wn * wn);
        lc.cy[i] = c.Y / wn;
      }
    } else {
      ++lc.fallbacks;
    }
  }
  return lc;
}

struct StepScratch {
  std::vector<Mat> dw;
  std::vector<Vec> db;
  void reset(const nets::NetworkParams& p) {
    dw.resize(p.weights.size());
    db.resize(p.biases.size());
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      dw[l] = Mat::Zero(p.weights[l].rows(), p.weights[l].cols());
      db[l] = Vec::Zero(p.biases[l].size());
    }
  }
};

double apply_update(nets::NetworkParams& p, const StepScratch& s, double scale,
                    int step) {
  double sq = 0.0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    if (!s.dw[l].allFinite() || !s.db[l].allFinite())
      throw NumericError("step " + std::to_string(step) +
                         ": non-finite gradient in layer " + std::to_string(l + 1));
    p.weights[l] += scale * s.dw[l];
    p.biases[l] += scale * s.db[l];
    sq += s.dw[l].squaredNorm() + s.db[l].squaredNorm();
  }
  if (!p.all_finite())
    throw NumericError("step " + std::to_string(step) +
                       ": non-finite parameters after update");
  return scale * std::sqrt(sq);
}

// One spot check: closed-form step direction for one unit against a dense
// inverse of the assembled (damped) unit Fisher.
double spot_check_unit(const LayerCoeffs& lc, const Mat& w, const Vec& b, int unit,
                       const Vec& xin, double damping) {
  if (!lc.invertible[unit]) return -1.0;
  unit_fisher::UnitWeights uw{w.row(unit).transpose(), b[unit]};
  Vec xstar(xin.size() + 1);
  xstar << xin, 1.0;
  Mat g = unit_fisher::assemble_G(lc.raw[unit], uw);
  g.diagonal().array() += damping;
  const Vec dense = g.fullPivLu().solve(xstar);
  const Vec fast = unit_fisher::apply_Ginv(lc.raw[unit], uw, xstar);
  return (fast - dense).norm() / (dense.norm() + 1e-300);
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("OptimizerConfig: eta must be > 0");
  if (batch_size < 1) throw ConfigError("OptimizerConfig: batch_size >= 1 required");
  if (damping < 0.0) throw ConfigError("OptimizerConfig: damping must be >= 0");
  if (polyak_window < 1) throw ConfigError("OptimizerConfig: polyak_window >= 1");
}

std::vector<Vec> backprop_errors(const nets::ForwardTrace& trace,
                                 const nets::NetworkParams& params,
                                 const Eigen::Ref<const Vec>& y) {
  const int L = params.config.num_layers();
  if (y.size() != params.config.output_dim())
    throw ConfigError("backprop_errors: target length does not match n_L");
  std::vector<Vec> e(L + 1);
  e[L] = y - trace.output();
  for (int l = L; l >= 1; --l)
    e[l - 1] = params.weights[l - 1].transpose() *
               (e[l].cwiseProduct(trace.dphi[l - 1]));
  return e;
}

std::vector<Vec> backprop_errors_resnet(const nets::ForwardTrace& trace,
                                        const nets::NetworkParams& params,
                                        const std::vector<Mat>& mixers,
                                        const nets::ResNetConfig& config,
                                        const Eigen::Ref<const Vec>& y) {
  const int L = params.config.num_layers();
  if (y.size() != params.config.output_dim())
    throw ConfigError("backprop_errors_resnet: target length mismatch");
  std::vector<Vec> e(L + 1);
  e[L] = y - trace.output();
  for (int l = L; l >= 1; --l) {
    const Vec through = (mixers[l - 1].transpose() * e[l]).cwiseProduct(trace.dphi[l - 1]);
    e[l - 1] = params.weights[l - 1].transpose() * through + config.alpha * e[l];
  }
  return e;
}

StepRecord sgd_step(nets::NetworkParams& params, const Batch& batch, double eta) {
  if (batch.size() < 1) throw ConfigError("sgd_step: empty batch");
  const auto t0 = Clock::now();
  const int L = params.config.num_layers();
  StepScratch s;
  s.reset(params);
  StepRecord rec;
  for (int k = 0; k < batch.size(); ++k) {
    const nets::ForwardTrace trace = nets::forward(params, batch.x.col(k));
    rec.loss += 0.5 * (batch.y.col(k) - trace.output()).squaredNorm();
    const std::vector<Vec> e = backprop_errors(trace, params, batch.y.col(k));
    for (int l = 1; l <= L; ++l) {
      const Vec gu = e[l].cwiseProduct(trace.dphi[l - 1]);
      s.dw[l - 1].noalias() += gu * trace.post[l - 1].transpose();
      s.db[l - 1] += gu;
    }
  }
  rec.loss /= batch.size();
  rec.step_norm = apply_update(params, s, eta / batch.size(), rec.step);
  rec.wall_ms = ms_since(t0);
  return rec;
}

StepRecord unit_ngd_step(nets::NetworkParams& params, const Batch& batch,
                         const OptimizerConfig& cfg, int step_index) {
  cfg.validate();
  if (batch.size() < 1) throw ConfigError("unit_ngd_step: empty batch");
  const auto t0 = Clock::now();
  const int L = params.config.num_layers();
  const Activation act = params.config.activation;

  std::vector<LayerCoeffs> coeffs(L);
  StepRecord rec;
  rec.step = step_index;
  for (int l = 0; l < L; ++l) {
    coeffs[l] = layer_coeffs(params.weights[l], params.biases[l], act, cfg.damping);
    rec.singular_fallbacks += coeffs[l].fallbacks;
  }

  StepScratch s;
  s.reset(params);
  Vec last_input;  // for the spot check
  for (int k = 0; k < batch.size(); ++k) {
    const nets::ForwardTrace trace = nets::forward(params, batch.x.col(k));
    rec.loss += 0.5 * (batch.y.col(k) - trace.output()).squaredNorm();
    const std::vector<Vec> e = backprop_errors(trace, params, batch.y.col(k));
    for (int l = 1; l <= L; ++l) {
      const LayerCoeffs& lc = coeffs[l - 1];
      const Vec& xin = trace.post[l - 1];
      const Vec gu = e[l].cwiseProduct(trace.dphi[l - 1]);
      const Vec wx = params.weights[l - 1] * xin;
      // dw_i = gu_i [ abar_i x + (cw_i (w.x)_i + cy_i) w_i ]
      s.dw[l - 1].noalias() += gu.cwiseProduct(lc.abar) * xin.transpose();
      const Vec row_scale = gu.cwiseProduct(lc.cw.cwiseProduct(wx) + lc.cy);
      s.dw[l - 1] += row_scale.asDiagonal() * params.weights[l - 1];
      // dw0_i = gu_i (abar_i + cy_i (w.x)_i + cz_i), times w0 in compat mode
      Vec bias_fac = lc.abar + lc.cy.cwiseProduct(wx) + lc.cz;
      if (cfg.compat_eq68_w0)
        for (int i = 0; i < bias_fac.size(); ++i)
          if (lc.invertible[i]) bias_fac[i] *= params.biases[l - 1][i];
      s.db[l - 1] += gu.cwiseProduct(bias_fac);
    }
    if (k + 1 == batch.size()) last_input = trace.post[0];
  }
  rec.loss /= batch.size();

  if (cfg.spot_check_every > 0 && step_index % cfg.spot_check_every == 0) {
    int pick = (step_index / cfg.spot_check_every) % total_units(params);
    for (int l = 0; l < L && pick >= 0; ++l) {
      const int nu = static_cast<int>(params.biases[l].size());
      if (pick < nu) {
        // x at this layer from the last sample of the batch
        const nets::ForwardTrace trace = nets::forward(params, last_input);
        rec.spot_check_rel_err = spot_check_unit(coeffs[l], params.weights[l],
                                                 params.biases[l], pick,
                                                 trace.post[l], cfg.damping);
        break;
      }
      pick -= nu;
    }
  }

  rec.step_norm = apply_update(params, s, cfg.eta / batch.size(), step_index);
  rec.wall_ms = ms_since(t0);
  return rec;
}

StepRecord sgd_step_resnet(nets::NetworkParams& params, const std::vector<Mat>& mixers,
                           const nets::ResNetConfig& rescfg, const Batch& batch,
                           double eta) {
  if (batch.size() < 1) throw ConfigError("sgd_step_resnet: empty batch");
  const auto t0 = Clock::now();
  const int L = params.config.num_layers();
  StepScratch s;
  s.reset(params);
  StepRecord rec;
  for (int k = 0; k < batch.size(); ++k) {
    const nets::ForwardTrace trace =
        nets::forward_resnet(params, mixers, rescfg, batch.x.col(k));
    rec.loss += 0.5 * (batch.y.col(k) - trace.output()).squaredNorm();
    const std::vector<Vec> e =
        backprop_errors_resnet(trace, params, mixers, rescfg, batch.y.col(k));
    for (int l = 1; l <= L; ++l) {
      const Vec gu =
          (mixers[l - 1].transpose() * e[l]).cwiseProduct(trace.dphi[l - 1]);
      s.dw[l - 1].noalias() += gu * trace.post[l - 1].transpose();
      s.db[l - 1] += gu;
    }
  }
  rec.loss /= batch.size();
  rec.step_norm = apply_update(params, s, eta / batch.size(), rec.step);
  rec.wall_ms = ms_since(t0);
  return rec;
}

StepRecord unit_ngd_step_resnet(nets::NetworkParams& params, const std::vector<Mat>& mixers,
                                const nets::ResNetConfig& rescfg, const Batch& batch,
                                const OptimizerConfig& cfg, int step_index) {
  cfg.validate();
  if (batch.size() < 1) throw ConfigError("unit_ngd_step_resnet: empty batch");
  const auto t0 = Clock::now();
  const int L = params.config.num_layers();
  const Activation act = params.config.activation;

  std::vector<LayerCoeffs> coeffs(L);
  StepRecord rec;
  rec.step = step_index;
  for (int l = 0; l < L; ++l) {
    coeffs[l] = layer_coeffs(params.weights[l], params.biases[l], act, cfg.damping);
    rec.singular_fallbacks += coeffs[l].fallbacks;
  }

  StepScratch s;
  s.reset(params);
  Vec last_input;
  for (int k = 0; k < batch.size(); ++k) {
    const nets::ForwardTrace trace =
        nets::forward_resnet(params, mixers, rescfg, batch.x.col(k));
    rec.loss += 0.5 * (batch.y.col(k) - trace.output()).squaredNorm();
    const std::vector<Vec> e =
        backprop_errors_resnet(trace, params, mixers, rescfg, batch.y.col(k));
    for (int l = 1; l <= L; ++l) {
      const LayerCoeffs& lc = coeffs[l - 1];
      const Vec& xin = trace.post[l - 1];
      const Vec gu =
          (mixers[l - 1].transpose() * e[l]).cwiseProduct(trace.dphi[l - 1]);
      const Vec wx = params.weights[l - 1] * xin;
      s.dw[l - 1].noalias() += gu.cwiseProduct(lc.abar) * xin.transpose();
      const Vec row_scale = gu.cwiseProduct(lc.cw.cwiseProduct(wx) + lc.cy);
      s.dw[l - 1] += row_scale.asDiagonal() * params.weights[l - 1];
      Vec bias_fac = lc.abar + lc.cy.cwiseProduct(wx) + lc.cz;
      if (cfg.compat_eq68_w0)
        for (int i = 0; i < bias_fac.size(); ++i)
          if (lc.invertible[i]) bias_fac[i] *= params.biases[l - 1][i];
      s.db[l - 1] += gu.cwiseProduct(bias_fac);
    }
    if (k + 1 == batch.size()) last_input = trace.post[0];
  }
  rec.loss /= batch.size();

  if (cfg.spot_check_every > 0 && step_index % cfg.spot_check_every == 0) {
    int pick = (step_index / cfg.spot_check_every) % total_units(params);
    for (int l = 0; l < L && pick >= 0; ++l) {
      const int nu = static_cast<int>(params.biases[l].size());
      if (pick < nu) {
        const nets::ForwardTrace trace =
            nets::forward_resnet(params, mixers, rescfg, last_input);
        rec.spot_check_rel_err = spot_check_unit(coeffs[l], params.weights[l],
                                                 params.biases[l], pick,
                                                 trace.post[l], cfg.damping);
        break;
      }
      pick -= nu;
    }
  }

  rec.step_norm = apply_update(params, s, cfg.eta / batch.size(), step_index);
  rec.wall_ms = ms_since(t0);
  return rec;
}

nets::NetworkParams polyak_average(const std::vector<nets::NetworkParams>& history,
                                   int window) {
  if (history.empty()) throw ConfigError("polyak_average: empty history");
  if (window < 1) throw ConfigError("polyak_average: window >= 1 required");
  const int take = std::min<int>(window, static_cast<int>(history.size()));
  nets::NetworkParams avg = history[history.size() - take];
  for (std::size_t k = history.size() - take + 1; k < history.size(); ++k) {
    for (std::size_t l = 0; l < avg.weights.size(); ++l) {
      avg.weights[l] += history[k].weights[l];
      avg.biases[l] += history[k].biases[l];
    }
  }
  for (std::size_t l = 0; l < avg.weights.size(); ++l) {
    avg.weights[l] /= take;
    avg.biases[l] /= take;
  }
  return avg;
}

TeacherStream::TeacherStream(nets::NetworkParams teacher, std::uint64_t data_seed)
    : teacher_(std::move(teacher)), data_seed_(data_seed) {}

TeacherStream::TeacherStream(nets::NetworkParams teacher, std::vector<Mat> mixers,
                             nets::ResNetConfig rescfg, std::uint64_t data_seed)
    : teacher_(std::move(teacher)),
      mixers_(std::move(mixers)),
      rescfg_(std::move(rescfg)),
      data_seed_(data_seed) {}

Batch TeacherStream::make(std::uint64_t stream_tag, int count) const {
  const int n0 = teacher_.config.input_dim();
  Batch b;
  b.x.resize(n0, count);
  b.y.resize(teacher_.config.output_dim(), count);
  for (int k = 0; k < count; ++k) {
    RngStream rng(data_seed_, StreamDomain::Data, stream_tag, k);
    rng.fill_normal(b.x.col(k));
    b.y.col(k) = rescfg_ ? nets::forward_resnet(teacher_, mixers_, *rescfg_, b.x.col(k)).output()
                         : nets::forward(teacher_, b.x.col(k)).output();
  }
  return b;
}

Batch TeacherStream::batch(int step, int count) const {
  return make(static_cast<std::uint64_t>(step), count);
}

Batch TeacherStream::eval_set(int count) const {
  return make(~std::uint64_t{0}, count);
}

namespace {

TrainRecord train_loop(nets::NetworkParams& student, const TeacherStream& data,
                       const OptimizerConfig& cfg, int steps,
                       const std::function<StepRecord(const Batch&, int)>& do_step) {
  cfg.validate();
  TrainRecord rec;
  rec.steps.reserve(steps);
  const int units = total_units(student);
  std::deque<nets::NetworkParams> history;
  for (int t = 0; t < steps; ++t) {
    StepRecord r = do_step(data.batch(t, cfg.batch_size), t);
    r.step = t;
    if (r.singular_fallbacks * 2 >= units) rec.flagged = true;
    if (r.spot_check_rel_err >= 0.0)
      rec.max_spot_check_err = std::max(rec.max_spot_check_err, r.spot_check_rel_err);
    rec.steps.push_back(r);
    if (cfg.polyak) {
      history.push_back(student);
      if (static_cast<int>(history.size()) > cfg.polyak_window) history.pop_front();
    }
  }
  if (cfg.polyak && !history.empty())
    student = polyak_average({history.begin(), history.end()}, cfg.polyak_window);
  return rec;
}

}  // namespace

TrainRecord train(nets::NetworkParams& student, const TeacherStream& data,
                  const OptimizerConfig& cfg, int steps) {
  return train_loop(student, data, cfg, steps, [&](const Batch& b, int t) {
    return cfg.kind == Optimizer::SGD ? sgd_step(student, b, cfg.eta)
                                      : unit_ngd_step(student, b, cfg, t);
  });
}

TrainRecord train_resnet(nets::NetworkParams& student, const std::vector<Mat>& mixers,
                         const nets::ResNetConfig& rescfg, const TeacherStream& data,
                         const OptimizerConfig& cfg, int steps) {
  return train_loop(student, data, cfg, steps, [&](const Batch& b, int t) {
    return cfg.kind == Optimizer::SGD
               ? sgd_step_resnet(student, mixers, rescfg, b, cfg.eta)
               : unit_ngd_step_resnet(student, mixers, rescfg, b, cfg, t);
  });
}

double eval_loss(const nets::NetworkParams& params, const Batch& batch) {
  double acc = 0.0;
  for (int k = 0; k < batch.size(); ++k)
    acc += 0.5 * (batch.y.col(k) - nets::forward(params, batch.x.col(k)).output())
                     .squaredNorm();
  return acc / batch.size();
}

double eval_loss_resnet(const nets::NetworkParams& params, const std::vector<Mat>& mixers,
                        const nets::ResNetConfig& rescfg, const Batch& batch) {
  double acc = 0.0;
  for (int k = 0; k < batch.size(); ++k)
    acc += 0.5 * (batch.y.col(k) -
                  nets::forward_resnet(params, mixers, rescfg, batch.x.col(k)).output())
                     .squaredNorm();
  return acc / batch.size();
}

}  // namespace ngrad::trainer
