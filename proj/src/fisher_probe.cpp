#include "ngrad/fisher_probe.hpp"

#include <algorithm>
#include <cmath>

#include "ngrad/meanfield.hpp"
#include "ngrad/parallel.hpp"
#include "ngrad/rng.hpp"

namespace ngrad::fisher {

// --- indexing ----------------------------------------------------------------

ParamIndexer::ParamIndexer(const std::vector<int>& layer_widths)
    : widths_(layer_widths) {
  if (widths_.size() < 2) throw ConfigError("ParamIndexer: need >= 2 widths");
  layer_offsets_.resize(widths_.size());
  layer_offsets_[0] = 0;  // unused slot so layers index 1-based
  std::int64_t off = 0;
  for (std::size_t l = 1; l < widths_.size(); ++l) {
    layer_offsets_[l] = off;
    off += static_cast<std::int64_t>(widths_[l]) * (widths_[l - 1] + 1);
  }
  total_ = off;
}

std::int64_t ParamIndexer::flat(int layer, int unit, int slot) const {
  return layer_offsets_[layer] +
         static_cast<std::int64_t>(unit) * slots(layer) + slot;
}

ParamIndexer::Block ParamIndexer::block(int layer, int unit) const {
  const std::int64_t b = flat(layer, unit, 0);
  return {b, b + slots(layer)};
}

ParamIndexer::Entry ParamIndexer::unflatten(std::int64_t index) const {
  if (index < 0 || index >= total_)
    throw ConfigError("ParamIndexer: index out of range");
  for (int l = num_layers(); l >= 1; --l) {
    if (index >= layer_offsets_[l]) {
      const std::int64_t rel = index - layer_offsets_[l];
      const int s = slots(l);
      return {l, static_cast<int>(rel / s), static_cast<int>(rel % s)};
    }
  }
  throw ConfigError("ParamIndexer: index out of range");
}

// --- output gradients ---------------------------------------------------------

std::vector<Mat> output_coefficients(const nets::ForwardTrace& trace,
                                     const nets::NetworkParams& params) {
  const int L = params.config.num_layers();
  const int n_out = params.config.output_dim();
  std::vector<Mat> coef(L);
  Mat d = Mat::Identity(n_out, n_out);  // dx^L / dx^l, walking l downward
  for (int l = L; l >= 1; --l) {
    coef[l - 1] = d * trace.dphi[l - 1].asDiagonal();
    if (l > 1) d = coef[l - 1] * params.weights[l - 1];
  }
  return coef;
}

std::vector<Mat> output_coefficients_resnet(const nets::ForwardTrace& trace,
                                            const nets::NetworkParams& params,
                                            const std::vector<Mat>& mixers,
                                            const nets::ResNetConfig& config) {
  const int L = params.config.num_layers();
  const int n = params.config.output_dim();
  std::vector<Mat> coef(L);
  Mat d = Mat::Identity(n, n);
  for (int l = L; l >= 1; --l) {
    coef[l - 1] = d * mixers[l - 1] * trace.dphi[l - 1].asDiagonal();
    if (l > 1) d = coef[l - 1] * params.weights[l - 1] + config.alpha * d;
  }
  return coef;
}

namespace {

Mat assemble_jacobian(const std::vector<Mat>& coef, const nets::ForwardTrace& trace,
                      const ParamIndexer& index) {
  const int L = static_cast<int>(coef.size());
  const Eigen::Index n_out = coef[0].rows();
  Mat j(n_out, index.total());
  for (int l = 1; l <= L; ++l) {
    const Vec& xin = trace.post[l - 1];
    const int nin = static_cast<int>(xin.size());
    for (int i = 0; i < index.units(l); ++i) {
      const auto blk = index.block(l, i);
      j.middleCols(blk.begin, nin).noalias() = coef[l - 1].col(i) * xin.transpose();
      j.col(blk.begin + nin) = coef[l - 1].col(i);
    }
  }
  return j;
}

}  // namespace

Mat grad_outputs(const nets::ForwardTrace& trace, const nets::NetworkParams& params) {
  return assemble_jacobian(output_coefficients(trace, params), trace,
                           ParamIndexer(params.config.layer_widths));
}

Mat grad_outputs_resnet(const nets::ForwardTrace& trace, const nets::NetworkParams& params,
                        const std::vector<Mat>& mixers, const nets::ResNetConfig& config) {
  return assemble_jacobian(output_coefficients_resnet(trace, params, mixers, config),
                           trace, ParamIndexer(params.config.layer_widths));
}

// --- full Fisher --------------------------------------------------------------

EmpiricalFisher estimate_fisher(const nets::NetworkParams& params,
                                const FisherOptions& opt) {
  const ParamIndexer index(params.config.layer_widths);
  const std::int64_t p = index.total();
  if (p > opt.max_params)
    throw ConfigError("estimate_fisher: " + std::to_string(p) +
                      " parameters exceed the materialization cap of " +
                      std::to_string(opt.max_params));
  if (opt.n_samples < 1) throw ConfigError("estimate_fisher: n_samples >= 1 required");
  const int n0 = params.config.input_dim();
  const int L = params.config.num_layers();
  const int batches = std::max(1, std::min<int>(opt.batches, opt.n_samples));

  Mat batch_sum = Mat::Zero(p, p);
  Mat mean_sum = Mat::Zero(p, p);
  Mat mean_sq_sum = Mat::Zero(p, p);

  for (int b = 0; b < batches; ++b) {
    batch_sum.setZero();
    const std::int64_t begin = opt.n_samples * b / batches;
    const std::int64_t end = opt.n_samples * (b + 1) / batches;
    for (std::int64_t s = begin; s < end; ++s) {
      RngStream rng(opt.seed, StreamDomain::Inputs, static_cast<std::uint64_t>(s));
      Vec x(n0);
      rng.fill_normal(x);
      x *= opt.input_scale;
      const nets::ForwardTrace trace = nets::forward(params, x);
      if (L == 1) {
        // Single layer: each output depends on its own block only, so the
        // per-sample contribution is exactly block diagonal.
        Vec xstar(n0 + 1);
        xstar << trace.post[0], 1.0;
        const Mat outer = xstar * xstar.transpose();
        for (int i = 0; i < index.units(1); ++i) {
          const double d = trace.dphi[0][i];
          const auto blk = index.block(1, i);
          batch_sum.block(blk.begin, blk.begin, n0 + 1, n0 + 1) += (d * d) * outer;
        }
      } else {
        const Mat j = assemble_jacobian(output_coefficients(trace, params), trace, index);
        batch_sum.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
      }
    }
    batch_sum = batch_sum.selfadjointView<Eigen::Lower>();
    batch_sum /= static_cast<double>(end - begin);
    mean_sum += batch_sum;
    mean_sq_sum += batch_sum.cwiseAbs2();
  }

  EmpiricalFisher out{Mat(), Mat(), index, opt.n_samples,
                      "normal(0, " + std::to_string(opt.input_scale) +
                          "^2 I), dim " + std::to_string(n0)};
  out.matrix = mean_sum / batches;
  if (batches > 1) {
    out.se = ((mean_sq_sum / batches - out.matrix.cwiseAbs2()) *
              (static_cast<double>(batches) / (batches - 1.0) / batches))
                 .cwiseMax(0.0)
                 .cwiseSqrt();
  } else {
    out.se = Mat::Zero(p, p);
  }
  return out;
}

// --- domino -------------------------------------------------------------------

DominoStats domino_check(const nets::NetworkParams& params, int m,
                         std::int64_t n_samples, std::uint64_t seed) {
  const int L = params.config.num_layers();
  if (m < 1 || m >= L) throw ConfigError("domino_check: need 1 <= m < L");
  const int n0 = params.config.input_dim();
  const int nm = params.config.layer_widths[m];

  double diag_acc = 0.0, off_acc = 0.0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    RngStream rng(seed, StreamDomain::Inputs, static_cast<std::uint64_t>(s));
    Vec x(n0);
    rng.fill_normal(x);
    const nets::ForwardTrace trace = nets::forward(params, x);
    Mat prod = nets::layer_jacobian(trace, params, m + 1);
    for (int l = m + 2; l <= L; ++l)
      prod = nets::layer_jacobian(trace, params, l) * prod;
    Mat gram(nm, nm);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(prod.transpose());
    const double diag_sq = gram.diagonal().squaredNorm();
    const double total_sq = 2.0 * gram.triangularView<Eigen::StrictlyLower>()
                                      .toDenseMatrix()
                                      .squaredNorm() +
                            diag_sq;
    diag_acc += gram.diagonal().mean();
    off_acc += std::sqrt((total_sq - diag_sq) /
                         (static_cast<double>(nm) * nm - nm));
  }
  DominoStats st;
  st.m = m;
  st.diag_mean = diag_acc / static_cast<double>(n_samples);
  st.offdiag_rms = off_acc / static_cast<double>(n_samples);
  // chi^L_{m+1} with A^0 = 1 (standard normal inputs).
  const auto mf = meanfield::propagate(params.config, 1.0);
  st.theory_chi_prod = mf.chi_prod[m];  // chi_prod[l-1] = chi^L_l
  return st;
}

// --- block decay scan -----------------------------------------------------------

namespace {

struct TrackedPair {
  int l1, u1, s1;
  int l2, u2, s2;
};

struct ScanStrata {
  // Same-layer off-unit strata per wide layer: same input slot ("stripe")
  // carries the O(1/sqrt(n)) mass, different slots ("bulk") decay faster.
  std::vector<TrackedPair> stripe, bulk;
  // Cross-layer strata: slot of the later unit pointing at the earlier unit
  // ("aligned") vs all other slot pairs.
  std::vector<TrackedPair> cross_aligned, cross_bulk;
  std::vector<int> wide_layers;  // layers with >= 2 units
};

ScanStrata make_strata(const ParamIndexer& index, int pairs_per_stratum,
                       std::uint64_t seed) {
  ScanStrata st;
  const int L = index.num_layers();
  for (int l = 1; l <= L; ++l)
    if (index.units(l) >= 2) st.wide_layers.push_back(l);

  RngStream rng(seed, StreamDomain::Probe, 0xBEEF);
  auto uniform = [&rng](int hi) {  // [0, hi)
    return static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(hi));
  };
  for (int l : st.wide_layers) {
    const int nu = index.units(l);
    const int ns = index.slots(l);
    for (int k = 0; k < pairs_per_stratum; ++k) {
      const int i = uniform(nu);
      const int j = (i + 1 + uniform(nu - 1)) % nu;
      const int a = uniform(ns);
      st.stripe.push_back({l, i, a, l, j, a});
      const int b = (a + 1 + uniform(ns - 1)) % ns;
      st.bulk.push_back({l, i, a, l, j, b});
    }
  }
  for (int l1 : st.wide_layers) {
    for (int l2 = l1 + 1; l2 <= L; ++l2) {
      const int nu1 = index.units(l1), ns1 = index.slots(l1);
      const int nu2 = index.units(l2), ns2 = index.slots(l2);
      for (int k = 0; k < pairs_per_stratum; ++k) {
        const int i = uniform(nu1);
        const int a = uniform(ns1);
        const int j = uniform(nu2);
        if (i < ns2 - 1)
          st.cross_aligned.push_back({l1, i, a, l2, j, i});
        const int b = (i + 1 + uniform(ns2 - 1)) % ns2;  // anything but slot i
        st.cross_bulk.push_back({l1, i, a, l2, j, b});
      }
    }
  }
  return st;
}

double rms(const Vec& v) {
  return v.size() == 0 ? 0.0 : std::sqrt(v.squaredNorm() / v.size());
}

struct ScanAccum {
  Vec diag;  // all diagonal entries of wide layers, accumulated exhaustively
  Vec stripe, bulk, cross_aligned, cross_bulk;
};

// One width of the streaming scan; `coef_fn` yields the per-layer coefficient
// matrices for a trace (plain or residual flavor).
template <typename Forward, typename CoefFn>
DecayRow scan_width(const nets::NetworkParams& params, const ParamIndexer& index,
                    std::int64_t n_samples, std::uint64_t seed,
                    int pairs_per_stratum, Forward&& forward_fn, CoefFn&& coef_fn) {
  const ScanStrata strata = make_strata(index, pairs_per_stratum, seed);
  const int n0 = params.config.input_dim();
  const int batches = 10;

  std::vector<std::int64_t> diag_offsets(index.num_layers() + 1, -1);
  std::int64_t n_diag = 0;
  for (int l : strata.wide_layers) {
    diag_offsets[l] = n_diag;
    n_diag += static_cast<std::int64_t>(index.units(l)) * index.slots(l);
  }

  std::vector<ScanAccum> acc(batches);
  for_batches(batches, [&](int b) {
    ScanAccum& a = acc[b];
    a.diag = Vec::Zero(n_diag);
    a.stripe = Vec::Zero(strata.stripe.size());
    a.bulk = Vec::Zero(strata.bulk.size());
    a.cross_aligned = Vec::Zero(strata.cross_aligned.size());
    a.cross_bulk = Vec::Zero(strata.cross_bulk.size());
    const std::int64_t begin = n_samples * b / batches;
    const std::int64_t end = n_samples * (b + 1) / batches;
    for (std::int64_t s = begin; s < end; ++s) {
      RngStream rng(seed, StreamDomain::Inputs, static_cast<std::uint64_t>(s));
      Vec x(n0);
      rng.fill_normal(x);
      const nets::ForwardTrace trace = forward_fn(x);
      const std::vector<Mat> coef = coef_fn(trace);
      // Diagonal: G_aa contribution is ||coef_l.col(i)||^2 * x_slot^2.
      for (int l : strata.wide_layers) {
        const Vec colsq = coef[l - 1].colwise().squaredNorm().transpose();
        Vec xsq(index.slots(l));
        xsq << trace.post[l - 1].cwiseAbs2(), 1.0;
        const Mat outer = colsq * xsq.transpose();
        a.diag.segment(diag_offsets[l], outer.size()) +=
            Eigen::Map<const Vec>(outer.data(), outer.size());
      }
      auto xval = [&](int l, int slot) {
        return slot == index.slots(l) - 1 ? 1.0 : trace.post[l - 1][slot];
      };
      auto add_pairs = [&](const std::vector<TrackedPair>& pairs, Vec& out) {
        for (std::size_t k = 0; k < pairs.size(); ++k) {
          const TrackedPair& tp = pairs[k];
          const double t =
              coef[tp.l1 - 1].col(tp.u1).dot(coef[tp.l2 - 1].col(tp.u2));
          out[k] += t * xval(tp.l1, tp.s1) * xval(tp.l2, tp.s2);
        }
      };
      add_pairs(strata.stripe, a.stripe);
      add_pairs(strata.bulk, a.bulk);
      add_pairs(strata.cross_aligned, a.cross_aligned);
      add_pairs(strata.cross_bulk, a.cross_bulk);
    }
  });

  ScanAccum total = std::move(acc[0]);
  for (int b = 1; b < batches; ++b) {
    total.diag += acc[b].diag;
    total.stripe += acc[b].stripe;
    total.bulk += acc[b].bulk;
    total.cross_aligned += acc[b].cross_aligned;
    total.cross_bulk += acc[b].cross_bulk;
  }
  const double inv_n = 1.0 / static_cast<double>(n_samples);
  DecayRow row;
  row.width = params.config.layer_widths.front();
  row.rms_diag = rms(total.diag) * inv_n;
  row.rms_stripe = rms(total.stripe) * inv_n;
  row.rms_bulk = rms(total.bulk) * inv_n;
  // Recombine strata with their true element fractions. Within a layer the
  // same-slot stripe is 1/(slots) of all off-unit element pairs.
  double same_sq = 0.0, same_weight = 0.0;
  double cross_sq = 0.0, cross_weight = 0.0;
  {
    const double ms = total.stripe.size()
                          ? total.stripe.squaredNorm() / total.stripe.size()
                          : 0.0;
    const double mb = total.bulk.size() ? total.bulk.squaredNorm() / total.bulk.size()
                                        : 0.0;
    for (int l : strata.wide_layers) {
      const double ns = index.slots(l);
      const double nu = index.units(l);
      const double count = nu * (nu - 1) * ns * ns;
      same_sq += count * (ms / ns + mb * (ns - 1) / ns);
      same_weight += count;
    }
    const double ma = total.cross_aligned.size()
                          ? total.cross_aligned.squaredNorm() / total.cross_aligned.size()
                          : 0.0;
    const double mc = total.cross_bulk.size()
                          ? total.cross_bulk.squaredNorm() / total.cross_bulk.size()
                          : 0.0;
    for (int l1 : strata.wide_layers) {
      for (int l2 = l1 + 1; l2 <= index.num_layers(); ++l2) {
        const double nu1 = index.units(l1);
        const double ns2 = index.slots(l2);
        const double count = nu1 * index.slots(l1) * index.units(l2) * ns2;
        const double frac_aligned =
            std::min<double>(nu1, ns2 - 1) / (nu1 * ns2);
        cross_sq += count * (ma * frac_aligned + mc * (1.0 - frac_aligned));
        cross_weight += count;
      }
    }
  }
  row.rms_off_same_layer =
      same_weight > 0 ? std::sqrt(same_sq / same_weight) * inv_n : 0.0;
  row.rms_off_cross_layer =
      cross_weight > 0 ? std::sqrt(cross_sq / cross_weight) * inv_n : 0.0;
  return row;
}

std::vector<int> scan_widths_for(const std::vector<int>& template_widths, int n) {
  std::vector<int> widths = template_widths;
  for (int& w : widths)
    if (w == template_widths.front()) w = n;
  return widths;
}

double fit_slope(const BlockDecayReport& report) {
  const std::size_t k = report.rows.size();
  if (k < 3) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const DecayRow& r : report.rows) {
    const double x = std::log(static_cast<double>(r.width));
    const double y = std::log(r.rms_off_same_layer / r.rms_diag);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace

BlockDecayReport block_decay_scan(const std::vector<int>& widths,
                                  const nets::NetConfig& config_template,
                                  std::int64_t n_samples, std::uint64_t seed,
                                  int pairs_per_stratum) {
  if (widths.empty()) throw ConfigError("block_decay_scan: no widths");
  BlockDecayReport report;
  for (int n : widths) {
    nets::NetConfig cfg = config_template;
    cfg.layer_widths = scan_widths_for(config_template.layer_widths, n);
    cfg.seed = detail::hash_key(seed, config_template.seed, n, 0);
    cfg.validate();
    const nets::NetworkParams params = nets::init_random(cfg);
    const ParamIndexer index(cfg.layer_widths);
    report.rows.push_back(scan_width(
        params, index, n_samples, cfg.seed, pairs_per_stratum,
        [&](const Vec& x) { return nets::forward(params, x); },
        [&](const nets::ForwardTrace& t) { return output_coefficients(t, params); }));
  }
  report.fitted_slope = fit_slope(report);
  return report;
}

BlockDecayReport block_decay_scan_resnet(const std::vector<int>& widths,
                                         const nets::ResNetConfig& config_template,
                                         std::int64_t n_samples, std::uint64_t seed,
                                         int pairs_per_stratum) {
  if (widths.empty()) throw ConfigError("block_decay_scan_resnet: no widths");
  BlockDecayReport report;
  for (int n : widths) {
    nets::ResNetConfig cfg = config_template;
    cfg.base.layer_widths.assign(config_template.base.layer_widths.size(), n);
    cfg.base.seed = detail::hash_key(seed, config_template.base.seed, n, 0);
    cfg.validate();
    const nets::NetworkParams params = nets::init_random(cfg.base);
    const std::vector<Mat> mixers = nets::init_mixers(cfg);
    const ParamIndexer index(cfg.base.layer_widths);
    report.rows.push_back(scan_width(
        params, index, n_samples, cfg.base.seed, pairs_per_stratum,
        [&](const Vec& x) { return nets::forward_resnet(params, mixers, cfg, x); },
        [&](const nets::ForwardTrace& t) {
          return output_coefficients_resnet(t, params, mixers, cfg);
        }));
  }
  report.fitted_slope = fit_slope(report);
  return report;
}

// --- non-closure ----------------------------------------------------------------

NonclosureReport nonclosure_from(const Mat& b) {
  const int n = static_cast<int>(b.rows());
  if (n < 2 || b.cols() != n) throw ConfigError("nonclosure_from: need square B, n >= 2");
  const Mat g = Mat::Identity(n, n) + b / std::sqrt(static_cast<double>(n));
  const Mat g2 = g * g;
  auto offdiag_rms = [n](const Mat& m) {
    const double sq = m.squaredNorm() - m.diagonal().squaredNorm();
    return std::sqrt(sq / (static_cast<double>(n) * n - n));
  };
  NonclosureReport r;
  r.n = n;
  r.offdiag_rms_g = offdiag_rms(g);
  r.offdiag_rms_g2 = offdiag_rms(g2);
  r.ratio = r.offdiag_rms_g > 0 ? r.offdiag_rms_g2 / r.offdiag_rms_g : 0.0;
  return r;
}

NonclosureReport nonclosure_demo(int n, std::uint64_t seed, int reps) {
  if (n < 10) throw ConfigError("nonclosure_demo: n >= 10 required");
  NonclosureReport avg;
  avg.n = n;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(seed, StreamDomain::Probe, 0x6E636C, r);
    Mat b(n, n);
    rng.fill_normal(b);
    const NonclosureReport one = nonclosure_from(b);
    avg.offdiag_rms_g += one.offdiag_rms_g / reps;
    avg.offdiag_rms_g2 += one.offdiag_rms_g2 / reps;
  }
  avg.ratio = avg.offdiag_rms_g2 / avg.offdiag_rms_g;
  return avg;
}

// --- self-averaging ---------------------------------------------------------------

SelfAvgReport self_averaging_check(int n, Activation act, std::int64_t n_samples,
                                   std::uint64_t seed, double sigma_w2, int n_pairs) {
  if (n < 100) throw ConfigError("self_averaging_check: n >= 100 required");
  const int K = std::min(n_pairs, n);
  const int batches = 10;
  const double wsd = std::sqrt(sigma_w2 / n);

  Vec x(n);
  RngStream xs(seed, StreamDomain::Inputs, 0x5A);
  xs.fill_normal(x);

  struct Sums {
    double f = 0.0;
    Vec fww_d, ww_d, fww_o, ww_o;
    std::int64_t count = 0;
  };
  std::vector<Sums> acc(batches);
  for_batches(batches, [&](int b) {
    Sums& a = acc[b];
    a.fww_d = Vec::Zero(n);
    a.ww_d = Vec::Zero(n);
    a.fww_o = Vec::Zero(K);
    a.ww_o = Vec::Zero(K);
    const std::int64_t begin = n_samples * b / batches;
    const std::int64_t end = n_samples * (b + 1) / batches;
    a.count = end - begin;
    Vec w(n);
    for (std::int64_t s = begin; s < end; ++s) {
      RngStream rng(seed, StreamDomain::Probe, static_cast<std::uint64_t>(s));
      rng.fill_normal(w);
      w *= wsd;
      const double u = w.dot(x);
      const double d = dphi(act, u);
      const double f = d * d;
      a.f += f;
      const Vec ww = w.cwiseAbs2();
      a.ww_d += ww;
      a.fww_d += f * ww;
      for (int k = 0; k < K; ++k) {
        const double p = w[k] * w[(k + 1) % n];
        a.ww_o[k] += p;
        a.fww_o[k] += f * p;
      }
    }
  });

  auto pooled = [&](const std::vector<int>& skip) {
    double f = 0.0;
    std::int64_t count = 0;
    Vec fww_d = Vec::Zero(n), ww_d = Vec::Zero(n);
    Vec fww_o = Vec::Zero(K), ww_o = Vec::Zero(K);
    for (int b = 0; b < batches; ++b) {
      if (std::find(skip.begin(), skip.end(), b) != skip.end()) continue;
      f += acc[b].f;
      count += acc[b].count;
      fww_d += acc[b].fww_d;
      ww_d += acc[b].ww_d;
      fww_o += acc[b].fww_o;
      ww_o += acc[b].ww_o;
    }
    const double inv = 1.0 / static_cast<double>(count);
    const double ef = f * inv;
    struct Out {
      double ef, off_gap, diag_gap, diag_scale;
    } o;
    o.ef = ef;
    o.off_gap = (fww_o * inv - ef * (ww_o * inv)).mean();
    const Vec gaps = fww_d * inv - ef * (ww_d * inv);
    o.diag_gap = gaps.mean();
    o.diag_scale = gaps.cwiseAbs().mean();
    return o;
  };

  const auto full = pooled({});
  double jk_mean = 0.0, jk_sq = 0.0;
  for (int b = 0; b < batches; ++b) {
    const double g = pooled({b}).off_gap;
    jk_mean += g / batches;
    jk_sq += g * g / batches;
  }
  SelfAvgReport rep;
  rep.n = n;
  rep.n_samples = n_samples;
  rep.e_f = full.ef;
  rep.offdiag_gap = full.off_gap;
  rep.offdiag_se =
      std::sqrt(std::max(0.0, (jk_sq - jk_mean * jk_mean) * (batches - 1.0)));
  rep.diag_gap = full.diag_gap;
  rep.diag_gap_scale = full.diag_scale;
  const double scale = full.ef * sigma_w2 / n;
  rep.diag_gap_rel = scale > 0 ? std::abs(full.diag_gap) / scale : 0.0;
  return rep;
}

}  // namespace ngrad::fisher
