#include "ngrad/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ngrad/fisher_probe.hpp"
#include "ngrad/io.hpp"
#include "ngrad/meanfield.hpp"
#include "ngrad/nets.hpp"
#include "ngrad/parallel.hpp"
#include "ngrad/rng.hpp"
#include "ngrad/trainer.hpp"
#include "ngrad/unit_fisher.hpp"

namespace ngrad::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunContext {
  fs::path out_dir;
  std::vector<std::string> argv;  // normalized args for the manifest
  std::string subcommand;
  std::uint64_t master_seed = 0;
  json config;
  std::vector<std::string> outputs;
  std::string started_at;

  fs::path out(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }

  void write_manifest() {
    json m;
    m["tool"] = "ngrad";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["argv"] = argv;
    m["master_seed"] = master_seed;
    m["config"] = config;
    m["started_at"] = started_at;
    m["finished_at"] = iso_now();
    m["outputs"] = outputs;
    std::ofstream out(out_dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + out_dir.string());
    out << m.dump(2) << "\n";
  }
};

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " list: " + s);
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " list: " + s);
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
  return out;
}

const char* regime_name(double chi) {
  if (chi > 1.0 + 1e-9) return "chaotic";
  if (chi < 1.0 - 1e-9) return "ordered";
  return "critical";
}

// --- unit-coeffs -------------------------------------------------------------

struct UnitCoeffsOpts {
  std::string activation = "relu";
  std::string w = "1.0";
  std::string w0 = "0.0";
  double damping = 0.0;
};

void run_unit_coeffs(RunContext& ctx, const UnitCoeffsOpts& o) {
  const Activation act = activation_from_string(o.activation);
  const std::vector<double> ws = parse_double_list(o.w, "--w");
  const std::vector<double> w0s = parse_double_list(o.w0, "--w0");
  ctx.config = {{"activation", o.activation}, {"w", ws}, {"w0", w0s},
                {"damping", o.damping}};
  io::CsvWriter csv(ctx.out("unit_coeffs.csv"),
                    {"activation", "w", "w0", "A00", "A0n", "Ann", "Abar00", "D",
                     "X", "Y", "Z", "singular"});
  for (double w : ws) {
    for (double w0 : w0s) {
      const auto c = unit_fisher::coeffs(w, w0, act, o.damping);
      auto row = csv.row();
      row << o.activation << w << w0 << c.A00 << c.A0n << c.Ann;
      if (c.invertible)
        row << c.Abar00 << c.D << c.X << c.Y << c.Z << 0;
      else
        row << "nan" << c.D << "nan" << "nan" << "nan" << 1;
    }
  }
}

// --- meanfield ---------------------------------------------------------------

struct MeanfieldOpts {
  std::string config_file;
  double A0 = 1.0;
  int samples = 20;
  bool resnet = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void run_meanfield(RunContext& ctx, const MeanfieldOpts& o) {
  nets::ParsedConfig pc = nets::load_config(o.config_file);
  if (o.seed_set) pc.net.seed = o.seed;
  ctx.master_seed = pc.net.seed;
  ctx.config = {{"config_file", o.config_file}, {"A0", o.A0},
                {"samples", o.samples},         {"resnet", o.resnet},
                {"seed", pc.net.seed}};

  const int L = pc.net.num_layers();
  const int n0 = pc.net.input_dim();

  // Monte-Carlo activities: average over (net, input) draws.
  Vec a_mc = Vec::Zero(L + 1);
  for (int s = 0; s < o.samples; ++s) {
    nets::NetConfig cfg = pc.net;
    cfg.seed = detail::hash_key(pc.net.seed, 0x6D66, s, 0);
    const nets::NetworkParams params = nets::init_random(cfg);
    RngStream rng(pc.net.seed, StreamDomain::Inputs, s);
    Vec x(n0);
    rng.fill_normal(x);
    x *= std::sqrt(o.A0);
    const nets::ForwardTrace tr =
        o.resnet ? nets::forward_resnet(params, nets::init_mixers({cfg, pc.resnet().sigma_v2,
                                                                   pc.resnet().alpha}),
                                        pc.resnet(), x)
                 : nets::forward(params, x);
    for (int l = 0; l <= L; ++l)
      a_mc[l] += tr.post[l].squaredNorm() / tr.post[l].size() / o.samples;
  }

  io::CsvWriter csv(ctx.out("meanfield.csv"),
                    {"layer", "A_theory", "A_mc", "tau2", "chi", "chi_prod", "regime"});
  if (o.resnet) {
    const auto t = meanfield::resnet_propagate(pc.resnet(), o.A0);
    Vec chi_prod(L);
    double prod = 1.0;
    for (int l = L - 1; l >= 0; --l) chi_prod[l] = (prod *= t.chi_bar[l]);
    csv.row() << 0 << t.A[0] << a_mc[0] << 0.0 << 1.0 << 1.0 << "-";
    for (int l = 1; l <= L; ++l)
      csv.row() << l << t.A[l] << a_mc[l] << t.tau2[l - 1] << t.chi_bar[l - 1]
                << chi_prod[l - 1] << regime_name(t.chi_bar[l - 1]);
    if (t.diverged)
      std::cerr << "warning: resnet activity is diverging across blocks\n";
  } else {
    const auto t = meanfield::propagate(pc.net, o.A0);
    csv.row() << 0 << t.A[0] << a_mc[0] << 0.0 << 1.0 << 1.0 << "-";
    for (int l = 1; l <= L; ++l)
      csv.row() << l << t.A[l] << a_mc[l] << t.tau2[l - 1] << t.chi[l - 1]
                << t.chi_prod[l - 1] << regime_name(t.chi[l - 1]);
  }
}

// --- fisher-probe ------------------------------------------------------------

struct FisherProbeOpts {
  std::string mode = "full";
  std::string widths = "50,100,200,400";
  std::string activation = "tanh";
  std::string template_widths = "n,n,1";
  double sigma_w2 = 2.0;
  double sigma_b2 = 0.0;
  double sigma_v2 = 1.0;
  double alpha = 0.5;
  std::int64_t samples = 10000;
  std::uint64_t seed = 0;
  int m = 0;
  int pairs = 1500;
  bool resnet = false;
  std::int64_t max_params = 20000;
};

nets::NetConfig probe_net_config(const FisherProbeOpts& o, const std::vector<int>& widths) {
  return nets::NetConfig::make(widths, o.sigma_w2, o.sigma_b2,
                               activation_from_string(o.activation), o.seed);
}

void run_fisher_probe(RunContext& ctx, const FisherProbeOpts& o) {
  const std::vector<int> widths = parse_int_list(o.widths, "--widths");
  ctx.master_seed = o.seed;
  ctx.config = {{"mode", o.mode},         {"widths", widths},
                {"activation", o.activation}, {"sigma_w2", o.sigma_w2},
                {"sigma_b2", o.sigma_b2}, {"samples", o.samples},
                {"seed", o.seed},         {"m", o.m},
                {"pairs", o.pairs},       {"resnet", o.resnet},
                {"template", o.template_widths}, {"sigma_v2", o.sigma_v2},
                {"alpha", o.alpha}};

  if (o.mode == "full") {
    const nets::NetworkParams params = nets::init_random(probe_net_config(o, widths));
    fisher::FisherOptions fo;
    fo.n_samples = o.samples;
    fo.seed = o.seed;
    fo.max_params = o.max_params;
    const auto f = fisher::estimate_fisher(params, fo);
    io::CsvWriter csv(ctx.out("fisher_full.csv"),
                      {"metric", "layer_a", "layer_b", "value"});
    const int L = f.index.num_layers();
    const auto& g = f.matrix;
    // rms by block class
    for (int la = 1; la <= L; ++la) {
      double diag_sq = 0, diag_n = 0, off_sq = 0, off_n = 0;
      for (int u = 0; u < f.index.units(la); ++u) {
        const auto b1 = f.index.block(la, u);
        diag_sq += g.diagonal().segment(b1.begin, b1.end - b1.begin).squaredNorm();
        diag_n += b1.end - b1.begin;
        for (int v = 0; v < f.index.units(la); ++v) {
          if (u == v) continue;
          const auto b2 = f.index.block(la, v);
          off_sq += g.block(b1.begin, b2.begin, b1.end - b1.begin, b2.end - b2.begin)
                        .squaredNorm();
          off_n += (b1.end - b1.begin) * (b2.end - b2.begin);
        }
      }
      csv.row() << "rms_diag" << la << la << std::sqrt(diag_sq / diag_n);
      if (off_n > 0)
        csv.row() << "rms_offunit" << la << la << std::sqrt(off_sq / off_n);
    }
    for (int la = 1; la <= L; ++la) {
      for (int lb = la + 1; lb <= L; ++lb) {
        const auto a0 = f.index.block(la, 0);
        const auto b0 = f.index.block(lb, 0);
        const std::int64_t rows =
            static_cast<std::int64_t>(f.index.units(la)) * f.index.slots(la);
        const std::int64_t cols =
            static_cast<std::int64_t>(f.index.units(lb)) * f.index.slots(lb);
        const double sq = g.block(a0.begin, b0.begin, rows, cols).squaredNorm();
        csv.row() << "rms_cross" << la << lb
                  << std::sqrt(sq / (static_cast<double>(rows) * cols));
      }
    }
    csv.row() << "symmetry_max_abs" << 0 << 0
              << (g - g.transpose()).cwiseAbs().maxCoeff();
    if (f.index.total() <= 2000) {
      Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
      csv.row() << "min_eig_over_trace" << 0 << 0
                << es.eigenvalues().minCoeff() / g.trace();
    }
  } else if (o.mode == "domino") {
    const nets::NetworkParams params = nets::init_random(probe_net_config(o, widths));
    io::CsvWriter csv(ctx.out("fisher_domino.csv"),
                      {"m", "diag_mean", "theory_chi_prod", "rel_err", "offdiag_rms",
                       "samples"});
    const int L = params.config.num_layers();
    const int m_lo = o.m > 0 ? o.m : 1;
    const int m_hi = o.m > 0 ? o.m : L - 1;
    for (int m = m_lo; m <= m_hi; ++m) {
      const auto st = fisher::domino_check(params, m, o.samples, o.seed);
      csv.row() << st.m << st.diag_mean << st.theory_chi_prod
                << std::abs(st.diag_mean - st.theory_chi_prod) /
                       std::max(1e-300, std::abs(st.theory_chi_prod))
                << st.offdiag_rms << o.samples;
    }
  } else if (o.mode == "decay") {
    std::vector<int> tmpl_widths;
    {
      std::stringstream ss(o.template_widths);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (tok == "n")
          tmpl_widths.push_back(widths.front());
        else
          tmpl_widths.push_back(std::stoi(tok));
      }
    }
    io::CsvWriter csv(ctx.out("fisher_decay.csv"),
                      {"width", "rms_diag", "rms_off_same_layer", "rms_off_cross_layer",
                       "rms_stripe", "rms_bulk", "ratio_off_diag", "fitted_slope"});
    fisher::BlockDecayReport rep;
    if (o.resnet) {
      nets::ResNetConfig rc;
      rc.base = nets::NetConfig::make(tmpl_widths, o.sigma_w2, o.sigma_b2,
                                      activation_from_string(o.activation), o.seed);
      rc.sigma_v2 = o.sigma_v2;
      rc.alpha = o.alpha;
      rep = fisher::block_decay_scan_resnet(widths, rc, o.samples, o.seed, o.pairs);
    } else {
      rep = fisher::block_decay_scan(
          widths,
          nets::NetConfig::make(tmpl_widths, o.sigma_w2, o.sigma_b2,
                                activation_from_string(o.activation), o.seed),
          o.samples, o.seed, o.pairs);
    }
    for (const auto& r : rep.rows)
      csv.row() << r.width << r.rms_diag << r.rms_off_same_layer
                << r.rms_off_cross_layer << r.rms_stripe << r.rms_bulk
                << r.rms_off_same_layer / r.rms_diag << rep.fitted_slope;
  } else if (o.mode == "nonclosure") {
    io::CsvWriter csv(ctx.out("fisher_nonclosure.csv"),
                      {"n", "offdiag_rms_g", "offdiag_rms_g2", "ratio"});
    for (int n : widths) {
      const auto r = fisher::nonclosure_demo(n, o.seed);
      csv.row() << r.n << r.offdiag_rms_g << r.offdiag_rms_g2 << r.ratio;
    }
  } else if (o.mode == "selfavg") {
    io::CsvWriter csv(ctx.out("fisher_selfavg.csv"),
                      {"n", "samples", "e_f", "offdiag_gap", "offdiag_se", "diag_gap",
                       "diag_gap_scale", "diag_gap_rel"});
    for (int n : widths) {
      const auto r = fisher::self_averaging_check(
          n, activation_from_string(o.activation), o.samples, o.seed, o.sigma_w2);
      csv.row() << r.n << r.n_samples << r.e_f << r.offdiag_gap << r.offdiag_se
                << r.diag_gap << r.diag_gap_scale << r.diag_gap_rel;
    }
  } else {
    throw ConfigError("fisher-probe: unknown --mode '" + o.mode + "'");
  }
}

// --- train ---------------------------------------------------------------------

struct TrainOpts {
  std::string net_config;
  std::string optimizer = "sgd";
  bool resnet = false;
  int steps = 100;
  int batch = 32;
  double eta = 0.01;
  double damping = 0.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int polyak_window = 0;
  bool compat_eq68_w0 = false;
  int spot_check_every = 0;
};

void run_train(RunContext& ctx, const TrainOpts& o) {
  nets::ParsedConfig pc = nets::load_config(o.net_config);
  if (o.seed_set) pc.net.seed = o.seed;
  ctx.master_seed = pc.net.seed;
  ctx.config = {{"net_config", o.net_config}, {"optimizer", o.optimizer},
                {"resnet", o.resnet},         {"steps", o.steps},
                {"batch", o.batch},           {"eta", o.eta},
                {"damping", o.damping},       {"seed", pc.net.seed},
                {"polyak_window", o.polyak_window},
                {"compat_eq68_w0", o.compat_eq68_w0},
                {"spot_check_every", o.spot_check_every}};

  trainer::OptimizerConfig cfg;
  if (o.optimizer == "sgd")
    cfg.kind = trainer::Optimizer::SGD;
  else if (o.optimizer == "ungd")
    cfg.kind = trainer::Optimizer::UnitNGD;
  else
    throw ConfigError("train: unknown --optimizer '" + o.optimizer + "'");
  cfg.eta = o.eta;
  cfg.batch_size = o.batch;
  cfg.damping = o.damping;
  cfg.polyak = o.polyak_window > 0;
  cfg.polyak_window = std::max(1, o.polyak_window);
  cfg.compat_eq68_w0 = o.compat_eq68_w0;
  cfg.spot_check_every = o.spot_check_every;

  nets::NetConfig teacher_cfg = pc.net;
  nets::NetConfig student_cfg = pc.net;
  student_cfg.seed = detail::hash_key(pc.net.seed, 0x53545544, 0, 0);

  trainer::TrainRecord rec;
  nets::NetworkParams student = nets::init_random(student_cfg);
  if (o.resnet) {
    const nets::ResNetConfig rc = pc.resnet();
    nets::ResNetConfig rc_teacher = rc;
    rc_teacher.base = teacher_cfg;
    const std::vector<Mat> mixers = nets::init_mixers(rc_teacher);
    trainer::TeacherStream data(nets::init_random(teacher_cfg), mixers, rc_teacher,
                                pc.net.seed);
    nets::ResNetConfig rc_student = rc;
    rc_student.base = student_cfg;
    rec = trainer::train_resnet(student, mixers, rc_student, data, cfg, o.steps);
    nets::save_params(student, ctx.out("params_final.bin").string(), &mixers);
  } else {
    trainer::TeacherStream data(nets::init_random(teacher_cfg), pc.net.seed);
    rec = trainer::train(student, data, cfg, o.steps);
    nets::save_params(student, ctx.out("params_final.bin").string());
  }

  io::CsvWriter csv(ctx.out("train_record.csv"),
                    {"step", "loss", "step_norm", "singular_fallbacks", "wall_ms",
                     "spot_check_rel_err"});
  for (const auto& r : rec.steps)
    csv.row() << r.step << r.loss << r.step_norm << r.singular_fallbacks << r.wall_ms
              << r.spot_check_rel_err;
  if (rec.flagged)
    std::cerr << "warning: some step fell back to the plain gradient on >= 50% of "
                 "units; run flagged\n";
}

// --- rerun ---------------------------------------------------------------------

int run_impl(const std::vector<std::string>& args, int depth);

int run_rerun(const std::string& manifest_path, const std::string& out_override,
              int depth) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path);
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad manifest: ") + e.what());
  }
  if (!m.contains("argv")) throw ConfigError("manifest has no argv");
  std::vector<std::string> argv;
  for (const auto& a : m["argv"]) argv.push_back(a.get<std::string>());
  // Drop any recorded --out and substitute the new output directory.
  std::vector<std::string> cleaned;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out") {
      ++i;
      continue;
    }
    cleaned.push_back(argv[i]);
  }
  if (!out_override.empty()) {
    cleaned.push_back("--out");
    cleaned.push_back(out_override);
  }
  return run_impl(cleaned, depth + 1);
}

int run_impl(const std::vector<std::string>& args, int depth) {
  CLI::App app{"random deep net Fisher structure and unit-wise natural gradient"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir;
  if (const char* env = std::getenv("NGRAD_OUT_DIR")) out_dir = env;
  if (out_dir.empty()) out_dir = ".";
  int threads = 0;
  app.add_option("--out", out_dir, "output directory (default $NGRAD_OUT_DIR or .)");
  app.add_option("--threads", threads, "worker cap; results do not depend on it");

  UnitCoeffsOpts uc;
  auto* cmd_uc = app.add_subcommand("unit-coeffs", "closed-form unit Fisher coefficients");
  cmd_uc->add_option("--activation", uc.activation);
  cmd_uc->add_option("--w", uc.w, "comma list of weight norms");
  cmd_uc->add_option("--w0", uc.w0, "comma list of biases");
  cmd_uc->add_option("--damping", uc.damping);

  MeanfieldOpts mf;
  auto* cmd_mf = app.add_subcommand("meanfield", "theory vs Monte-Carlo activity trace");
  cmd_mf->add_option("--config", mf.config_file)->required();
  cmd_mf->add_option("--A0", mf.A0);
  cmd_mf->add_option("--samples", mf.samples);
  auto* mf_seed = cmd_mf->add_option("--seed", mf.seed);
  cmd_mf->add_flag("--resnet", mf.resnet);

  FisherProbeOpts fp;
  auto* cmd_fp = app.add_subcommand("fisher-probe", "empirical Fisher structure checks");
  cmd_fp->add_option("--mode", fp.mode, "full|domino|decay|nonclosure|selfavg");
  cmd_fp->add_option("--widths", fp.widths);
  cmd_fp->add_option("--activation", fp.activation);
  cmd_fp->add_option("--template", fp.template_widths,
                     "decay template, e.g. n,n,1 (n = scanned width)");
  cmd_fp->add_option("--sigma-w2", fp.sigma_w2);
  cmd_fp->add_option("--sigma-b2", fp.sigma_b2);
  cmd_fp->add_option("--sigma-v2", fp.sigma_v2);
  cmd_fp->add_option("--alpha", fp.alpha);
  cmd_fp->add_option("--samples", fp.samples);
  cmd_fp->add_option("--seed", fp.seed);
  cmd_fp->add_option("--m", fp.m, "domino layer (0 = all)");
  cmd_fp->add_option("--pairs", fp.pairs, "tracked pairs per stratum");
  cmd_fp->add_option("--max-params", fp.max_params);
  cmd_fp->add_flag("--resnet", fp.resnet);

  TrainOpts tr;
  auto* cmd_tr = app.add_subcommand("train", "teacher-student SGD / unit NGD runs");
  cmd_tr->add_option("--net", tr.net_config)->required();
  cmd_tr->add_option("--optimizer", tr.optimizer, "sgd|ungd");
  cmd_tr->add_flag("--resnet", tr.resnet);
  cmd_tr->add_option("--steps", tr.steps);
  cmd_tr->add_option("--batch", tr.batch);
  cmd_tr->add_option("--eta", tr.eta);
  cmd_tr->add_option("--damping", tr.damping);
  auto* tr_seed = cmd_tr->add_option("--seed", tr.seed);
  cmd_tr->add_option("--polyak-window", tr.polyak_window);
  cmd_tr->add_flag("--compat-eq68-w0", tr.compat_eq68_w0);
  cmd_tr->add_option("--spot-check-every", tr.spot_check_every);

  std::string rr_manifest, rr_out;
  auto* cmd_rr = app.add_subcommand("rerun", "replay a manifest bit-exactly");
  cmd_rr->add_option("manifest", rr_manifest)->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: code=" << kConfigError << " message=\"" << e.what() << "\"\n";
    return kConfigError;
  }

  if (threads > 0) set_max_threads(threads);

  if (cmd_rr->parsed()) {
    if (depth > 4) throw ConfigError("rerun: manifest recursion too deep");
    return run_rerun(rr_manifest, out_dir == "." ? "" : out_dir, depth);
  }

  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.argv = args;
  ctx.started_at = iso_now();
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  {
    std::ofstream probe(ctx.out_dir / ".ngrad_write_test");
    if (!probe) throw IoError("output directory not writable: " + ctx.out_dir.string());
  }
  fs::remove(ctx.out_dir / ".ngrad_write_test", ec);

  if (cmd_uc->parsed()) {
    ctx.subcommand = "unit-coeffs";
    run_unit_coeffs(ctx, uc);
  } else if (cmd_mf->parsed()) {
    ctx.subcommand = "meanfield";
    mf.seed_set = mf_seed->count() > 0;
    run_meanfield(ctx, mf);
  } else if (cmd_fp->parsed()) {
    ctx.subcommand = "fisher-probe";
    run_fisher_probe(ctx, fp);
  } else if (cmd_tr->parsed()) {
    ctx.subcommand = "train";
    tr.seed_set = tr_seed->count() > 0;
    run_train(ctx, tr);
  }
  ctx.write_manifest();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return run_impl(args, 0);
  } catch (const ConfigError& e) {
    std::cerr << "error: code=" << kConfigError << " message=\"" << e.what() << "\"\n";
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "error: code=" << kNumericError << " message=\"" << e.what() << "\"\n";
    return kNumericError;
  } catch (const IoError& e) {
    std::cerr << "error: code=" << kIoError << " message=\"" << e.what() << "\"\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: code=1 message=\"" << e.what() << "\"\n";
    return 1;
  }
}

}  // namespace ngrad::cli
