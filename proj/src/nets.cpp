#include "ngrad/nets.hpp"

#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ngrad/rng.hpp"

namespace ngrad::nets {

void NetConfig::validate() const {
  if (layer_widths.size() < 2)
    throw ConfigError("NetConfig: need at least 2 layer widths (n_0..n_L)");
  for (int w : layer_widths)
    if (w < 1) throw ConfigError("NetConfig: zero-width layer");
  const std::size_t L = layer_widths.size() - 1;
  if (sigma_w2.size() != L)
    throw ConfigError("NetConfig: sigma_w2 needs one entry per layer");
  if (sigma_b2.size() != L)
    throw ConfigError("NetConfig: sigma_b2 needs one entry per layer");
  for (double s : sigma_w2)
    if (!(s >= 0.0)) throw ConfigError("NetConfig: negative sigma_w2");
  for (double s : sigma_b2)
    if (!(s >= 0.0)) throw ConfigError("NetConfig: negative sigma_b2");
}

NetConfig NetConfig::make(std::vector<int> widths, double sw2, double sb2,
                          Activation act, std::uint64_t seed) {
  NetConfig c;
  const std::size_t L = widths.empty() ? 0 : widths.size() - 1;
  c.layer_widths = std::move(widths);
  c.sigma_w2.assign(L, sw2);
  c.sigma_b2.assign(L, sb2);
  c.activation = act;
  c.seed = seed;
  c.validate();
  return c;
}

void ResNetConfig::validate() const {
  base.validate();
  for (int w : base.layer_widths)
    if (w != base.layer_widths.front())
      throw ConfigError("ResNetConfig: residual blocks require equal widths");
  if (alpha < 0.0 || alpha > 1.0)
    throw ConfigError("ResNetConfig: alpha must be in [0, 1]");
  if (!(sigma_v2 >= 0.0)) throw ConfigError("ResNetConfig: negative sigma_v2");
  if (alpha >= 1.0)
    std::cerr << "warning: resnet with alpha >= 1: activity grows without bound "
                 "across blocks\n";
}

std::int64_t NetworkParams::parameter_count() const {
  std::int64_t p = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    p += weights[l].size() + biases[l].size();
  return p;
}

bool NetworkParams::all_finite() const {
  for (const Mat& w : weights)
    if (!w.allFinite()) return false;
  for (const Vec& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

NetworkParams init_random(const NetConfig& config) {
  config.validate();
  NetworkParams p;
  p.config = config;
  const int L = config.num_layers();
  p.weights.reserve(L);
  p.biases.reserve(L);
  for (int l = 1; l <= L; ++l) {
    const int rows = config.layer_widths[l];
    const int cols = config.layer_widths[l - 1];
    const double wsd = std::sqrt(config.sigma_w2[l - 1] / cols);
    const double bsd = std::sqrt(config.sigma_b2[l - 1]);
    Mat W(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        W(i, j) = wsd * normal_at(config.seed, StreamDomain::Weights, l, i, j);
    Vec b(rows);
    for (int i = 0; i < rows; ++i)
      b[i] = bsd * normal_at(config.seed, StreamDomain::Biases, l, i, 0);
    p.weights.push_back(std::move(W));
    p.biases.push_back(std::move(b));
  }
  return p;
}

std::vector<Mat> init_mixers(const ResNetConfig& config) {
  config.validate();
  const int n = config.base.layer_widths.front();
  const int L = config.base.num_layers();
  const double vsd = std::sqrt(config.sigma_v2 / n);
  std::vector<Mat> mixers;
  mixers.reserve(L);
  for (int l = 1; l <= L; ++l) {
    Mat V(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        V(i, j) = vsd * normal_at(config.base.seed, StreamDomain::Mixers, l, i, j);
    mixers.push_back(std::move(V));
  }
  return mixers;
}

ForwardTrace forward(const NetworkParams& params, const Eigen::Ref<const Vec>& x0) {
  if (x0.size() != params.config.input_dim())
    throw ConfigError("forward: input length does not match n_0");
  const int L = params.config.num_layers();
  const Activation act = params.config.activation;
  ForwardTrace t;
  t.pre.reserve(L);
  t.post.reserve(L + 1);
  t.dphi.reserve(L);
  t.post.push_back(x0);
  for (int l = 0; l < L; ++l) {
    Vec u = params.weights[l] * t.post.back() + params.biases[l];
    t.post.push_back(phi(act, u));
    t.dphi.push_back(dphi(act, u));
    t.pre.push_back(std::move(u));
  }
  return t;
}

ForwardTrace forward_resnet(const NetworkParams& params, const std::vector<Mat>& mixers,
                            const ResNetConfig& config, const Eigen::Ref<const Vec>& x0) {
  config.validate();
  const int L = params.config.num_layers();
  if (static_cast<int>(mixers.size()) != L)
    throw ConfigError("forward_resnet: one mixer per block required");
  if (x0.size() != params.config.input_dim())
    throw ConfigError("forward_resnet: input length does not match block width");
  const Activation act = params.config.activation;
  ForwardTrace t;
  t.post.push_back(x0);
  for (int l = 0; l < L; ++l) {
    if (mixers[l].rows() != x0.size() || mixers[l].cols() != x0.size())
      throw ConfigError("forward_resnet: mixer shape mismatch");
    Vec u = params.weights[l] * t.post.back() + params.biases[l];
    t.post.push_back(mixers[l] * phi(act, u) + config.alpha * t.post.back());
    t.dphi.push_back(dphi(act, u));
    t.pre.push_back(std::move(u));
  }
  return t;
}

Mat layer_jacobian(const ForwardTrace& trace, const NetworkParams& params, int layer) {
  if (layer < 1 || layer > params.config.num_layers())
    throw ConfigError("layer_jacobian: layer index out of range");
  return trace.dphi[layer - 1].asDiagonal() * params.weights[layer - 1];
}

Mat layer_jacobian_resnet(const ForwardTrace& trace, const NetworkParams& params,
                          const std::vector<Mat>& mixers, const ResNetConfig& config,
                          int layer) {
  if (layer < 1 || layer > params.config.num_layers())
    throw ConfigError("layer_jacobian_resnet: layer index out of range");
  Mat b = mixers[layer - 1] * trace.dphi[layer - 1].asDiagonal() * params.weights[layer - 1];
  b.diagonal().array() += config.alpha;
  return b;
}

// --- file formats -----------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + s);
  }
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const std::string& tok : split(s, ','))
    out.push_back(parse_double(trim(tok), key));
  return out;
}

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("params file: truncated");
}

constexpr char kParamsMagic[8] = {'N', 'G', 'P', 'A', 'R', 'A', 'M', '1'};

}  // namespace

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  ParsedConfig pc;
  NetConfig& c = pc.net;
  std::optional<double> sw2_scalar, sb2_scalar;
  std::vector<double> sw2_list, sb2_list;
  bool have_widths = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "widths") {
      for (const std::string& tok : split(val, ',')) {
        const double w = parse_double(trim(tok), key);
        if (w < 1 || w != std::floor(w))
          throw ConfigError("config: widths must be positive integers");
        c.layer_widths.push_back(static_cast<int>(w));
      }
      have_widths = true;
    } else if (key == "sigma_w2") {
      sw2_list = parse_double_list(val, key);
    } else if (key == "sigma_b2") {
      sb2_list = parse_double_list(val, key);
    } else if (key == "sigma_v2") {
      pc.sigma_v2 = parse_double(val, key);
    } else if (key == "alpha") {
      pc.alpha = parse_double(val, key);
    } else if (key == "activation") {
      c.activation = activation_from_string(val);
    } else if (key == "seed") {
      try {
        c.seed = std::stoull(val);
      } catch (const std::exception&) {
        throw ConfigError("config: bad seed: " + val);
      }
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (!have_widths) throw ConfigError("config: missing 'widths'");
  const std::size_t L = c.layer_widths.size() - 1;
  auto broadcast = [&](std::vector<double>& lst, const char* key) {
    if (lst.empty()) throw ConfigError(std::string("config: missing '") + key + "'");
    if (lst.size() == 1) lst.assign(L, lst.front());
    if (lst.size() != L)
      throw ConfigError(std::string("config: '") + key +
                        "' needs 1 entry or one per layer");
  };
  broadcast(sw2_list, "sigma_w2");
  broadcast(sb2_list, "sigma_b2");
  c.sigma_w2 = std::move(sw2_list);
  c.sigma_b2 = std::move(sb2_list);
  c.validate();
  return pc;
}

ResNetConfig ParsedConfig::resnet() const {
  ResNetConfig rc;
  rc.base = net;
  if (sigma_v2) rc.sigma_v2 = *sigma_v2;
  if (alpha) rc.alpha = *alpha;
  rc.validate();
  return rc;
}

void save_config(const ParsedConfig& pc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  auto join = [](const auto& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) s += ",";
      std::ostringstream os;
      os.precision(17);
      os << xs[i];
      s += os.str();
    }
    return s;
  };
  out << "widths = " << join(pc.net.layer_widths) << "\n";
  out << "sigma_w2 = " << join(pc.net.sigma_w2) << "\n";
  out << "sigma_b2 = " << join(pc.net.sigma_b2) << "\n";
  if (pc.sigma_v2) out << "sigma_v2 = " << *pc.sigma_v2 << "\n";
  if (pc.alpha) out << "alpha = " << *pc.alpha << "\n";
  out << "activation = " << to_string(pc.net.activation) << "\n";
  out << "seed = " << pc.net.seed << "\n";
  if (!out) throw IoError("failed writing config file: " + path);
}

void save_params(const NetworkParams& params, const std::string& path,
                 const std::vector<Mat>* mixers) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write params file: " + path);
  out.write(kParamsMagic, sizeof(kParamsMagic));
  const auto& c = params.config;
  write_raw(out, static_cast<std::uint32_t>(c.layer_widths.size()));
  for (int w : c.layer_widths) write_raw(out, static_cast<std::uint32_t>(w));
  for (double s : c.sigma_w2) write_raw(out, s);
  for (double s : c.sigma_b2) write_raw(out, s);
  write_raw(out, static_cast<std::uint32_t>(c.activation));
  write_raw(out, c.seed);
  const std::uint32_t n_mixers = mixers ? static_cast<std::uint32_t>(mixers->size()) : 0;
  write_raw(out, n_mixers);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    out.write(reinterpret_cast<const char*>(params.weights[l].data()),
              sizeof(double) * params.weights[l].size());
    out.write(reinterpret_cast<const char*>(params.biases[l].data()),
              sizeof(double) * params.biases[l].size());
  }
  if (mixers)
    for (const Mat& v : *mixers)
      out.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
  if (!out) throw IoError("failed writing params file: " + path);
}

LoadedParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open params file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0)
    throw IoError("params file: bad magic");
  std::uint32_t n_widths = 0;
  read_raw(in, n_widths);
  if (n_widths < 2 || n_widths > 1u << 20) throw IoError("params file: bad header");
  LoadedParams lp;
  NetConfig& c = lp.params.config;
  c.layer_widths.resize(n_widths);
  for (auto& w : c.layer_widths) {
    std::uint32_t v = 0;
    read_raw(in, v);
    w = static_cast<int>(v);
  }
  const std::size_t L = n_widths - 1;
  c.sigma_w2.resize(L);
  c.sigma_b2.resize(L);
  for (double& s : c.sigma_w2) read_raw(in, s);
  for (double& s : c.sigma_b2) read_raw(in, s);
  std::uint32_t act = 0;
  read_raw(in, act);
  c.activation = static_cast<Activation>(act);
  read_raw(in, c.seed);
  std::uint32_t n_mixers = 0;
  read_raw(in, n_mixers);
  c.validate();
  for (std::size_t l = 1; l <= L; ++l) {
    Mat w(c.layer_widths[l], c.layer_widths[l - 1]);
    in.read(reinterpret_cast<char*>(w.data()), sizeof(double) * w.size());
    Vec b(c.layer_widths[l]);
    in.read(reinterpret_cast<char*>(b.data()), sizeof(double) * b.size());
    if (!in) throw IoError("params file: truncated");
    lp.params.weights.push_back(std::move(w));
    lp.params.biases.push_back(std::move(b));
  }
  const int n = c.layer_widths.front();
  for (std::uint32_t l = 0; l < n_mixers; ++l) {
    Mat v(n, n);
    in.read(reinterpret_cast<char*>(v.data()), sizeof(double) * v.size());
    if (!in) throw IoError("params file: truncated");
    lp.mixers.push_back(std::move(v));
  }
  return lp;
}

}  // namespace ngrad::nets
