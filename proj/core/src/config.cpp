#include "jecrl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jecrl/error.hpp"

namespace jecrl {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"train.batch", "8"},
      {"train.iters", "2000"},
      {"train.payload", "0.4bpnzAC"},
      {"train.alpha", "1"},
      {"train.beta", "0.01"},
      {"train.xi", "1e7"},
      {"train.lr.policy", "0.01"},
      {"train.lr.env", "0.001"},
      {"train.decay_every", "1000"},
      {"train.decay_factor", "0.1"},
      {"train.update_ratio", "1:1"},
      {"train.checkpoint_every", "500"},
      {"train.warmup", "0"},
      {"train.seed", "1"},
      {"train.qf", "75"},          // synthetic-source quality
      {"train.image_size", "64"},  // synthetic-source dimensions
      {"train.corpus", "64"},      // synthetic-source image count
      {"policy.provider", "learned-unet"},
      {"policy.widths", "16,32,64,128"},
      {"policy.leaky_slope", "0.2"},
      {"policy.level_shift", "true"},
      {"env.enabled", "true"},
      {"env.bank", "dct8"},
      {"env.truncation", "8"},
      {"env.widths", "48,48,64,128,256"},
      {"env.kernels", "5,5,1,1,1"},
      {"env.group_convs", "1,1,1,1,1"},
      {"env.pool_kernel", "5"},
      {"env.pool_stride", "2"},
      {"bn.momentum", "0.999"},
      {"bn.eps", "1e-5"},
      {"adam.beta1", "0.9"},
      {"adam.beta2", "0.999"},
      {"adam.eps", "1e-8"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_num(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw DataError("config key " + key + ": not a number: " + v);
  return x;
}

}  // namespace

Config::Config() : values_(defaults()) {}

void Config::apply_variant(const std::string& name) {
  using KV = std::pair<const char*, const char*>;
  std::vector<KV> preset;
  if (name == "base") {
  } else if (name == "I") {
    preset = {{"policy.provider", "learned-blockwise"}};
  } else if (name == "II") {
    preset = {{"env.bank", "dct4"}};
  } else if (name == "III") {
    preset = {{"env.bank", "srm30"}};
  } else if (name == "IV") {
    preset = {{"env.bank", "learnable"}};
  } else if (name == "V") {
    // Deep backbone: 22 conv layers of 3×3.
    preset = {{"env.kernels", "3,3,3,3,3"}, {"env.group_convs", "4,4,4,5,5"}};
  } else if (name == "VI") {
    preset = {{"env.widths", "8,16,32,64,128"}};
  } else if (name == "juni") {
    preset = {{"policy.provider", "wavelet-fixed"}};
  } else if (name == "msu") {
    preset = {{"policy.provider", "msu-fixed"}};
  } else {
    throw DataError("unknown variant: " + name);
  }
  for (const auto& [k, v] : preset) set(k, v);
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected key=value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!defaults().count(key)) throw DataError("unknown config key: " + key);
  values_[key] = value;
}

const std::string& Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw DataError("unknown config key: " + key);
  return it->second;
}

double Config::num(const std::string& key) const {
  return parse_num(key, str(key));
}

int Config::integer(const std::string& key) const {
  const double x = num(key);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw DataError("config key " + key + ": not an integer: " + str(key));
  return i;
}

bool Config::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config key " + key + ": not a boolean: " + v);
}

std::vector<int> Config::int_list(const std::string& key) const {
  std::vector<int> out;
  std::istringstream is(str(key));
  std::string part;
  while (std::getline(is, part, ','))
    out.push_back(static_cast<int>(parse_num(key, trim(part))));
  if (out.empty()) throw DataError("config key " + key + ": empty list");
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::snapshot() const {
  return {values_.begin(), values_.end()};
}

TrainConfig Config::train_config() const {
  TrainConfig t;
  t.batch = integer("train.batch");
  t.iters = integer("train.iters");
  t.payload = PayloadSpec::parse(str("train.payload"));
  t.alpha = num("train.alpha");
  t.beta = num("train.beta");
  t.xi = num("train.xi");
  const auto adam = [&](double lr) {
    AdamConfig a;
    a.lr = lr;
    a.beta1 = num("adam.beta1");
    a.beta2 = num("adam.beta2");
    a.eps = num("adam.eps");
    a.decay_every = integer("train.decay_every");
    a.decay_factor = num("train.decay_factor");
    return a;
  };
  t.policy_adam = adam(num("train.lr.policy"));
  t.env_adam = adam(num("train.lr.env"));
  const std::string& ratio = str("train.update_ratio");
  const size_t colon = ratio.find(':');
  if (colon == std::string::npos)
    throw DataError("train.update_ratio must be policy:env, e.g. 1:1");
  t.update_policy = static_cast<int>(
      parse_num("train.update_ratio", ratio.substr(0, colon)));
  t.update_env = static_cast<int>(
      parse_num("train.update_ratio", ratio.substr(colon + 1)));
  t.checkpoint_every = integer("train.checkpoint_every");
  t.warmup = integer("train.warmup");
  t.seed = static_cast<uint64_t>(num("train.seed"));
  t.env_enabled = flag("env.enabled");
  return t;
}

PolicyNetConfig Config::policy_config() const {
  PolicyNetConfig p;
  p.provider = texture_provider_by_name(str("policy.provider"));
  p.unet_widths = int_list("policy.widths");
  p.leaky_slope = num("policy.leaky_slope");
  p.bn_momentum = num("bn.momentum");
  p.bn_eps = num("bn.eps");
  p.level_shift = flag("policy.level_shift");
  return p;
}

EnvNetConfig Config::env_config() const {
  EnvNetConfig e;
  e.bank = str("env.bank");
  e.truncation = num("env.truncation");
  e.widths = int_list("env.widths");
  e.kernels = int_list("env.kernels");
  e.group_convs = int_list("env.group_convs");
  e.pool_kernel = integer("env.pool_kernel");
  e.pool_stride = integer("env.pool_stride");
  e.bn_momentum = num("bn.momentum");
  e.bn_eps = num("bn.eps");
  e.xi = num("train.xi");
  return e;
}

}  // namespace jecrl
