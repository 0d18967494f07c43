#pragma once
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "jecrl/env_net.hpp"
#include "jecrl/policy_net.hpp"
#include "jecrl/trainer.hpp"

namespace jecrl {

// Layered key=value configuration: documented defaults, then a variant
// preset, then a config file, then command-line overrides — later layers
// win. Unknown keys are rejected at every layer.
class Config {
 public:
  Config();  // all documented defaults

  // base | I | II | III | IV | V | VI | juni | msu
  void apply_variant(const std::string& name);
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<int> int_list(const std::string& key) const;

  // Sorted key=value snapshot (for run manifests).
  std::vector<std::pair<std::string, std::string>> snapshot() const;

  TrainConfig train_config() const;
  PolicyNetConfig policy_config() const;
  EnvNetConfig env_config() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace jecrl
