#pragma once
#include <cstdint>
#include <vector>

#include "jecrl/layers.hpp"

namespace jecrl {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Learning-rate schedule: lr is multiplied by decay_factor once per
  // decay_every completed steps.
  int64_t decay_every = 30000;
  double decay_factor = 0.1;
};

// Standard Adam with bias correction over a fixed parameter list.
// Non-learnable params in the list are skipped.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig cfg);

  void step();
  uint64_t step_count() const { return t_; }
  void set_step_count(uint64_t t) { t_ = t; }
  // Effective rate for a given (zero-based) step under the decay schedule.
  double lr_for_step(uint64_t step) const;

  const AdamConfig& config() const { return cfg_; }
  // Moment buffers exposed for checkpointing, aligned with the param list.
  struct MomentRef {
    const std::string* param_name;
    std::vector<double>* m;
    std::vector<double>* v;
  };
  std::vector<MomentRef> moments();

 private:
  std::vector<Param*> params_;
  AdamConfig cfg_;
  uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace jecrl
