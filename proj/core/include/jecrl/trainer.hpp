#pragma once
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jecrl/adam.hpp"
#include "jecrl/distortion.hpp"
#include "jecrl/env_net.hpp"
#include "jecrl/policy_net.hpp"

namespace jecrl {

struct TrainConfig {
  int batch = 8;
  int iters = 2000;
  PayloadSpec payload{PayloadSpec::Mode::kBpnzAC, 0.4};
  double alpha = 1.0;
  double beta = 0.01;
  double xi = 1e7;
  AdamConfig policy_adam{0.01, 0.9, 0.999, 1e-8, 1000, 0.1};
  AdamConfig env_adam{1e-3, 0.9, 0.999, 1e-8, 1000, 0.1};
  int update_policy = 1;      // policy phases per iteration
  int update_env = 1;         // env steps per iteration
  int checkpoint_every = 500; // 0 = only the final checkpoint
  int warmup = 0;             // iterations before policy updates begin
  uint64_t seed = 1;
  bool env_enabled = true;    // false: capacity-only training, no rewards

  void validate() const;
};

struct StepTelemetry {
  int64_t iteration = 0;  // 1-based
  double l_a = 0, l_r = 0, l_c = 0, l_e = 0;
  double mean_reward = 0;       // batch mean of (1/HW)·Σ r
  double payload_entropy = 0;   // batch mean, bits
  double env_accuracy = 0;      // 0.5 when the environment is disabled
};

// Alternating policy/environment training over an in-memory cover set. Each
// iteration consumes one batch in a seeded shuffled order: policy forward →
// sample modifications → simulated stegos → environment gradients → rewards
// → policy update, then the environment update on the same cover/stego
// pairs. Fully deterministic given (config, cover order, seed).
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const PolicyNetConfig& pcfg,
          const EnvNetConfig& ecfg, std::vector<JpegImage> covers,
          const std::optional<std::filesystem::path>& restore_from = {});

  StepTelemetry step();

  // Runs cfg.iters iterations (or fewer if already past them), appending
  // telemetry CSV, the epoch permutation log, and periodic checkpoints under
  // out_dir. Non-finite failures append a diagnostic line and rethrow.
  void run(const std::filesystem::path& out_dir);

  // Narrows the live f64 state to f32 as it writes, so a restored run and
  // the uninterrupted continuation see bit-identical state.
  void save_checkpoint(const std::filesystem::path& path);

  int64_t iteration() const { return iteration_; }
  PolicyNet& policy() { return policy_; }
  EnvNet* env() { return env_ ? &*env_ : nullptr; }
  const std::vector<JpegImage>& covers() const { return covers_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  std::vector<const JpegImage*> next_batch();
  void reshuffle();
  void append_epoch_log(const std::filesystem::path& out_dir) const;

  TrainConfig cfg_;
  std::vector<JpegImage> covers_;
  std::vector<double> target_bits_;  // resolved payload per cover
  PolicyNet policy_;
  std::optional<EnvNet> env_;
  Adam policy_adam_;
  std::optional<Adam> env_adam_;
  Rng data_rng_, sample_rng_;
  std::vector<uint32_t> perm_;
  size_t cursor_ = 0;
  int64_t epoch_ = 0;
  int64_t iteration_ = 0;
  std::deque<double> acc_window_;  // divergence guard, last 100 steps
  bool pending_epoch_log_ = true;  // current permutation not yet logged
};

// Deployment path: policy forward (inference mode) → q → ρ = ln(2/q − 2).
// Requires no environment network.
CostMap export_costs(PolicyNet& policy, const JpegImage& image);

// All *.jcoef files under dir, sorted by filename; they must share one shape.
std::vector<JpegImage> load_cover_dir(const std::filesystem::path& dir);

// "synthetic:halfnoise" or a directory path.
std::vector<JpegImage> resolve_cover_source(const std::string& source,
                                            int count, int image_size, int qf,
                                            uint64_t seed);

}  // namespace jecrl
