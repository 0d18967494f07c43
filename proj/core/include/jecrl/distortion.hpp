#pragma once
#include <cstdint>
#include <filesystem>
#include <string>

#include "jecrl/grid.hpp"
#include "jecrl/jpeg_model.hpp"

namespace jecrl {

// Wet-cost sentinel: entries at or above kWetCost/2 are treated as
// unmodifiable (change probability exactly 0).
inline constexpr double kWetCost = 1e13;

// Per-coefficient embedding cost ρ >= 0 under the symmetric ternary
// convention ρ(+1) = ρ(−1) = ρ, ρ(0) = 0.
using CostMap = RealGrid;

// Ternary embedding policy. Symmetry π(+1) = π(−1) is structural, so only
// the change probability q = π(+1) + π(−1) is stored.
class PolicyTensor {
 public:
  PolicyTensor() = default;
  explicit PolicyTensor(RealGrid q);

  int height() const { return q_.height(); }
  int width() const { return q_.width(); }
  const RealGrid& change_prob() const { return q_; }  // q per coefficient

  double pi_plus(int i, int j) const { return q_.at(i, j) / 2.0; }
  double pi_minus(int i, int j) const { return q_.at(i, j) / 2.0; }
  double pi_zero(int i, int j) const { return 1.0 - q_.at(i, j); }

 private:
  RealGrid q_;
};

// Ternary modification map, entries in {-1, 0, +1}.
using ModificationMap = Grid<int8_t>;

// Payload request: absolute bits or bits per nonzero AC coefficient.
struct PayloadSpec {
  enum class Mode { kBits, kBpnzAC };
  Mode mode = Mode::kBpnzAC;
  double value = 0.0;

  // Target message length in bits for a given image.
  double resolve_bits(const JpegImage& image) const;
  // Accepts "<number>bits" or "<number>bpnzAC", e.g. "0.4bpnzAC".
  static PayloadSpec parse(const std::string& text);
};

// Σ ρ·1[y≠x]; X and Y must differ by at most 1 per coefficient.
double additive_distortion(const JpegImage& x, const JpegImage& y, const CostMap& costs);

// Boltzmann-form change probabilities π(m) ∝ e^{−λρ(m)}. Wet entries get
// π(±1) = 0 exactly.
PolicyTensor probabilities_from_costs(const CostMap& costs, double lambda);

// Bisection for the λ whose policy entropy hits the payload target
// (tolerance 1e−3 bits). Entropy is monotone decreasing in λ, so the bracket
// [0, 2^k] always straddles once the upper end is doubled far enough.
double solve_lambda(const CostMap& costs, double target_bits);

// Independent per-coefficient sampling from the policy; deterministic in the
// seed. Scan order is row-major with cumulative thresholds (−1, 0, +1).
ModificationMap simulate_embedding(const PolicyTensor& policy, uint64_t seed);

// ρ = ln(2/q − 2) with q clamped to [1e−6, 2/3]; inverse of the λ=1
// probability formula on (0, 2/3), with the q = 2/3 ↔ ρ = 0 fixed point
// exact.
CostMap costs_from_policy(const RealGrid& q);

// Total ternary entropy in bits, 0·log 0 := 0.
double payload_entropy(const PolicyTensor& policy);
// Entropy of a single triple with change probability q.
double ternary_entropy_bits(double q);

// ".jmap" container (magic JMP1). Cost maps and modification maps are one
// channel; policies serialize as the (π(−1), π(0), π(+1)) triple.
struct JmapData {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;  // row-major, channel-interleaved

  float at(int i, int j, int c) const {
    return values[(static_cast<size_t>(i) * width + j) * channels + c];
  }
};
JmapData read_jmap(const std::filesystem::path& path);
void write_jmap(const std::filesystem::path& path, const JmapData& data);

CostMap costmap_from_jmap(const JmapData& data);
JmapData jmap_from_costmap(const CostMap& costs);
PolicyTensor policy_from_jmap(const JmapData& data);
JmapData jmap_from_policy(const PolicyTensor& policy);
ModificationMap modification_from_jmap(const JmapData& data);
JmapData jmap_from_modification(const ModificationMap& map);

}  // namespace jecrl
