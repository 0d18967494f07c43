#pragma once
#include <string>
#include <utility>
#include <vector>

#include "jecrl/distortion.hpp"
#include "jecrl/filter_banks.hpp"
#include "jecrl/graph.hpp"
#include "jecrl/jpeg_model.hpp"
#include "jecrl/rng.hpp"

namespace jecrl {

using GradientMap = RealGrid;  // d(score)/d(coefficient), DCT domain
using RewardMap = RealGrid;

struct EnvNetConfig {
  std::string bank = "dct8";   // dct8 | dct4 | srm30 | learnable
  bool bank_learnable = false; // "learnable" sets this; weights start as dct8
  double truncation = 8.0;     // TLU threshold after the preprocessing layer
  std::vector<int> widths = {48, 48, 64, 128, 256};
  std::vector<int> kernels = {5, 5, 1, 1, 1};
  std::vector<int> group_convs = {1, 1, 1, 1, 1};  // conv layers per group
  int pool_kernel = 5;
  int pool_stride = 2;
  double bn_momentum = 0.999;
  double bn_eps = 1e-5;
  double xi = 1e7;             // reward scale
};

struct SoftmaxPair {
  double cover = 0;  // class-0 probability
  double stego = 0;  // class-1 probability
};

// Cross-entropy of one cover/stego pair with the true labels (0, 1):
// −log z_cover.cover − log z_stego.stego.
double env_loss(const SoftmaxPair& z_cover, const SoftmaxPair& z_stego);

// r = xi · sign(m) ⊙ g.
RewardMap reward_map(const ModificationMap& m, const GradientMap& g, double xi);

// Binary steganalyzer over decompressed pixel planes. One forward/backward
// produces both parameter gradients (its own update) and input-pixel
// gradients (converted into coefficient-domain gradient maps for rewards).
class EnvNet {
 public:
  EnvNet(const EnvNetConfig& cfg, Rng& init_rng);

  // planes: one [H,W] pixel plane per sample, all the same shape.
  void forward(const std::vector<const PixelPlane*>& planes, bool training);

  // labels[i]: 0 = cover, 1 = stego. Seeds −(1/n_pairs)·1/z[label] on the
  // softmax output and backpropagates; returns the mean pair loss (each
  // consecutive (cover, stego) pair contributes env_loss / n_pairs).
  double backward_cross_entropy(const std::vector<int>& labels);

  SoftmaxPair softmax(int sample) const;
  double accuracy(const std::vector<int>& labels) const;

  // d(stego-class score pathway)/d(input pixel) for one sample, valid after
  // backward_cross_entropy (or any seeded backward).
  PixelPlane input_grad(int sample) const;

  // g = s ⊙ blockwise_dct(input pixel gradient) for one sample.
  GradientMap gradient_map(int sample, const QuantTable& table) const;

  Graph& graph() { return graph_; }
  std::vector<Param*> params(bool learnable_only = false) {
    return graph_.params(learnable_only);
  }
  const EnvNetConfig& config() const { return cfg_; }
  const FilterBank& bank() const { return bank_; }

 private:
  EnvNetConfig cfg_;
  FilterBank bank_;
  Graph graph_;
  int input_node_ = -1;
  int softmax_node_ = -1;
  int last_batch_ = 0, last_h_ = 0, last_w_ = 0;
};

}  // namespace jecrl
