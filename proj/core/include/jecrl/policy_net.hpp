#pragma once
#include <memory>
#include <string>
#include <vector>

#include "jecrl/distortion.hpp"
#include "jecrl/graph.hpp"
#include "jecrl/jpeg_model.hpp"
#include "jecrl/rng.hpp"

namespace jecrl {

// How the per-pixel texture estimate feeding the DCT-domain module is made.
enum class TextureProvider {
  kLearnedUnet,      // trainable encoder/decoder with skip connections
  kWaveletFixed,     // fixed db4 LH/HL/HH residual magnitudes
  kMsuFixed,         // fixed block-energy suitability map + small refiner
  kLearnedBlockwise  // no pixel-domain texture: 8×8 patchify straight to modes
};

TextureProvider texture_provider_by_name(const std::string& name);
std::string texture_provider_name(TextureProvider p);

struct PolicyNetConfig {
  TextureProvider provider = TextureProvider::kLearnedUnet;
  std::vector<int> unet_widths = {16, 32, 64, 128};
  int dct_channels = 64;       // width of the DCT-domain conv groups
  double leaky_slope = 0.2;    // decoder activations
  double bn_momentum = 0.999;
  double bn_eps = 1e-5;
  bool level_shift = true;     // +128 when decompressing inputs
  double q_floor = 1e-6;       // change probabilities clamped to [floor, 1-floor]
};

// Exact rearrangement between the (H/8)×(W/8)×64 feature volume and the H×W
// coefficient grid: grid(8a+k, 8b+l) = volume(a, b, 8k+l), all zero-based.
RealGrid mode_rearrange(const Tensor& volume, int sample = 0);
Tensor phase_split(const RealGrid& grid);

struct PolicyLossTerms {
  double l_a = 0;      // alpha*l_r + beta*l_c
  double l_r = 0;      // reward-weighted negative log-likelihood
  double l_c = 0;      // squared payload-entropy gap
  double entropy = 0;  // payload entropy of the policy, in bits
};

// Losses for one image given the sampled modification map and reward map.
// C_bits is the payload target in bits for this image.
PolicyLossTerms policy_loss(const PolicyTensor& policy, const ModificationMap& m,
                            const RealGrid& reward, double c_bits, double alpha,
                            double beta);

// Analytic d(l_a)/dq per coefficient, matching policy_loss.
RealGrid policy_loss_q_grad(const PolicyTensor& policy, const ModificationMap& m,
                            const RealGrid& reward, double c_bits, double alpha,
                            double beta);

class PolicyNet {
 public:
  PolicyNet(const PolicyNetConfig& cfg, Rng& init_rng);

  // Runs the batch through the network; all images must share one shape.
  // Returned probabilities are clamped to [q_floor, 1-q_floor].
  std::vector<PolicyTensor> forward(const std::vector<const JpegImage*>& images,
                                    bool training);
  PolicyTensor forward_single(const JpegImage& image, bool training);

  // Accumulates parameter gradients from per-image dL/dq grids aligned with
  // the most recent forward call (clamped positions get zero gradient).
  void backward(const std::vector<RealGrid>& dl_dq);

  Graph& graph() { return graph_; }
  const Graph& graph() const { return graph_; }
  std::vector<Param*> params(bool learnable_only = false) {
    return graph_.params(learnable_only);
  }

  const PolicyNetConfig& config() const { return cfg_; }

 private:
  Tensor make_input(const std::vector<const JpegImage*>& images) const;

  PolicyNetConfig cfg_;
  Graph graph_;
  int input_node_ = -1;
  int feature_node_ = -1;          // terminal sigmoid volume [B,H/8,W/8,64]
  int last_batch_ = 0, last_h_ = 0, last_w_ = 0;
  std::vector<std::vector<bool>> clamp_mask_;  // true where q was clamped
};

}  // namespace jecrl
