#include "jecrl/policy_net.hpp"

#include <algorithm>
#include <cmath>

#include "jecrl/error.hpp"
#include "jecrl/uerd.hpp"

namespace jecrl {

namespace {

constexpr double kLog2E = 1.4426950408889634;  // 1/ln(2)

// Scatter a coefficient-grid gradient back into one sample of the feature
// volume (the exact inverse of mode_rearrange), masking clamped entries.
void scatter_grid_grad(const RealGrid& grid, const std::vector<bool>& clamped,
                       Tensor& volume, int sample) {
  const int h = volume.shape[1], w = volume.shape[2];
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < w; ++b)
      for (int c = 0; c < 64; ++c) {
        const int i = 8 * a + c / 8, j = 8 * b + c % 8;
        const size_t src = static_cast<size_t>(i) * grid.width() + j;
        if (!clamped[src])
          volume.g[volume.idx4(sample, a, b, c)] += grid[src];
      }
}

}  // namespace

TextureProvider texture_provider_by_name(const std::string& name) {
  if (name == "learned-unet") return TextureProvider::kLearnedUnet;
  if (name == "wavelet-fixed") return TextureProvider::kWaveletFixed;
  if (name == "msu-fixed") return TextureProvider::kMsuFixed;
  if (name == "learned-blockwise") return TextureProvider::kLearnedBlockwise;
  throw DataError("unknown texture provider: " + name);
}

std::string texture_provider_name(TextureProvider p) {
  switch (p) {
    case TextureProvider::kLearnedUnet: return "learned-unet";
    case TextureProvider::kWaveletFixed: return "wavelet-fixed";
    case TextureProvider::kMsuFixed: return "msu-fixed";
    case TextureProvider::kLearnedBlockwise: return "learned-blockwise";
  }
  throw DataError("unknown texture provider value");
}

RealGrid mode_rearrange(const Tensor& volume, int sample) {
  int h, w;
  if (volume.shape.size() == 4) {
    h = volume.shape[1];
    w = volume.shape[2];
    if (volume.shape[3] != 64) throw DataError("feature volume needs 64 channels");
  } else if (volume.shape.size() == 3) {
    if (sample != 0) throw DataError("rank-3 volume has a single sample");
    h = volume.shape[0];
    w = volume.shape[1];
    if (volume.shape[2] != 64) throw DataError("feature volume needs 64 channels");
  } else {
    throw DataError("feature volume must be rank 3 or 4");
  }
  RealGrid grid(8 * h, 8 * w);
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < w; ++b)
      for (int c = 0; c < 64; ++c) {
        const double v = volume.shape.size() == 4
                             ? volume.v[volume.idx4(sample, a, b, c)]
                             : volume.v[(static_cast<size_t>(a) * w + b) * 64 + c];
        grid.at(8 * a + c / 8, 8 * b + c % 8) = v;
      }
  return grid;
}

Tensor phase_split(const RealGrid& grid) {
  if (grid.height() % 8 != 0 || grid.width() % 8 != 0)
    throw DataError("grid dimensions must be multiples of 8");
  const int h = grid.height() / 8, w = grid.width() / 8;
  Tensor volume({h, w, 64});
  for (int a = 0; a < h; ++a)
    for (int b = 0; b < w; ++b)
      for (int c = 0; c < 64; ++c)
        volume.v[(static_cast<size_t>(a) * w + b) * 64 + c] =
            grid.at(8 * a + c / 8, 8 * b + c % 8);
  return volume;
}

PolicyLossTerms policy_loss(const PolicyTensor& policy, const ModificationMap& m,
                            const RealGrid& reward, double c_bits, double alpha,
                            double beta) {
  const RealGrid& q = policy.change_prob();
  if (m.height() != q.height() || m.width() != q.width() ||
      reward.height() != q.height() || reward.width() != q.width())
    throw DataError("policy, modification map and reward map shapes differ");
  const double n = static_cast<double>(q.size());
  double lr = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    const double r = reward[i];
    if (r == 0.0) continue;  // skip to avoid 0·log(0)
    const double pi = m[i] == 0 ? 1.0 - q[i] : q[i] / 2.0;
    if (pi <= 0.0)
      throw NumericError("sampled modification has zero probability");
    lr -= r * std::log(pi);
  }
  PolicyLossTerms t;
  t.l_r = lr / n;
  t.entropy = payload_entropy(policy);
  t.l_c = (t.entropy - c_bits) * (t.entropy - c_bits);
  t.l_a = alpha * t.l_r + beta * t.l_c;
  return t;
}

RealGrid policy_loss_q_grad(const PolicyTensor& policy, const ModificationMap& m,
                            const RealGrid& reward, double c_bits, double alpha,
                            double beta) {
  const RealGrid& q = policy.change_prob();
  if (m.height() != q.height() || m.width() != q.width() ||
      reward.height() != q.height() || reward.width() != q.width())
    throw DataError("policy, modification map and reward map shapes differ");
  const double n = static_cast<double>(q.size());
  const double gap = payload_entropy(policy) - c_bits;
  RealGrid grad(q.height(), q.width());
  for (size_t i = 0; i < q.size(); ++i) {
    // Guard against the open-interval ends; callers feed clamped policies.
    const double qi = std::clamp(q[i], 1e-12, 1.0 - 1e-12);
    double g = 0.0;
    if (reward[i] != 0.0) {
      // d(-r log pi)/dq: pi = q/2 for ±1 (d log = 1/q), 1-q for 0.
      g += m[i] == 0 ? alpha * reward[i] / ((1.0 - qi) * n)
                     : -alpha * reward[i] / (qi * n);
    }
    // d entropy/dq = log2(2(1-q)/q); zero exactly at q = 2/3.
    const double dh = std::log(2.0 * (1.0 - qi) / qi) * kLog2E;
    g += beta * 2.0 * gap * dh;
    grad[i] = g;
  }
  return grad;
}

PolicyNet::PolicyNet(const PolicyNetConfig& cfg, Rng& init_rng) : cfg_(cfg) {
  if (cfg_.unet_widths.size() != 4)
    throw DataError("texture encoder needs exactly 4 widths");
  input_node_ = graph_.add_input("input");
  const int dc = cfg_.dct_channels;
  const auto bn = [&](const std::string& n, int ch) {
    return std::make_unique<BatchNorm>(n, ch, cfg_.bn_momentum, cfg_.bn_eps);
  };

  int head = input_node_;  // node feeding the DCT-domain module
  int head_ch = 1;
  if (cfg_.provider == TextureProvider::kLearnedUnet) {
    const auto& w = cfg_.unet_widths;
    // Encoder: four stride-2 conv+BN+ReLU stages.
    std::vector<int> enc;
    int prev = input_node_, prev_ch = 1;
    for (int s = 0; s < 4; ++s) {
      const std::string nm = "tex.enc" + std::to_string(s + 1);
      int c = graph_.add(nm + ".conv",
                         std::make_unique<Conv2d>(nm, 3, 3, prev_ch, w[s], 2),
                         {prev});
      int b = graph_.add(nm + ".bn", bn(nm + ".bn", w[s]), {c});
      prev = graph_.add(nm + ".relu", std::make_unique<ReLU>(), {b});
      prev_ch = w[s];
      enc.push_back(prev);
    }
    // Decoder: four stride-2 deconv+BN+LeakyReLU stages with skips into the
    // three matching encoder resolutions.
    const int dec_out[4] = {w[2], w[1], w[0], w[0]};
    for (int s = 0; s < 4; ++s) {
      const std::string nm = "tex.dec" + std::to_string(s + 1);
      int c = graph_.add(nm + ".deconv",
                         std::make_unique<Deconv2d>(nm, 3, 3, prev_ch, dec_out[s], 2),
                         {prev});
      int b = graph_.add(nm + ".bn", bn(nm + ".bn", dec_out[s]), {c});
      int a = graph_.add(nm + ".lrelu",
                         std::make_unique<LeakyReLU>(cfg_.leaky_slope), {b});
      if (s < 3) {
        const int skip = enc[2 - s];
        prev = graph_.add(nm + ".cat", std::make_unique<Concat>(), {a, skip});
        prev_ch = 2 * dec_out[s];
      } else {
        prev = a;
        prev_ch = dec_out[s];
      }
    }
    head = graph_.add("tex.out",
                      std::make_unique<Conv2d>("tex.out", 3, 3, prev_ch, 1, 1),
                      {prev});
    head_ch = 1;
  } else if (cfg_.provider == TextureProvider::kWaveletFixed) {
    head_ch = 3;  // LH/HL/HH residual magnitudes
  } else if (cfg_.provider == TextureProvider::kMsuFixed) {
    // Small stride-1 refiner on the block-suitability map.
    int prev = input_node_, prev_ch = 1;
    const int rw[3] = {16, 16, 1};
    for (int s = 0; s < 3; ++s) {
      const std::string nm = "msu.r" + std::to_string(s + 1);
      prev = graph_.add(nm + ".conv",
                        std::make_unique<Conv2d>(nm, 3, 3, prev_ch, rw[s], 1),
                        {prev});
      prev_ch = rw[s];
      if (s < 2) {
        int b = graph_.add(nm + ".bn", bn(nm + ".bn", rw[s]), {prev});
        prev = graph_.add(nm + ".relu", std::make_unique<ReLU>(), {b});
      }
    }
    head = prev;
    head_ch = 1;
  }

  // DCT-domain module. The group strides must compose to an exact 8×
  // reduction so the output volume aligns with the 8×8 block lattice.
  std::vector<int> strides;
  if (cfg_.provider == TextureProvider::kLearnedUnet)
    strides = {2, 2, 2};
  else if (cfg_.provider == TextureProvider::kLearnedBlockwise)
    strides = {8, 1, 1, 1};
  else
    strides = {1, 2, 1, 2, 1, 2};
  int prod = 1;
  for (int s : strides) prod *= s;
  if (prod != 8) throw DataError("DCT module strides must compose to 8");

  int prev = head;
  int prev_ch = head_ch;
  for (size_t s = 0; s < strides.size(); ++s) {
    const std::string nm = "dct.g" + std::to_string(s + 1);
    const int k = strides[s] == 8 ? 8 : 3;
    int c = graph_.add(nm + ".conv",
                       std::make_unique<Conv2d>(nm, k, k, prev_ch, dc, strides[s]),
                       {prev});
    int b = graph_.add(nm + ".bn", bn(nm + ".bn", dc), {c});
    const bool last = s + 1 == strides.size();
    prev = last ? graph_.add(nm + ".sigmoid", std::make_unique<Sigmoid>(), {b})
                : graph_.add(nm + ".relu", std::make_unique<ReLU>(), {b});
    prev_ch = dc;
  }
  if (prev_ch != 64)
    throw DataError("DCT module must end with 64 channels");
  feature_node_ = prev;

  graph_.init_params(init_rng);
}

Tensor PolicyNet::make_input(const std::vector<const JpegImage*>& images) const {
  if (images.empty()) throw DataError("empty image batch");
  const int h = images[0]->height, w = images[0]->width;
  const int align = cfg_.provider == TextureProvider::kLearnedUnet ? 16 : 8;
  if (h % align != 0 || w % align != 0)
    throw DataError("image dimensions must be multiples of " +
                    std::to_string(align) + " for this texture provider");
  int channels = cfg_.provider == TextureProvider::kWaveletFixed ? 3 : 1;
  Tensor in({static_cast<int>(images.size()), h, w, channels});
  for (size_t s = 0; s < images.size(); ++s) {
    const JpegImage& img = *images[s];
    if (img.height != h || img.width != w)
      throw DataError("batched images must share one shape");
    std::vector<RealGrid> planes;
    switch (cfg_.provider) {
      case TextureProvider::kLearnedUnet:
      case TextureProvider::kLearnedBlockwise:
        planes.push_back(decompress(img, cfg_.level_shift));
        break;
      case TextureProvider::kWaveletFixed: {
        TextureMap t = wavelet_texture(decompress(img, cfg_.level_shift));
        planes.assign(t.begin(), t.end());
        break;
      }
      case TextureProvider::kMsuFixed: {
        TextureMap t = msu_texture(img);
        planes.assign(t.begin(), t.end());
        break;
      }
    }
    if (static_cast<int>(planes.size()) != channels)
      throw NumericError("texture provider channel mismatch");
    for (int c = 0; c < channels; ++c)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
          in.v[in.idx4(static_cast<int>(s), i, j, c)] = planes[c].at(i, j);
  }
  return in;
}

std::vector<PolicyTensor> PolicyNet::forward(
    const std::vector<const JpegImage*>& images, bool training) {
  Tensor in = make_input(images);
  last_batch_ = in.shape[0];
  last_h_ = in.shape[1];
  last_w_ = in.shape[2];
  graph_.tensor(input_node_) = in;
  graph_.forward(training);

  const Tensor& feat = graph_.tensor(feature_node_);
  if (feat.shape[1] != last_h_ / 8 || feat.shape[2] != last_w_ / 8)
    throw NumericError("feature volume misaligned with the block lattice");

  std::vector<PolicyTensor> out;
  clamp_mask_.assign(images.size(), {});
  for (int s = 0; s < last_batch_; ++s) {
    RealGrid q = mode_rearrange(feat, s);
    std::vector<bool>& mask = clamp_mask_[static_cast<size_t>(s)];
    mask.assign(q.size(), false);
    for (size_t i = 0; i < q.size(); ++i) {
      if (q[i] < cfg_.q_floor) {
        q[i] = cfg_.q_floor;
        mask[i] = true;
      } else if (q[i] > 1.0 - cfg_.q_floor) {
        q[i] = 1.0 - cfg_.q_floor;
        mask[i] = true;
      }
    }
    out.emplace_back(std::move(q));
  }
  return out;
}

PolicyTensor PolicyNet::forward_single(const JpegImage& image, bool training) {
  return forward({&image}, training)[0];
}

void PolicyNet::backward(const std::vector<RealGrid>& dl_dq) {
  if (static_cast<int>(dl_dq.size()) != last_batch_ || last_batch_ == 0)
    throw DataError("gradient batch does not match the last forward pass");
  graph_.zero_grads();
  Tensor& feat = graph_.tensor(feature_node_);
  for (int s = 0; s < last_batch_; ++s) {
    const RealGrid& g = dl_dq[static_cast<size_t>(s)];
    if (g.height() != last_h_ || g.width() != last_w_)
      throw DataError("gradient grid shape does not match the forward pass");
    scatter_grid_grad(g, clamp_mask_[static_cast<size_t>(s)], feat, s);
  }
  graph_.backward();
}

}  // namespace jecrl
