#include "jecrl/env_net.hpp"

#include <cmath>

#include "jecrl/error.hpp"

namespace jecrl {

double env_loss(const SoftmaxPair& z_cover, const SoftmaxPair& z_stego) {
  if (z_cover.cover <= 0.0 || z_stego.stego <= 0.0)
    throw NumericError("softmax output collapsed to zero probability");
  return -std::log(z_cover.cover) - std::log(z_stego.stego);
}

RewardMap reward_map(const ModificationMap& m, const GradientMap& g, double xi) {
  if (!m.same_shape(g))
    throw DataError("modification map and gradient map shapes differ");
  RewardMap r(g.height(), g.width());
  for (size_t i = 0; i < g.size(); ++i)
    r[i] = m[i] == 0 ? 0.0 : xi * (m[i] > 0 ? g[i] : -g[i]);
  return r;
}

EnvNet::EnvNet(const EnvNetConfig& cfg, Rng& init_rng) : cfg_(cfg) {
  const size_t groups = cfg_.widths.size();
  if (groups == 0 || cfg_.kernels.size() != groups ||
      cfg_.group_convs.size() != groups)
    throw DataError("widths, kernels and group_convs must agree in length");

  // "learnable" shares the dct8 geometry but lets the weights train.
  bank_ = bank_by_name(cfg_.bank == "learnable" ? "dct8" : cfg_.bank);
  if (cfg_.bank == "learnable") {
    bank_.name = "learnable";
    cfg_.bank_learnable = true;
  }
  const int residuals = static_cast<int>(bank_.filters.size());

  input_node_ = graph_.add_input("input");
  auto pre = std::make_unique<Conv2d>("env.pre", bank_.kernel, bank_.kernel, 1,
                                      residuals, 1, cfg_.bank_learnable);
  pre->weight().t = bank_.conv_weights();
  int prev = graph_.add("env.pre.conv", std::move(pre), {input_node_});
  prev = graph_.add("env.pre.tlu", std::make_unique<Tlu>(cfg_.truncation), {prev});

  int prev_ch = residuals;
  for (size_t gidx = 0; gidx < groups; ++gidx) {
    const int width = cfg_.widths[gidx];
    const int k = cfg_.kernels[gidx];
    for (int c = 0; c < cfg_.group_convs[gidx]; ++c) {
      const std::string nm =
          "env.g" + std::to_string(gidx + 1) + (c ? "." + std::to_string(c + 1) : "");
      int cv = graph_.add(nm + ".conv",
                          std::make_unique<Conv2d>(nm, k, k, prev_ch, width, 1),
                          {prev});
      int b = graph_.add(
          nm + ".bn",
          std::make_unique<BatchNorm>(nm + ".bn", width, cfg_.bn_momentum, cfg_.bn_eps),
          {cv});
      prev = graph_.add(nm + ".relu", std::make_unique<ReLU>(), {b});
      prev_ch = width;
    }
    if (gidx + 1 < groups)
      prev = graph_.add("env.pool" + std::to_string(gidx + 1),
                        std::make_unique<AvgPool>(cfg_.pool_kernel, cfg_.pool_stride),
                        {prev});
  }
  prev = graph_.add("env.gap", std::make_unique<GlobalAvgPool>(), {prev});
  prev = graph_.add("env.fc",
                    std::make_unique<FullyConnected>("env.fc", prev_ch, 2), {prev});
  softmax_node_ = graph_.add("env.softmax", std::make_unique<Softmax>(), {prev});

  graph_.init_params(init_rng);
  for (Param* p : graph_.params()) {
    if (cfg_.bank_learnable && p->name == "env.pre.w") {
      // init_params randomized the (learnable) preprocessing conv; restore the
      // bank values so training starts from the transform basis.
      p->t = bank_.conv_weights();
    } else if (p->name == "env.fc.w") {
      // Quarter-scale classifier head: small enough that the untrained
      // network scores at chance on random pairs, nonzero so the detection
      // gradient carries spatial structure from the first adversarial step
      // (an exactly-zero head leaves the trunk without a learning signal
      // until the head has already saturated on the early, easy stegos).
      for (double& v : p->t.v) v *= 0.25;
    }
  }
}

void EnvNet::forward(const std::vector<const PixelPlane*>& planes, bool training) {
  if (planes.empty()) throw DataError("empty environment batch");
  const int h = planes[0]->height(), w = planes[0]->width();
  Tensor in({static_cast<int>(planes.size()), h, w, 1});
  for (size_t s = 0; s < planes.size(); ++s) {
    const PixelPlane& p = *planes[s];
    if (p.height() != h || p.width() != w)
      throw DataError("batched planes must share one shape");
    std::copy(p.begin(), p.end(),
              in.v.begin() + static_cast<long>(s) * h * w);
  }
  last_batch_ = in.shape[0];
  last_h_ = h;
  last_w_ = w;
  graph_.tensor(input_node_) = in;
  graph_.forward(training);
}

double EnvNet::backward_cross_entropy(const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != last_batch_ || last_batch_ == 0)
    throw DataError("label count does not match the last forward pass");
  if (last_batch_ % 2 != 0)
    throw DataError("environment batches are cover/stego pairs");
  const double n_pairs = last_batch_ / 2.0;
  graph_.zero_grads();
  Tensor& sm = graph_.tensor(softmax_node_);
  double loss = 0.0;
  for (int s = 0; s < last_batch_; ++s) {
    const int y = labels[static_cast<size_t>(s)];
    if (y != 0 && y != 1) throw DataError("labels must be 0 (cover) or 1 (stego)");
    const double z = sm.v[static_cast<size_t>(s) * 2 + y];
    if (z <= 0.0) throw NumericError("softmax output collapsed to zero probability");
    loss -= std::log(z);
    sm.g[static_cast<size_t>(s) * 2 + y] = -1.0 / (z * n_pairs);
  }
  graph_.backward();
  return loss / n_pairs;
}

SoftmaxPair EnvNet::softmax(int sample) const {
  if (sample < 0 || sample >= last_batch_)
    throw DataError("sample index out of range");
  const Tensor& sm = graph_.tensor(softmax_node_);
  return {sm.v[static_cast<size_t>(sample) * 2],
          sm.v[static_cast<size_t>(sample) * 2 + 1]};
}

double EnvNet::accuracy(const std::vector<int>& labels) const {
  if (static_cast<int>(labels.size()) != last_batch_ || last_batch_ == 0)
    throw DataError("label count does not match the last forward pass");
  int hits = 0;
  const Tensor& sm = graph_.tensor(softmax_node_);
  for (int s = 0; s < last_batch_; ++s) {
    const int pred = sm.v[static_cast<size_t>(s) * 2 + 1] >
                             sm.v[static_cast<size_t>(s) * 2]
                         ? 1
                         : 0;
    hits += pred == labels[static_cast<size_t>(s)];
  }
  return static_cast<double>(hits) / last_batch_;
}

PixelPlane EnvNet::input_grad(int sample) const {
  if (sample < 0 || sample >= last_batch_)
    throw DataError("sample index out of range");
  const Tensor& in = graph_.tensor(input_node_);
  if (in.g.size() != in.v.size())
    throw DataError("no backward pass has run");
  PixelPlane g(last_h_, last_w_);
  const size_t base = static_cast<size_t>(sample) * last_h_ * last_w_;
  std::copy(in.g.begin() + static_cast<long>(base),
            in.g.begin() + static_cast<long>(base + g.size()), g.begin());
  return g;
}

GradientMap EnvNet::gradient_map(int sample, const QuantTable& table) const {
  PixelPlane pixel_grad = input_grad(sample);
  GradientMap g = blockwise_dct(pixel_grad);
  for (int i = 0; i < g.height(); ++i)
    for (int j = 0; j < g.width(); ++j)
      g.at(i, j) *= table.at(i % 8, j % 8);
  return g;
}

}  // namespace jecrl
