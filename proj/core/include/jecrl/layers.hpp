#pragma once
#include <memory>
#include <string>
#include <vector>

#include "jecrl/rng.hpp"
#include "jecrl/tensor.hpp"

namespace jecrl {

// A named parameter (or non-learnable state buffer, e.g. batch-norm running
// statistics). Gradients accumulate into t.g for learnable parameters.
struct Param {
  std::string name;
  Tensor t;
  bool learnable = true;
};

// Layer interface. forward infers the output shape; backward accumulates
// (+=) into the inputs' grad buffers and into parameter grads, reading the
// upstream gradient from out.g. Layers may cache forward intermediates, so a
// graph instance is single-writer.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual const char* kind() const = 0;
  virtual void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) = 0;
  virtual void backward(const std::vector<Tensor*>& in, const Tensor& out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual void init_params(Rng&) {}
};

// Strided 2D convolution, NHWC, "same" padding: stride 1 preserves the
// spatial size, stride s yields ceil(n/s) (padding split floor/ceil between
// the leading and trailing edge). Weight shape {cout, kh, kw, cin}.
class Conv2d : public Layer {
 public:
  Conv2d(const std::string& name, int kh, int kw, int cin, int cout, int stride,
         bool learnable = true);
  const char* kind() const override { return "conv"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  void init_params(Rng& rng) override;
  Param& weight() { return w_; }
  Param& bias() { return b_; }

 private:
  int kh_, kw_, cin_, cout_, stride_;
  Param w_, b_;
  std::vector<double> col_;  // im2col scratch, reused across calls
};

// Transposed convolution ("deconv"), stride s upsamples by exactly s.
// Weight shape {cin, kh, kw, cout}: the kernel of the downsampling conv this
// layer is the adjoint of.
class Deconv2d : public Layer {
 public:
  Deconv2d(const std::string& name, int kh, int kw, int cin, int cout, int stride);
  const char* kind() const override { return "deconv"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  void init_params(Rng& rng) override;

 private:
  int kh_, kw_, cin_, cout_, stride_;
  Param w_, b_;
  std::vector<double> col_;
};

// Per-channel batch normalization over N×H×W. Training mode normalizes by
// batch statistics and updates running averages (running = momentum·running
// + (1−momentum)·batch); inference mode uses the running averages.
class BatchNorm : public Layer {
 public:
  BatchNorm(const std::string& name, int channels, double momentum, double eps);
  const char* kind() const override { return "batchnorm"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
  std::vector<Param*> params() override {
    return {&gamma_, &beta_, &running_mean_, &running_var_};
  }
  void init_params(Rng&) override;

 private:
  int channels_;
  double momentum_, eps_;
  Param gamma_, beta_;
  Param running_mean_, running_var_;  // learnable=false state buffers
  std::vector<double> mu_, invstd_;   // cached batch stats for backward
  bool last_training_ = false;
};

class ReLU : public Layer {
 public:
  const char* kind() const override { return "relu"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(double slope) : slope_(slope) {}
  const char* kind() const override { return "leaky_relu"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;

 private:
  double slope_;
};

class Sigmoid : public Layer {
 public:
  const char* kind() const override { return "sigmoid"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
};

// clamp(x, −T, T) with pass-through gradient strictly inside the interval.
class Tlu : public Layer {
 public:
  explicit Tlu(double threshold) : t_(threshold) {}
  const char* kind() const override { return "tlu"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;

 private:
  double t_;
};

// Dense layer on flattened per-sample features; output rank 2 [N, out].
class FullyConnected : public Layer {
 public:
  FullyConnected(const std::string& name, int in_features, int out_features);
  const char* kind() const override { return "fully_connected"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  void init_params(Rng& rng) override;

 private:
  int in_, out_features_;
  Param w_, b_;
};

// Row-wise softmax on rank-2 input.
class Softmax : public Layer {
 public:
  const char* kind() const override { return "softmax"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
};

// Channel-axis concatenation of two or more NHWC tensors.
class Concat : public Layer {
 public:
  const char* kind() const override { return "concat"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
};

// Average pooling, "same" geometry (out = ceil(in/stride)); averages count
// only in-bounds cells, so borders are unbiased.
class AvgPool : public Layer {
 public:
  AvgPool(int k, int stride) : k_(k), stride_(stride) {}
  const char* kind() const override { return "avgpool"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;

 private:
  int k_, stride_;
};

// Spatial mean per channel: [N,H,W,C] → [N,C].
class GlobalAvgPool : public Layer {
 public:
  const char* kind() const override { return "global_avgpool"; }
  void forward(const std::vector<Tensor*>& in, Tensor& out, bool training) override;
  void backward(const std::vector<Tensor*>& in, const Tensor& out) override;
};

}  // namespace jecrl
