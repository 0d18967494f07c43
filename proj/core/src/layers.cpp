#include "jecrl/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "jecrl/error.hpp"

namespace jecrl {
namespace {

using MatCM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using MapCM = Eigen::Map<MatCM>;
using ConstMapCM = Eigen::Map<const MatCM>;
using MapRM = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMapRM =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// "Same" output size and leading-edge padding (split floor/ceil).
int same_out(int n, int stride) { return (n + stride - 1) / stride; }
int same_pad(int n, int k, int stride) {
  const int out = same_out(n, stride);
  const int total = std::max((out - 1) * stride + k - n, 0);
  return total / 2;
}

void require(bool ok, const char* what) {
  if (!ok) throw DataError(what);
}

// Gather the receptive fields of one sample into a K×P column matrix
// (K = kh·kw·c, P = oh·ow, column-major so each output position is one
// contiguous column). Out-of-bounds taps are zero.
void im2col(const double* x, int h, int w, int c, int kh, int kw, int stride, int pt, int pl,
            int oh, int ow, double* col) {
  const int K = kh * kw * c;
  for (int oi = 0; oi < oh; ++oi) {
    for (int oj = 0; oj < ow; ++oj) {
      double* dst = col + (static_cast<size_t>(oi) * ow + oj) * K;
      for (int di = 0; di < kh; ++di) {
        const int ii = oi * stride - pt + di;
        for (int dj = 0; dj < kw; ++dj) {
          const int jj = oj * stride - pl + dj;
          if (ii < 0 || ii >= h || jj < 0 || jj >= w) {
            std::memset(dst, 0, sizeof(double) * c);
          } else {
            std::memcpy(dst, x + (static_cast<size_t>(ii) * w + jj) * c, sizeof(double) * c);
          }
          dst += c;
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add the column matrix back onto the plane.
void col2im_add(const double* col, int h, int w, int c, int kh, int kw, int stride, int pt,
                int pl, int oh, int ow, double* x) {
  const int K = kh * kw * c;
  for (int oi = 0; oi < oh; ++oi) {
    for (int oj = 0; oj < ow; ++oj) {
      const double* src = col + (static_cast<size_t>(oi) * ow + oj) * K;
      for (int di = 0; di < kh; ++di) {
        const int ii = oi * stride - pt + di;
        for (int dj = 0; dj < kw; ++dj) {
          const int jj = oj * stride - pl + dj;
          if (ii >= 0 && ii < h && jj >= 0 && jj < w) {
            double* dst = x + (static_cast<size_t>(ii) * w + jj) * c;
            for (int cc = 0; cc < c; ++cc) dst[cc] += src[cc];
          }
          src += c;
        }
      }
    }
  }
}

void init_normal(Tensor& t, double stddev, Rng& rng) {
  for (auto& x : t.v) x = stddev * rng.normal();
}

}  // namespace

// ---------------- Conv2d ----------------

Conv2d::Conv2d(const std::string& name, int kh, int kw, int cin, int cout, int stride,
               bool learnable)
    : kh_(kh), kw_(kw), cin_(cin), cout_(cout), stride_(stride) {
  require(kh > 0 && kw > 0 && cin > 0 && cout > 0 && stride > 0, "Conv2d: bad geometry");
  w_ = Param{name + ".w", Tensor({cout, kh, kw, cin}), learnable};
  b_ = Param{name + ".b", Tensor({cout}), learnable};
}

void Conv2d::init_params(Rng& rng) {
  if (!w_.learnable) return;  // frozen banks keep their assigned weights
  init_normal(w_.t, std::sqrt(2.0 / (kh_ * kw_ * cin_)), rng);
  b_.t.fill(0.0);
}

void Conv2d::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1 && in[0]->rank() == 4, "conv: want one NHWC input");
  const Tensor& x = *in[0];
  require(x.dim(3) == cin_, "conv: channel mismatch");
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = same_out(h, stride_), ow = same_out(w, stride_);
  const int pt = same_pad(h, kh_, stride_), pl = same_pad(w, kw_, stride_);
  const int K = kh_ * kw_ * cin_, P = oh * ow;
  if (out.shape != std::vector<int>{n, oh, ow, cout_}) out.reshape({n, oh, ow, cout_});
  col_.resize(static_cast<size_t>(K) * P);

  ConstMapRM W(w_.t.v.data(), cout_, K);
  Eigen::Map<const Eigen::VectorXd> bias(b_.t.v.data(), cout_);
  for (int s = 0; s < n; ++s) {
    im2col(x.v.data() + x.idx4(s, 0, 0, 0), h, w, cin_, kh_, kw_, stride_, pt, pl, oh, ow,
           col_.data());
    MapCM colM(col_.data(), K, P);
    MapCM outM(out.v.data() + out.idx4(s, 0, 0, 0), cout_, P);
    outM.noalias() = W * colM;
    outM.colwise() += bias;
  }
}

void Conv2d::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  Tensor& x = *in[0];
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = out.dim(1), ow = out.dim(2);
  const int pt = same_pad(h, kh_, stride_), pl = same_pad(w, kw_, stride_);
  const int K = kh_ * kw_ * cin_, P = oh * ow;
  col_.resize(static_cast<size_t>(K) * P);

  ConstMapRM W(w_.t.v.data(), cout_, K);
  MapRM dW(w_.t.g.data(), cout_, K);
  for (int s = 0; s < n; ++s) {
    ConstMapCM dOut(out.g.data() + out.idx4(s, 0, 0, 0), cout_, P);
    if (w_.learnable) {
      im2col(x.v.data() + x.idx4(s, 0, 0, 0), h, w, cin_, kh_, kw_, stride_, pt, pl, oh, ow,
             col_.data());
      MapCM colM(col_.data(), K, P);
      dW.noalias() += dOut * colM.transpose();
      // Accumulate by hand: Eigen's partial redux into an arbitrary-alignment
      // map reorders the sum with the destination address, which breaks
      // bit-reproducibility across process runs.
      const double* og = out.g.data() + out.idx4(s, 0, 0, 0);
      for (int p = 0; p < P; ++p)
        for (int c = 0; c < cout_; ++c) b_.t.g[c] += og[static_cast<size_t>(p) * cout_ + c];
    }
    // input gradient: scatter Wᵀ·dOut back through the receptive fields
    MapCM dcol(col_.data(), K, P);
    dcol.noalias() = W.transpose() * dOut;
    col2im_add(col_.data(), h, w, cin_, kh_, kw_, stride_, pt, pl, oh, ow,
               x.g.data() + x.idx4(s, 0, 0, 0));
  }
}

// ---------------- Deconv2d ----------------

Deconv2d::Deconv2d(const std::string& name, int kh, int kw, int cin, int cout, int stride)
    : kh_(kh), kw_(kw), cin_(cin), cout_(cout), stride_(stride) {
  require(kh > 0 && kw > 0 && cin > 0 && cout > 0 && stride > 0, "Deconv2d: bad geometry");
  // Kernel of the conv (big plane, cout channels) -> (small plane, cin).
  w_ = Param{name + ".w", Tensor({cin, kh, kw, cout}), true};
  b_ = Param{name + ".b", Tensor({cout}), true};
}

void Deconv2d::init_params(Rng& rng) {
  init_normal(w_.t, std::sqrt(2.0 / (kh_ * kw_ * cin_)), rng);
  b_.t.fill(0.0);
}

void Deconv2d::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1 && in[0]->rank() == 4, "deconv: want one NHWC input");
  const Tensor& x = *in[0];
  require(x.dim(3) == cin_, "deconv: channel mismatch");
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int H = h * stride_, W_ = w * stride_;
  const int pt = same_pad(H, kh_, stride_), pl = same_pad(W_, kw_, stride_);
  const int K = kh_ * kw_ * cout_, P = h * w;
  if (out.shape != std::vector<int>{n, H, W_, cout_}) out.reshape({n, H, W_, cout_});
  out.fill(0.0);
  col_.resize(static_cast<size_t>(K) * P);

  ConstMapRM Wm(w_.t.v.data(), cin_, K);
  for (int s = 0; s < n; ++s) {
    ConstMapCM xM(x.v.data() + x.idx4(s, 0, 0, 0), cin_, P);
    MapCM colM(col_.data(), K, P);
    colM.noalias() = Wm.transpose() * xM;
    col2im_add(col_.data(), H, W_, cout_, kh_, kw_, stride_, pt, pl, h, w,
               out.v.data() + out.idx4(s, 0, 0, 0));
    double* o = out.v.data() + out.idx4(s, 0, 0, 0);
    for (int p = 0; p < H * W_; ++p)
      for (int c = 0; c < cout_; ++c) o[static_cast<size_t>(p) * cout_ + c] += b_.t.v[c];
  }
}

void Deconv2d::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  Tensor& x = *in[0];
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int H = out.dim(1), W_ = out.dim(2);
  const int pt = same_pad(H, kh_, stride_), pl = same_pad(W_, kw_, stride_);
  const int K = kh_ * kw_ * cout_, P = h * w;
  col_.resize(static_cast<size_t>(K) * P);

  ConstMapRM Wm(w_.t.v.data(), cin_, K);
  MapRM dW(w_.t.g.data(), cin_, K);
  for (int s = 0; s < n; ++s) {
    // col of the upstream gradient over the big plane
    im2col(out.g.data() + out.idx4(s, 0, 0, 0), H, W_, cout_, kh_, kw_, stride_, pt, pl, h, w,
           col_.data());
    MapCM dcol(col_.data(), K, P);
    ConstMapCM xM(x.v.data() + x.idx4(s, 0, 0, 0), cin_, P);
    MapCM dxM(x.g.data() + x.idx4(s, 0, 0, 0), cin_, P);
    dxM.noalias() += Wm * dcol;
    dW.noalias() += xM * dcol.transpose();
    const double* og = out.g.data() + out.idx4(s, 0, 0, 0);
    for (int p = 0; p < H * W_; ++p)
      for (int c = 0; c < cout_; ++c) b_.t.g[c] += og[static_cast<size_t>(p) * cout_ + c];
  }
}

// ---------------- BatchNorm ----------------

BatchNorm::BatchNorm(const std::string& name, int channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = Param{name + ".gamma", Tensor({channels}), true};
  beta_ = Param{name + ".beta", Tensor({channels}), true};
  running_mean_ = Param{name + ".running_mean", Tensor({channels}), false};
  running_var_ = Param{name + ".running_var", Tensor({channels}), false};
  gamma_.t.fill(1.0);
  running_var_.t.fill(1.0);
}

void BatchNorm::init_params(Rng&) {
  gamma_.t.fill(1.0);
  beta_.t.fill(0.0);
  running_mean_.t.fill(0.0);
  running_var_.t.fill(1.0);
}

void BatchNorm::forward(const std::vector<Tensor*>& in, Tensor& out, bool training) {
  require(in.size() == 1 && in[0]->rank() == 4, "batchnorm: want one NHWC input");
  const Tensor& x = *in[0];
  require(x.dim(3) == channels_, "batchnorm: channel mismatch");
  if (out.shape != x.shape) out.reshape(x.shape);
  const size_t total = x.size();
  const size_t rows = total / channels_;
  mu_.assign(channels_, 0.0);
  invstd_.assign(channels_, 0.0);
  last_training_ = training;

  if (training) {
    std::vector<double> var(channels_, 0.0);
    for (size_t r = 0; r < rows; ++r) {
      const double* p = x.v.data() + r * channels_;
      for (int c = 0; c < channels_; ++c) mu_[c] += p[c];
    }
    for (int c = 0; c < channels_; ++c) mu_[c] /= static_cast<double>(rows);
    for (size_t r = 0; r < rows; ++r) {
      const double* p = x.v.data() + r * channels_;
      for (int c = 0; c < channels_; ++c) {
        const double d = p[c] - mu_[c];
        var[c] += d * d;
      }
    }
    for (int c = 0; c < channels_; ++c) {
      var[c] /= static_cast<double>(rows);
      invstd_[c] = 1.0 / std::sqrt(var[c] + eps_);
      running_mean_.t.v[c] = momentum_ * running_mean_.t.v[c] + (1.0 - momentum_) * mu_[c];
      running_var_.t.v[c] = momentum_ * running_var_.t.v[c] + (1.0 - momentum_) * var[c];
    }
  } else {
    for (int c = 0; c < channels_; ++c) {
      mu_[c] = running_mean_.t.v[c];
      invstd_[c] = 1.0 / std::sqrt(running_var_.t.v[c] + eps_);
    }
  }

  for (size_t r = 0; r < rows; ++r) {
    const double* p = x.v.data() + r * channels_;
    double* o = out.v.data() + r * channels_;
    for (int c = 0; c < channels_; ++c)
      o[c] = gamma_.t.v[c] * (p[c] - mu_[c]) * invstd_[c] + beta_.t.v[c];
  }
}

void BatchNorm::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  Tensor& x = *in[0];
  const size_t rows = x.size() / channels_;
  std::vector<double> s1(channels_, 0.0), s2(channels_, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    const double* dy = out.g.data() + r * channels_;
    const double* p = x.v.data() + r * channels_;
    for (int c = 0; c < channels_; ++c) {
      const double xhat = (p[c] - mu_[c]) * invstd_[c];
      s1[c] += dy[c];
      s2[c] += dy[c] * xhat;
    }
  }
  for (int c = 0; c < channels_; ++c) {
    beta_.t.g[c] += s1[c];
    gamma_.t.g[c] += s2[c];
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (size_t r = 0; r < rows; ++r) {
    const double* dy = out.g.data() + r * channels_;
    const double* p = x.v.data() + r * channels_;
    double* dx = x.g.data() + r * channels_;
    for (int c = 0; c < channels_; ++c) {
      if (last_training_) {
        const double xhat = (p[c] - mu_[c]) * invstd_[c];
        dx[c] += gamma_.t.v[c] * invstd_[c] *
                 (dy[c] - s1[c] * inv_rows - xhat * s2[c] * inv_rows);
      } else {
        // Inference statistics are constants: plain affine chain rule.
        dx[c] += gamma_.t.v[c] * invstd_[c] * dy[c];
      }
    }
  }
}

// ---------------- activations ----------------

void ReLU::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1, "relu: want one input");
  if (out.shape != in[0]->shape) out.reshape(in[0]->shape);
  for (size_t i = 0; i < out.size(); ++i) out.v[i] = in[0]->v[i] > 0.0 ? in[0]->v[i] : 0.0;
}

void ReLU::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  for (size_t i = 0; i < out.size(); ++i)
    if (in[0]->v[i] > 0.0) in[0]->g[i] += out.g[i];
}

void LeakyReLU::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1, "leaky_relu: want one input");
  if (out.shape != in[0]->shape) out.reshape(in[0]->shape);
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = in[0]->v[i];
    out.v[i] = x > 0.0 ? x : slope_ * x;
  }
}

void LeakyReLU::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  for (size_t i = 0; i < out.size(); ++i)
    in[0]->g[i] += (in[0]->v[i] > 0.0 ? 1.0 : slope_) * out.g[i];
}

void Sigmoid::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1, "sigmoid: want one input");
  if (out.shape != in[0]->shape) out.reshape(in[0]->shape);
  for (size_t i = 0; i < out.size(); ++i) out.v[i] = 1.0 / (1.0 + std::exp(-in[0]->v[i]));
}

void Sigmoid::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  for (size_t i = 0; i < out.size(); ++i)
    in[0]->g[i] += out.v[i] * (1.0 - out.v[i]) * out.g[i];
}

void Tlu::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1, "tlu: want one input");
  if (out.shape != in[0]->shape) out.reshape(in[0]->shape);
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = in[0]->v[i];
    out.v[i] = x > t_ ? t_ : (x < -t_ ? -t_ : x);
  }
}

void Tlu::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = in[0]->v[i];
    if (x > -t_ && x < t_) in[0]->g[i] += out.g[i];
  }
}

// ---------------- FullyConnected ----------------

FullyConnected::FullyConnected(const std::string& name, int in_features, int out_features)
    : in_(in_features), out_features_(out_features) {
  require(in_features > 0 && out_features > 0, "fully_connected: bad geometry");
  w_ = Param{name + ".w", Tensor({out_features, in_features}), true};
  b_ = Param{name + ".b", Tensor({out_features}), true};
}

void FullyConnected::init_params(Rng& rng) {
  init_normal(w_.t, std::sqrt(2.0 / in_), rng);
  b_.t.fill(0.0);
}

void FullyConnected::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1, "fully_connected: want one input");
  const Tensor& x = *in[0];
  const int n = x.dim(0);
  require(static_cast<int>(x.size()) == n * in_, "fully_connected: feature count mismatch");
  if (out.shape != std::vector<int>{n, out_features_}) out.reshape({n, out_features_});
  ConstMapRM xM(x.v.data(), n, in_);
  ConstMapRM W(w_.t.v.data(), out_features_, in_);
  MapRM outM(out.v.data(), n, out_features_);
  outM.noalias() = xM * W.transpose();
  for (int s = 0; s < n; ++s)
    for (int c = 0; c < out_features_; ++c) out.v[static_cast<size_t>(s) * out_features_ + c] +=
        b_.t.v[c];
}

void FullyConnected::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  Tensor& x = *in[0];
  const int n = x.dim(0);
  ConstMapRM xM(x.v.data(), n, in_);
  ConstMapRM dOut(out.g.data(), n, out_features_);
  ConstMapRM W(w_.t.v.data(), out_features_, in_);
  MapRM dW(w_.t.g.data(), out_features_, in_);
  MapRM dX(x.g.data(), n, in_);
  dW.noalias() += dOut.transpose() * xM;
  dX.noalias() += dOut * W;
  for (int s = 0; s < n; ++s)
    for (int c = 0; c < out_features_; ++c)
      b_.t.g[c] += out.g[static_cast<size_t>(s) * out_features_ + c];
}

// ---------------- Softmax ----------------

void Softmax::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1 && in[0]->rank() == 2, "softmax: want one rank-2 input");
  const Tensor& x = *in[0];
  if (out.shape != x.shape) out.reshape(x.shape);
  const int n = x.dim(0), c = x.dim(1);
  for (int s = 0; s < n; ++s) {
    const double* row = x.v.data() + static_cast<size_t>(s) * c;
    double* o = out.v.data() + static_cast<size_t>(s) * c;
    double mx = row[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, row[i]);
    double z = 0.0;
    for (int i = 0; i < c; ++i) z += (o[i] = std::exp(row[i] - mx));
    for (int i = 0; i < c; ++i) o[i] /= z;
  }
}

void Softmax::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  const int n = out.dim(0), c = out.dim(1);
  for (int s = 0; s < n; ++s) {
    const double* y = out.v.data() + static_cast<size_t>(s) * c;
    const double* dy = out.g.data() + static_cast<size_t>(s) * c;
    double* dx = in[0]->g.data() + static_cast<size_t>(s) * c;
    double dot = 0.0;
    for (int i = 0; i < c; ++i) dot += dy[i] * y[i];
    for (int i = 0; i < c; ++i) dx[i] += y[i] * (dy[i] - dot);
  }
}

// ---------------- Concat ----------------

void Concat::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() >= 2, "concat: want at least two inputs");
  int channels = 0;
  for (const Tensor* t : in) {
    require(t->rank() == 4, "concat: want NHWC inputs");
    require(t->dim(0) == in[0]->dim(0) && t->dim(1) == in[0]->dim(1) &&
                t->dim(2) == in[0]->dim(2),
            "concat: spatial shape mismatch");
    channels += t->dim(3);
  }
  const int n = in[0]->dim(0), h = in[0]->dim(1), w = in[0]->dim(2);
  if (out.shape != std::vector<int>{n, h, w, channels}) out.reshape({n, h, w, channels});
  const size_t positions = static_cast<size_t>(n) * h * w;
  for (size_t p = 0; p < positions; ++p) {
    double* dst = out.v.data() + p * channels;
    for (const Tensor* t : in) {
      const int c = t->dim(3);
      std::memcpy(dst, t->v.data() + p * c, sizeof(double) * c);
      dst += c;
    }
  }
}

void Concat::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  const int channels = out.dim(3);
  const size_t positions = out.size() / channels;
  for (size_t p = 0; p < positions; ++p) {
    const double* src = out.g.data() + p * channels;
    for (Tensor* t : in) {
      const int c = t->dim(3);
      double* dst = t->g.data() + p * c;
      for (int i = 0; i < c; ++i) dst[i] += src[i];
      src += c;
    }
  }
}

// ---------------- pooling ----------------

void AvgPool::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1 && in[0]->rank() == 4, "avgpool: want one NHWC input");
  const Tensor& x = *in[0];
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int oh = same_out(h, stride_), ow = same_out(w, stride_);
  const int pt = same_pad(h, k_, stride_), pl = same_pad(w, k_, stride_);
  if (out.shape != std::vector<int>{n, oh, ow, c}) out.reshape({n, oh, ow, c});
  for (int s = 0; s < n; ++s) {
    for (int oi = 0; oi < oh; ++oi) {
      for (int oj = 0; oj < ow; ++oj) {
        double* o = out.v.data() + out.idx4(s, oi, oj, 0);
        std::memset(o, 0, sizeof(double) * c);
        int count = 0;
        for (int di = 0; di < k_; ++di) {
          const int ii = oi * stride_ - pt + di;
          if (ii < 0 || ii >= h) continue;
          for (int dj = 0; dj < k_; ++dj) {
            const int jj = oj * stride_ - pl + dj;
            if (jj < 0 || jj >= w) continue;
            const double* p = x.v.data() + x.idx4(s, ii, jj, 0);
            for (int cc = 0; cc < c; ++cc) o[cc] += p[cc];
            ++count;
          }
        }
        for (int cc = 0; cc < c; ++cc) o[cc] /= count;
      }
    }
  }
}

void AvgPool::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  Tensor& x = *in[0];
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const int oh = out.dim(1), ow = out.dim(2);
  const int pt = same_pad(h, k_, stride_), pl = same_pad(w, k_, stride_);
  for (int s = 0; s < n; ++s) {
    for (int oi = 0; oi < oh; ++oi) {
      for (int oj = 0; oj < ow; ++oj) {
        const double* dy = out.g.data() + out.idx4(s, oi, oj, 0);
        int count = 0;
        for (int di = 0; di < k_; ++di) {
          const int ii = oi * stride_ - pt + di;
          if (ii < 0 || ii >= h) continue;
          for (int dj = 0; dj < k_; ++dj) {
            const int jj = oj * stride_ - pl + dj;
            if (jj >= 0 && jj < w) ++count;
          }
        }
        for (int di = 0; di < k_; ++di) {
          const int ii = oi * stride_ - pt + di;
          if (ii < 0 || ii >= h) continue;
          for (int dj = 0; dj < k_; ++dj) {
            const int jj = oj * stride_ - pl + dj;
            if (jj < 0 || jj >= w) continue;
            double* dx = x.g.data() + x.idx4(s, ii, jj, 0);
            for (int cc = 0; cc < c; ++cc) dx[cc] += dy[cc] / count;
          }
        }
      }
    }
  }
}

void GlobalAvgPool::forward(const std::vector<Tensor*>& in, Tensor& out, bool) {
  require(in.size() == 1 && in[0]->rank() == 4, "global_avgpool: want one NHWC input");
  const Tensor& x = *in[0];
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (out.shape != std::vector<int>{n, c}) out.reshape({n, c});
  out.fill(0.0);
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double* p = x.v.data() + x.idx4(s, i, j, 0);
        for (int cc = 0; cc < c; ++cc) out.v[static_cast<size_t>(s) * c + cc] += p[cc];
      }
    for (int cc = 0; cc < c; ++cc) out.v[static_cast<size_t>(s) * c + cc] /= h * w;
  }
}

void GlobalAvgPool::backward(const std::vector<Tensor*>& in, const Tensor& out) {
  Tensor& x = *in[0];
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double* dx = x.g.data() + x.idx4(s, i, j, 0);
        for (int cc = 0; cc < c; ++cc)
          dx[cc] += out.g[static_cast<size_t>(s) * c + cc] / (h * w);
      }
}

}  // namespace jecrl
