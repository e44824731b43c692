#pragma once

// Feed-forward layers. Every layer provides forward(x), jvp(x, v) (pushforward
// of a tangent) and vjp(x, u) (pullback of a cotangent) as analytic rules, so
// <jvp(x,v), u> == <v, vjp(x,u)> holds at every differentiability point.
// Nondifferentiable conventions: ReLU'(0) = 0; MaxPool ties break to the
// lowest flat index, and the selected index also routes the tangent.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqsv/rng.hpp"
#include "pqsv/tensor.hpp"

namespace pqsv {

enum class LayerKind : std::uint8_t {
  Dense = 0,
  Conv2D = 1,
  ReLU = 2,
  MaxPool2x2 = 3,
  Flatten = 4,
  Softmax = 5,
};

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense: return "Dense";
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::MaxPool2x2: return "MaxPool2x2";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Softmax: return "Softmax";
  }
  return "?";
}

// Shape + storage view of one parameter tensor (weights or bias).
struct ParamView {
  std::vector<std::size_t> shape;
  std::span<double> values;
};

class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  const std::string& name() const { return name_; }

  // Output shape for a given input shape; throws if the shapes do not compose.
  virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;

  virtual void forward(const Tensor& x, Tensor& y) const = 0;
  virtual void jvp(const Tensor& x, const Tensor& v, Tensor& out) const = 0;
  virtual void vjp(const Tensor& x, const Tensor& u, Tensor& out) const = 0;

  // Parameter tensors in serialization order (weights, then bias).
  virtual std::vector<ParamView> params() { return {}; }
  std::size_t param_size() {
    std::size_t n = 0;
    for (const auto& p : params()) n += p.values.size();
    return n;
  }

  // Accumulates d(loss)/d(params) into grad (layout: params concatenated in
  // order) given the layer input x and the output cotangent u.
  virtual void accumulate_param_grads(const Tensor& x, const Tensor& u,
                                      std::span<double> grad) const {
    (void)x;
    (void)u;
    (void)grad;
  }

  Tensor forward(const Tensor& x) const {
    Tensor y = Tensor::zeros(output_shape(x.shape));
    forward(x, y);
    return y;
  }
  Tensor jvp(const Tensor& x, const Tensor& v) const {
    Tensor out = Tensor::zeros(output_shape(x.shape));
    jvp(x, v, out);
    return out;
  }
  Tensor vjp(const Tensor& x, const Tensor& u) const {
    Tensor out = Tensor::zeros(x.shape);
    vjp(x, u, out);
    return out;
  }

 private:
  std::string name_;
};

using LayerPtr = std::unique_ptr<Layer>;

// ---------------------------------------------------------------------------

class DenseLayer final : public Layer {
 public:
  DenseLayer(std::string name, std::size_t out, std::size_t in,
             std::vector<double> weights, std::vector<double> bias)
      : Layer(std::move(name)), out_(out), in_(in), w_(std::move(weights)), b_(std::move(bias)) {
    if (w_.size() != out_ * in_ || b_.size() != out_)
      throw std::invalid_argument("DenseLayer: parameter sizes do not match dimensions");
  }

  // He-uniform init; init_scale rescales the limit (used to absorb the raw
  // [0,255] pixel range at the first layer).
  static LayerPtr make_random(std::string name, std::size_t out, std::size_t in, Rng& rng,
                              double init_scale = 1.0) {
    const double limit = init_scale * std::sqrt(6.0 / static_cast<double>(in));
    std::vector<double> w(out * in), b(out, 0.0);
    for (double& x : w) x = rng.uniform(-limit, limit);
    return std::make_unique<DenseLayer>(std::move(name), out, in, std::move(w), std::move(b));
  }

  LayerKind kind() const override { return LayerKind::Dense; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (shape_size(in) != in_)
      throw std::invalid_argument("DenseLayer " + name() + ": input size != " + std::to_string(in_));
    return {out_};
  }

  void forward(const Tensor& x, Tensor& y) const override {
    for (std::size_t i = 0; i < out_; ++i) {
      const double* row = w_.data() + i * in_;
      double s = b_[i];
      for (std::size_t j = 0; j < in_; ++j) s += row[j] * x.values[j];
      y.values[i] = s;
    }
  }

  void jvp(const Tensor& x, const Tensor& v, Tensor& out) const override {
    (void)x;
    for (std::size_t i = 0; i < out_; ++i) {
      const double* row = w_.data() + i * in_;
      double s = 0.0;
      for (std::size_t j = 0; j < in_; ++j) s += row[j] * v.values[j];
      out.values[i] = s;
    }
  }

  void vjp(const Tensor& x, const Tensor& u, Tensor& out) const override {
    (void)x;
    for (std::size_t j = 0; j < in_; ++j) out.values[j] = 0.0;
    for (std::size_t i = 0; i < out_; ++i) {
      const double* row = w_.data() + i * in_;
      const double ui = u.values[i];
      for (std::size_t j = 0; j < in_; ++j) out.values[j] += row[j] * ui;
    }
  }

  std::vector<ParamView> params() override {
    return {{{out_, in_}, w_}, {{out_}, b_}};
  }

  void accumulate_param_grads(const Tensor& x, const Tensor& u,
                              std::span<double> grad) const override {
    double* gw = grad.data();
    double* gb = grad.data() + out_ * in_;
    for (std::size_t i = 0; i < out_; ++i) {
      const double ui = u.values[i];
      double* gwr = gw + i * in_;
      for (std::size_t j = 0; j < in_; ++j) gwr[j] += ui * x.values[j];
      gb[i] += ui;
    }
  }

 private:
  std::size_t out_, in_;
  std::vector<double> w_;  // out x in, row-major
  std::vector<double> b_;
};

// Input/output layout [H, W, C]; kernels [kh, kw, c_in, c_out].
class Conv2DLayer final : public Layer {
 public:
  Conv2DLayer(std::string name, std::size_t kh, std::size_t kw, std::size_t cin,
              std::size_t cout, std::size_t stride, std::size_t pad,
              std::vector<double> kernels, std::vector<double> bias)
      : Layer(std::move(name)), kh_(kh), kw_(kw), cin_(cin), cout_(cout),
        stride_(stride), pad_(pad), k_(std::move(kernels)), b_(std::move(bias)) {
    if (stride_ == 0) throw std::invalid_argument("Conv2DLayer: stride must be positive");
    if (k_.size() != kh_ * kw_ * cin_ * cout_ || b_.size() != cout_)
      throw std::invalid_argument("Conv2DLayer: parameter sizes do not match dimensions");
  }

  static LayerPtr make_random(std::string name, std::size_t kh, std::size_t kw,
                              std::size_t cin, std::size_t cout, std::size_t stride,
                              std::size_t pad, Rng& rng, double init_scale = 1.0) {
    const double fan_in = static_cast<double>(kh * kw * cin);
    const double limit = init_scale * std::sqrt(6.0 / fan_in);
    std::vector<double> k(kh * kw * cin * cout), b(cout, 0.0);
    for (double& x : k) x = rng.uniform(-limit, limit);
    return std::make_unique<Conv2DLayer>(std::move(name), kh, kw, cin, cout, stride, pad,
                                         std::move(k), std::move(b));
  }

  LayerKind kind() const override { return LayerKind::Conv2D; }
  std::size_t stride() const { return stride_; }
  std::size_t pad() const { return pad_; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 3 || in[2] != cin_)
      throw std::invalid_argument("Conv2DLayer " + name() + ": expected input [H,W," +
                                  std::to_string(cin_) + "], got " + shape_string(in));
    const std::size_t H = in[0], W = in[1];
    if (H + 2 * pad_ < kh_ || W + 2 * pad_ < kw_)
      throw std::invalid_argument("Conv2DLayer " + name() + ": input smaller than kernel");
    return {(H + 2 * pad_ - kh_) / stride_ + 1, (W + 2 * pad_ - kw_) / stride_ + 1, cout_};
  }

  void forward(const Tensor& x, Tensor& y) const override { correlate(x, y, &b_); }

  // Convolution is linear in its input, so the pushforward is the same
  // correlation applied to the tangent, without the bias.
  void jvp(const Tensor& x, const Tensor& v, Tensor& out) const override {
    (void)x;
    correlate(v, out, nullptr);
  }

  void vjp(const Tensor& x, const Tensor& u, Tensor& out) const override {
    const std::size_t H = x.shape[0], W = x.shape[1];
    const std::size_t Ho = u.shape[0], Wo = u.shape[1];
    for (double& g : out.values) g = 0.0;
    for (std::size_t oh = 0; oh < Ho; ++oh) {
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        const double* up = u.values.data() + (oh * Wo + ow) * cout_;
        for (std::size_t kh = 0; kh < kh_; ++kh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride_ + kh) -
                                    static_cast<std::ptrdiff_t>(pad_);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kw = 0; kw < kw_; ++kw) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride_ + kw) -
                                      static_cast<std::ptrdiff_t>(pad_);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
            double* gx = out.values.data() + (static_cast<std::size_t>(ih) * W +
                                              static_cast<std::size_t>(iw)) * cin_;
            const double* kp = k_.data() + (kh * kw_ + kw) * cin_ * cout_;
            for (std::size_t ci = 0; ci < cin_; ++ci) {
              const double* kr = kp + ci * cout_;
              double s = 0.0;
              for (std::size_t co = 0; co < cout_; ++co) s += up[co] * kr[co];
              gx[ci] += s;
            }
          }
        }
      }
    }
  }

  std::vector<ParamView> params() override {
    return {{{kh_, kw_, cin_, cout_}, k_}, {{cout_}, b_}};
  }

  void accumulate_param_grads(const Tensor& x, const Tensor& u,
                              std::span<double> grad) const override {
    const std::size_t H = x.shape[0], W = x.shape[1];
    const std::size_t Ho = u.shape[0], Wo = u.shape[1];
    double* gk = grad.data();
    double* gb = grad.data() + k_.size();
    for (std::size_t oh = 0; oh < Ho; ++oh) {
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        const double* up = u.values.data() + (oh * Wo + ow) * cout_;
        for (std::size_t co = 0; co < cout_; ++co) gb[co] += up[co];
        for (std::size_t kh = 0; kh < kh_; ++kh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride_ + kh) -
                                    static_cast<std::ptrdiff_t>(pad_);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kw = 0; kw < kw_; ++kw) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride_ + kw) -
                                      static_cast<std::ptrdiff_t>(pad_);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
            const double* xp = x.values.data() + (static_cast<std::size_t>(ih) * W +
                                                  static_cast<std::size_t>(iw)) * cin_;
            double* gkp = gk + (kh * kw_ + kw) * cin_ * cout_;
            for (std::size_t ci = 0; ci < cin_; ++ci) {
              const double xv = xp[ci];
              double* gkr = gkp + ci * cout_;
              for (std::size_t co = 0; co < cout_; ++co) gkr[co] += xv * up[co];
            }
          }
        }
      }
    }
  }

 private:
  void correlate(const Tensor& x, Tensor& y, const std::vector<double>* bias) const {
    const std::size_t H = x.shape[0], W = x.shape[1];
    const std::size_t Ho = y.shape[0], Wo = y.shape[1];
    for (std::size_t oh = 0; oh < Ho; ++oh) {
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        double* out_px = y.values.data() + (oh * Wo + ow) * cout_;
        if (bias)
          for (std::size_t co = 0; co < cout_; ++co) out_px[co] = (*bias)[co];
        else
          for (std::size_t co = 0; co < cout_; ++co) out_px[co] = 0.0;
        for (std::size_t kh = 0; kh < kh_; ++kh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride_ + kh) -
                                    static_cast<std::ptrdiff_t>(pad_);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kw = 0; kw < kw_; ++kw) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * stride_ + kw) -
                                      static_cast<std::ptrdiff_t>(pad_);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
            const double* xp = x.values.data() + (static_cast<std::size_t>(ih) * W +
                                                  static_cast<std::size_t>(iw)) * cin_;
            const double* kp = k_.data() + (kh * kw_ + kw) * cin_ * cout_;
            for (std::size_t ci = 0; ci < cin_; ++ci) {
              const double xv = xp[ci];
              const double* kr = kp + ci * cout_;
              for (std::size_t co = 0; co < cout_; ++co) out_px[co] += xv * kr[co];
            }
          }
        }
      }
    }
  }

  std::size_t kh_, kw_, cin_, cout_, stride_, pad_;
  std::vector<double> k_;
  std::vector<double> b_;
};

class ReLULayer final : public Layer {
 public:
  explicit ReLULayer(std::string name) : Layer(std::move(name)) {}
  LayerKind kind() const override { return LayerKind::ReLU; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    return in;
  }
  void forward(const Tensor& x, Tensor& y) const override {
    for (std::size_t i = 0; i < x.size(); ++i) y.values[i] = x.values[i] > 0.0 ? x.values[i] : 0.0;
  }
  void jvp(const Tensor& x, const Tensor& v, Tensor& out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] > 0.0 ? v.values[i] : 0.0;
  }
  void vjp(const Tensor& x, const Tensor& u, Tensor& out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out.values[i] = x.values[i] > 0.0 ? u.values[i] : 0.0;
  }
};

class MaxPool2x2Layer final : public Layer {
 public:
  explicit MaxPool2x2Layer(std::string name) : Layer(std::move(name)) {}
  LayerKind kind() const override { return LayerKind::MaxPool2x2; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 3 || in[0] < 2 || in[1] < 2)
      throw std::invalid_argument("MaxPool2x2Layer " + name() + ": expected input [H>=2,W>=2,C], got " +
                                  shape_string(in));
    return {in[0] / 2, in[1] / 2, in[2]};
  }

  void forward(const Tensor& x, Tensor& y) const override {
    pool(x, [&](std::size_t out_idx, std::size_t in_idx) { y.values[out_idx] = x.values[in_idx]; });
  }
  void jvp(const Tensor& x, const Tensor& v, Tensor& out) const override {
    pool(x, [&](std::size_t out_idx, std::size_t in_idx) { out.values[out_idx] = v.values[in_idx]; });
  }
  void vjp(const Tensor& x, const Tensor& u, Tensor& out) const override {
    for (double& g : out.values) g = 0.0;
    pool(x, [&](std::size_t out_idx, std::size_t in_idx) { out.values[in_idx] += u.values[out_idx]; });
  }

 private:
  // Visits each 2x2 window's argmax (ties -> lowest flat index) as
  // (output index, selected input index).
  template <typename Visit>
  void pool(const Tensor& x, Visit&& visit) const {
    const std::size_t H = x.shape[0], W = x.shape[1], C = x.shape[2];
    const std::size_t Ho = H / 2, Wo = W / 2;
    for (std::size_t oh = 0; oh < Ho; ++oh) {
      for (std::size_t ow = 0; ow < Wo; ++ow) {
        for (std::size_t c = 0; c < C; ++c) {
          std::size_t best = (2 * oh * W + 2 * ow) * C + c;
          double bv = x.values[best];
          const std::size_t cand[3] = {(2 * oh * W + 2 * ow + 1) * C + c,
                                       ((2 * oh + 1) * W + 2 * ow) * C + c,
                                       ((2 * oh + 1) * W + 2 * ow + 1) * C + c};
          for (std::size_t idx : cand) {
            if (x.values[idx] > bv) {
              bv = x.values[idx];
              best = idx;
            }
          }
          visit((oh * Wo + ow) * C + c, best);
        }
      }
    }
  }
};

class FlattenLayer final : public Layer {
 public:
  explicit FlattenLayer(std::string name) : Layer(std::move(name)) {}
  LayerKind kind() const override { return LayerKind::Flatten; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    return {shape_size(in)};
  }
  void forward(const Tensor& x, Tensor& y) const override { y.values = x.values; }
  void jvp(const Tensor& x, const Tensor& v, Tensor& out) const override {
    (void)x;
    out.values = v.values;
  }
  void vjp(const Tensor& x, const Tensor& u, Tensor& out) const override {
    (void)x;
    out.values = u.values;
  }
};

class SoftmaxLayer final : public Layer {
 public:
  explicit SoftmaxLayer(std::string name) : Layer(std::move(name)) {}
  LayerKind kind() const override { return LayerKind::Softmax; }

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
    if (in.size() != 1)
      throw std::invalid_argument("SoftmaxLayer " + name() + ": expected rank-1 logits, got " +
                                  shape_string(in));
    return in;
  }

  void forward(const Tensor& x, Tensor& y) const override { softmax(x.values, y.values); }

  // Jacobian diag(y) - y y^T is symmetric, so jvp and vjp share one rule.
  void jvp(const Tensor& x, const Tensor& v, Tensor& out) const override {
    std::vector<double> y(x.size());
    softmax(x.values, y);
    double d = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) d += y[i] * v.values[i];
    for (std::size_t i = 0; i < y.size(); ++i) out.values[i] = y[i] * (v.values[i] - d);
  }
  void vjp(const Tensor& x, const Tensor& u, Tensor& out) const override { jvp(x, u, out); }

 private:
  static void softmax(const std::vector<double>& z, std::vector<double>& y) {
    double m = z[0];
    for (double v : z)
      if (v > m) m = v;
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      y[i] = std::exp(z[i] - m);
      sum += y[i];
    }
    for (double& v : y) v /= sum;
  }
};

}  // namespace pqsv
