#pragma once

// Network = ordered layers ending in Softmax. Taps address post-layer outputs;
// the Jacobian of input -> tap output is exposed as a matrix-free LinearMap
// whose apply/apply_adjoint are the analytic JVP/VJP chains.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pqsv/layers.hpp"
#include "pqsv/linop.hpp"
#include "pqsv/tensor.hpp"

namespace pqsv {

class Network {
 public:
  Network(std::vector<std::size_t> input_shape, std::vector<LayerPtr> layers)
      : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("Network: no layers");
    shapes_.push_back(input_shape_);
    for (const auto& l : layers_) shapes_.push_back(l->output_shape(shapes_.back()));
    if (layers_.back()->kind() != LayerKind::Softmax)
      throw std::invalid_argument("Network: final layer must be Softmax");
    class_count_ = shape_size(shapes_.back());
  }

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  const std::vector<std::size_t>& input_shape() const { return input_shape_; }
  std::size_t class_count() const { return class_count_; }

  // shape of the output of layer i (shape_after(i) == shapes_[i+1])
  const std::vector<std::size_t>& shape_after(std::size_t i) const { return shapes_.at(i + 1); }

  std::vector<std::string> layer_names() const {
    std::vector<std::string> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l->name());
    return out;
  }

  int find_layer(const std::string& name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i]->name() == name) return static_cast<int>(i);
    return -1;
  }

  // Composition of layers 0..tap inclusive.
  Tensor forward_to(std::size_t tap, const Tensor& x) const {
    check_tap(tap);
    require_shape(x, input_shape_, "Network::forward_to");
    Tensor cur = x;
    for (std::size_t i = 0; i <= tap; ++i) cur = layers_[i]->forward(cur);
    return cur;
  }

  Tensor forward(const Tensor& x) const { return forward_to(layers_.size() - 1, x); }

  int predict(const Tensor& x) const {
    const Tensor p = forward(x);
    return argmax(p.values);
  }

  // Per-layer inputs for layers 0..tap; trace[k] is the input of layer k and
  // trace[tap+1] is the tap output.
  std::vector<Tensor> forward_trace(std::size_t tap, const Tensor& x) const {
    check_tap(tap);
    require_shape(x, input_shape_, "Network::forward_trace");
    std::vector<Tensor> trace;
    trace.reserve(tap + 2);
    trace.push_back(x);
    for (std::size_t i = 0; i <= tap; ++i) trace.push_back(layers_[i]->forward(trace.back()));
    return trace;
  }

  Tensor jvp(std::size_t tap, const Tensor& x, const Tensor& v) const {
    const std::vector<Tensor> trace = forward_trace(tap, x);
    return jvp_with_trace(tap, trace, v);
  }

  Tensor vjp(std::size_t tap, const Tensor& x, const Tensor& u) const {
    const std::vector<Tensor> trace = forward_trace(tap, x);
    return vjp_with_trace(tap, trace, u);
  }

  Tensor jvp_with_trace(std::size_t tap, std::span<const Tensor> trace, const Tensor& v) const {
    require_shape(v, input_shape_, "Network::jvp");
    Tensor cur = v;
    for (std::size_t i = 0; i <= tap; ++i) cur = layers_[i]->jvp(trace[i], cur);
    return cur;
  }

  Tensor vjp_with_trace(std::size_t tap, std::span<const Tensor> trace, const Tensor& u) const {
    require_shape(u, shapes_[tap + 1], "Network::vjp");
    Tensor cur = u;
    for (std::size_t i = tap + 1; i-- > 0;) cur = layers_[i]->vjp(trace[i], cur);
    return cur;
  }

  static int argmax(std::span<const double> v) {
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[best]) best = static_cast<int>(i);  // ties -> lowest index
    return best;
  }

 private:
  void check_tap(std::size_t tap) const {
    if (tap >= layers_.size()) throw std::invalid_argument("Network: tap index out of range");
  }

  std::vector<std::size_t> input_shape_;
  std::vector<LayerPtr> layers_;
  std::vector<std::vector<std::size_t>> shapes_;  // input shape + one per layer
  std::size_t class_count_ = 0;
};

struct LayerTap {
  const Network* network = nullptr;
  std::size_t index = 0;

  LayerTap(const Network& net, std::size_t i) : network(&net), index(i) {
    if (i >= net.layer_count()) throw std::invalid_argument("LayerTap: index out of range");
  }
  LayerTap(const Network& net, const std::string& name) : network(&net) {
    const int i = net.find_layer(name);
    if (i < 0) throw std::invalid_argument("LayerTap: no layer named '" + name + "'");
    index = static_cast<std::size_t>(i);
  }
  const std::string& name() const { return network->layer(index).name(); }
};

// J_i(x) as a LinearMap: apply = JVP, apply_adjoint = VJP. The forward trace
// is computed once at construction and shared by all products.
class JacobianOperator final : public LinearMap {
 public:
  JacobianOperator(const Network& net, const LayerTap& tap, Tensor x)
      : net_(&net), tap_(tap.index), trace_(net.forward_trace(tap.index, x)) {
    if (tap.network != &net) throw std::invalid_argument("JacobianOperator: tap belongs to another network");
    in_dim_ = shape_size(net.input_shape());
    out_dim_ = trace_.back().size();
  }

  std::size_t in_dim() const override { return in_dim_; }
  std::size_t out_dim() const override { return out_dim_; }

  void apply(std::span<const double> v, std::span<double> out) const override {
    check_in(v.size());
    check_out(out.size());
    Tensor vt(net_->input_shape(), std::vector<double>(v.begin(), v.end()));
    const Tensor r = net_->jvp_with_trace(tap_, trace_, vt);
    std::copy(r.values.begin(), r.values.end(), out.begin());
  }

  void apply_adjoint(std::span<const double> u, std::span<double> out) const override {
    check_out(u.size());
    check_in(out.size());
    Tensor ut(net_->shape_after(tap_), std::vector<double>(u.begin(), u.end()));
    const Tensor r = net_->vjp_with_trace(tap_, trace_, ut);
    std::copy(r.values.begin(), r.values.end(), out.begin());
  }

  const Tensor& tap_output() const { return trace_.back(); }

 private:
  const Network* net_;
  std::size_t tap_;
  std::vector<Tensor> trace_;
  std::size_t in_dim_, out_dim_;
};

inline std::shared_ptr<const LinearMap> jacobian_operator(const Network& net, const LayerTap& tap,
                                                          Tensor x) {
  return std::make_shared<JacobianOperator>(net, tap, std::move(x));
}

// Vertical stack of per-image Jacobians over a batch, in batch order.
inline StackedMap batch_jacobian_operator(const Network& net, const LayerTap& tap,
                                          std::span<const Tensor> batch, unsigned workers = 1) {
  if (batch.empty()) throw std::invalid_argument("batch_jacobian_operator: empty batch");
  for (const Tensor& x : batch) require_shape(x, net.input_shape(), "batch_jacobian_operator");
  std::vector<std::shared_ptr<const LinearMap>> blocks(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t j) {
    blocks[j] = std::make_shared<JacobianOperator>(net, tap, batch[j]);
  });
  return StackedMap(std::move(blocks), workers);
}

}  // namespace pqsv
