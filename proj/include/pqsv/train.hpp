#pragma once

// Toy-scale training: minibatch SGD with momentum on softmax cross-entropy.
// Deterministic given the seed; per-item gradients are reduced in batch order
// so results do not depend on the worker count.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "pqsv/dataset.hpp"
#include "pqsv/network.hpp"
#include "pqsv/parallel.hpp"
#include "pqsv/rng.hpp"

namespace pqsv {

// 28x28x1 -> Conv3x3x8 (stride 1, pad 1) -> ReLU -> MaxPool2x2
//         -> Conv3x3x16 -> ReLU -> MaxPool2x2 -> Flatten -> Dense(10) -> Softmax
// The first conv's init is shrunk by the raw pixel range so early activations
// start O(1).
inline Network make_reference_net(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LayerPtr> layers;
  layers.push_back(Conv2DLayer::make_random("conv1", 3, 3, 1, 8, 1, 1, rng, 1.0 / 255.0));
  layers.push_back(std::make_unique<ReLULayer>("relu1"));
  layers.push_back(std::make_unique<MaxPool2x2Layer>("pool1"));
  layers.push_back(Conv2DLayer::make_random("conv2", 3, 3, 8, 16, 1, 1, rng));
  layers.push_back(std::make_unique<ReLULayer>("relu2"));
  layers.push_back(std::make_unique<MaxPool2x2Layer>("pool2"));
  layers.push_back(std::make_unique<FlattenLayer>("flatten"));
  layers.push_back(DenseLayer::make_random("dense", 10, 7 * 7 * 16, rng));
  layers.push_back(std::make_unique<SoftmaxLayer>("softmax"));
  return Network({28, 28, 1}, std::move(layers));
}

struct TrainSettings {
  std::size_t epochs = 2;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t seed = 7;
  unsigned workers = 1;
};

struct TrainReport {
  bool ok = false;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
  std::size_t steps = 0;
};

namespace detail {

// cross-entropy from logits (log-sum-exp form) and its logit gradient
inline double cross_entropy_from_logits(std::span<const double> z, int label,
                                        std::span<double> grad) {
  double m = z[0];
  for (double v : z)
    if (v > m) m = v;
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += std::exp(z[i] - m);
  const double lse = m + std::log(sum);
  for (std::size_t i = 0; i < z.size(); ++i) grad[i] = std::exp(z[i] - lse);
  grad[static_cast<std::size_t>(label)] -= 1.0;
  return lse - z[static_cast<std::size_t>(label)];
}

}  // namespace detail

// One forward/backward pass for a single example; accumulates parameter
// gradients (layout: per-layer grads concatenated in layer order) and returns
// the loss. The backward path stops before the final Softmax: the logit
// gradient of the cross-entropy absorbs it in closed form.
inline double grad_one_example(const Network& net, const Tensor& x, int label,
                               std::span<double> grad,
                               std::span<const std::size_t> grad_offsets) {
  const std::size_t logits_layer = net.layer_count() - 2;
  const std::vector<Tensor> trace = net.forward_trace(logits_layer, x);
  const Tensor& logits = trace.back();
  Tensor cot = Tensor::zeros(logits.shape);
  const double loss = detail::cross_entropy_from_logits(logits.values, label, cot.values);
  for (std::size_t i = logits_layer + 1; i-- > 0;) {
    const Layer& l = net.layer(i);
    const_cast<Layer&>(l);  // params() is non-const; grads only read the layer
    const std::size_t psize = grad_offsets[i + 1] - grad_offsets[i];
    if (psize > 0)
      l.accumulate_param_grads(trace[i], cot, grad.subspan(grad_offsets[i], psize));
    if (i > 0) cot = l.vjp(trace[i], cot);
  }
  return loss;
}

inline TrainReport train_toy(Network& net, const Dataset& train_set, const TrainSettings& hp) {
  if (train_set.size() == 0) throw std::invalid_argument("train_toy: empty dataset");
  if (hp.batch_size == 0) throw std::invalid_argument("train_toy: batch_size must be positive");

  std::vector<std::size_t> offsets{0};
  for (std::size_t i = 0; i < net.layer_count(); ++i)
    offsets.push_back(offsets.back() + net.layer(i).param_size());
  const std::size_t n_params = offsets.back();

  std::vector<double> velocity(n_params, 0.0);
  std::vector<double> grad_sum(n_params);
  Rng rng(hp.seed);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    // seeded Fisher-Yates shuffle
    for (std::size_t i = order.size(); i-- > 1;)
      std::swap(order[i], order[rng.below(i + 1)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t b = std::min(hp.batch_size, order.size() - start);
      std::vector<std::vector<double>> item_grad(b);
      std::vector<double> item_loss(b);
      parallel_for(b, hp.workers, [&](std::size_t k) {
        item_grad[k].assign(n_params, 0.0);
        const std::size_t idx = order[start + k];
        item_loss[k] = grad_one_example(net, train_set.images[idx], train_set.labels[idx],
                                        item_grad[k], offsets);
      });
      grad_sum.assign(n_params, 0.0);
      for (std::size_t k = 0; k < b; ++k)  // fixed reduction order
        for (std::size_t j = 0; j < n_params; ++j) grad_sum[j] += item_grad[k][j];
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < b; ++k) batch_loss += item_loss[k];
      epoch_loss += batch_loss;
      if (!std::isfinite(batch_loss)) {
        report.ok = false;
        report.final_loss = batch_loss;
        return report;  // diverged
      }
      const double inv_b = 1.0 / static_cast<double>(b);
      std::size_t cursor = 0;
      for (std::size_t i = 0; i < net.layer_count(); ++i) {
        for (ParamView p : net.layer(i).params()) {
          for (std::size_t j = 0; j < p.values.size(); ++j, ++cursor) {
            velocity[cursor] = hp.momentum * velocity[cursor] -
                               hp.learning_rate * grad_sum[cursor] * inv_b;
            p.values[j] += velocity[cursor];
          }
        }
      }
      ++report.steps;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  report.final_loss = report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back();
  report.ok = std::isfinite(report.final_loss);
  return report;
}

inline double accuracy(const Network& net, const Dataset& ds, unsigned workers = 1) {
  if (ds.size() == 0) return 0.0;
  std::vector<std::uint8_t> hit(ds.size());
  parallel_for(ds.size(), workers, [&](std::size_t i) {
    hit[i] = net.predict(ds.images[i]) == ds.labels[i] ? 1 : 0;
  });
  std::size_t correct = 0;
  for (std::uint8_t h : hit) correct += h;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace pqsv
