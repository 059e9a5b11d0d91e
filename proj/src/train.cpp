#include "mlfx/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlfx/common.hpp"
#include "mlfx/rng.hpp"

namespace mlfx {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

std::size_t Dataset::feature_dim() const {
  if (inputs.empty()) throw ValidationError("dataset is empty");
  return inputs.front().numel();
}

int Dataset::num_classes() const {
  int c = 0;
  for (int l : labels) c = std::max(c, l + 1);
  return c;
}

LayeredNetwork make_mlp(const std::vector<std::size_t>& dims, Activation hidden,
                        Activation output, Readout readout, std::uint64_t seed) {
  if (dims.size() < 2) throw ValidationError("mlp needs at least input and output dims");
  Rng rng(derive_seed(seed, 0x1417u));
  std::vector<DenseLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const std::size_t n_in = dims[k];
    const std::size_t n_out = dims[k + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    Tensor w({n_out, n_in});
    for (double& v : w.data()) v = rng.uniform(-a, a);
    const bool last = (k + 2 == dims.size());
    layers.emplace_back(std::move(w), Tensor({n_out}), last ? output : hidden);
  }
  return LayeredNetwork(std::move(layers), readout);
}

Gradients::Gradients(const LayeredNetwork& net) : input({net.input_dim()}) {
  weights.reserve(net.layers.size());
  biases.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    weights.emplace_back(Tensor({l.out_dim(), l.in_dim()}));
    biases.emplace_back(Tensor({l.out_dim()}));
  }
}

void Gradients::accumulate(const Gradients& other) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    for (std::size_t i = 0; i < weights[k].numel(); ++i) weights[k][i] += other.weights[k][i];
    for (std::size_t i = 0; i < biases[k].numel(); ++i) biases[k][i] += other.biases[k][i];
  }
}

void Gradients::scale(double s) {
  for (auto& w : weights)
    for (double& v : w.data()) v *= s;
  for (auto& b : biases)
    for (double& v : b.data()) v *= s;
}

Gradients backprop(const LayeredNetwork& net, const ActivationTrace& trace,
                   const Tensor& dloss_dpost) {
  if (dloss_dpost.numel() != net.output_dim()) {
    throw ValidationError("backprop: loss gradient length does not match output dim");
  }
  Gradients grads(net);
  Tensor da = dloss_dpost;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const DenseLayer& layer = net.layers[k];
    const Tensor& in = trace.layer_input(k);
    const std::size_t n_in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();

    Tensor dz({n_out});
    for (std::size_t j = 0; j < n_out; ++j) {
      const double gate =
          layer.activation == Activation::Relu && trace.pre[k][j] <= 0.0 ? 0.0 : 1.0;
      dz[j] = da[j] * gate;
    }

    for (std::size_t j = 0; j < n_out; ++j) {
      const double g = dz[j];
      if (g == 0.0) continue;
      double* wg = grads.weights[k].data().data() + j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) wg[i] += g * in[i];
      grads.biases[k][j] += g;
    }

    Tensor din({n_in});
    for (std::size_t j = 0; j < n_out; ++j) {
      const double g = dz[j];
      if (g == 0.0) continue;
      const double* wrow = layer.weights.data().data() + j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) din[i] += g * wrow[i];
    }
    da = std::move(din);
  }
  grads.input = std::move(da);
  return grads;
}

double cross_entropy_loss(const Tensor& logits, int label) {
  const Tensor p = softmax(logits);
  const double q = std::max(p[static_cast<std::size_t>(label)], 1e-300);
  return -std::log(q);
}

Tensor cross_entropy_logit_grad(const Tensor& logits, int label) {
  Tensor g = softmax(logits);
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

void apply_update(LayeredNetwork& net, const Gradients& grads, const TrainConfig& cfg,
                  Gradients& velocity) {
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto step = [&](Tensor& param, const Tensor& grad, Tensor& vel) {
      for (std::size_t i = 0; i < param.numel(); ++i) {
        if (cfg.optimizer == Optimizer::SgdMomentum) {
          vel[i] = cfg.momentum * vel[i] - cfg.learning_rate * grad[i];
          param[i] += vel[i];
        } else {
          param[i] -= cfg.learning_rate * grad[i];
        }
      }
    };
    step(net.layers[k].weights, grads.weights[k], velocity.weights[k]);
    step(net.layers[k].biases, grads.biases[k], velocity.biases[k]);
  }
}

TrainResult train_classifier(const Dataset& data, const std::vector<std::size_t>& arch,
                             const TrainConfig& cfg) {
  // epochs == 0 is accepted here as "return the seeded initialization".
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (cfg.batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (data.inputs.empty()) throw ValidationError("train_classifier: dataset is empty");
  if (data.labels.size() != data.inputs.size()) {
    throw ValidationError("train_classifier: labels do not match inputs");
  }
  if (arch.size() < 2 || arch.front() != data.feature_dim()) {
    throw ValidationError("train_classifier: arch must start at the input dimension");
  }
  const int num_classes = static_cast<int>(arch.back());
  for (int l : data.labels) {
    if (l < 0 || l >= num_classes) throw ValidationError("train_classifier: label out of range");
  }

  TrainResult result;
  result.net = make_mlp(arch, Activation::Relu, Activation::Identity, Readout::Logits, cfg.seed);
  if (cfg.epochs == 0) return result;

  Gradients velocity(result.net);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5u));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      Gradients batch(result.net);
      for (std::size_t idx = start; idx < end; ++idx) {
        const std::size_t s = order[idx];
        const ActivationTrace trace = forward(result.net, data.inputs[s]);
        epoch_loss += cross_entropy_loss(trace.logits(), data.labels[s]);
        const Tensor dlogits = cross_entropy_logit_grad(trace.logits(), data.labels[s]);
        batch.accumulate(backprop(result.net, trace, dlogits));
      }
      batch.scale(1.0 / static_cast<double>(end - start));
      apply_update(result.net, batch, cfg, velocity);
    }
    epoch_loss /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("train_classifier: training diverged (non-finite loss)");
    }
    result.epoch_losses.push_back(epoch_loss);
  }
  return result;
}

double accuracy(const LayeredNetwork& net, const Dataset& data) {
  if (data.inputs.empty()) throw ValidationError("accuracy: dataset is empty");
  std::size_t hits = 0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (argmax(predict(net, data.inputs[s])) == static_cast<std::size_t>(data.labels[s])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace mlfx
