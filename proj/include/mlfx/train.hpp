#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlfx/network.hpp"
#include "mlfx/tensor.hpp"

namespace mlfx {

enum class Optimizer { Sgd, SgdMomentum };

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::SgdMomentum;
  double momentum = 0.9;

  void validate() const;
};

// Labeled (or unlabeled, for autoencoder training) sample collection.
struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<int> labels;  // empty when unlabeled

  std::size_t size() const { return inputs.size(); }
  std::size_t feature_dim() const;
  int num_classes() const;
};

// Dense MLP with seeded uniform(-a, a) init, a = sqrt(6 / (n_in + n_out)).
LayeredNetwork make_mlp(const std::vector<std::size_t>& dims, Activation hidden,
                        Activation output, Readout readout, std::uint64_t seed);

// Parameter gradients aligned with net.layers plus the input gradient.
struct Gradients {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;
  Tensor input;

  explicit Gradients(const LayeredNetwork& net);
  void accumulate(const Gradients& other);
  void scale(double s);
};

// Backward pass for dL/d(post-activation of the last layer).
Gradients backprop(const LayeredNetwork& net, const ActivationTrace& trace,
                   const Tensor& dloss_dpost);

double cross_entropy_loss(const Tensor& logits, int label);
Tensor cross_entropy_logit_grad(const Tensor& logits, int label);

// In-place SGD/momentum step; `velocity` must be zero-initialized gradients.
void apply_update(LayeredNetwork& net, const Gradients& grads, const TrainConfig& cfg,
                  Gradients& velocity);

struct TrainResult {
  LayeredNetwork net;
  std::vector<double> epoch_losses;  // mean loss per epoch
};

// Trains a logits-readout classifier on flattened inputs. Deterministic given
// (seed, config, data). Throws NumericError when the loss leaves the finite
// range (training diverged).
TrainResult train_classifier(const Dataset& data, const std::vector<std::size_t>& arch,
                             const TrainConfig& cfg);

double accuracy(const LayeredNetwork& net, const Dataset& data);

}  // namespace mlfx
