#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mlfx/tensor.hpp"

namespace mlfx {

enum class Activation { Identity, Relu };
enum class Readout { Logits, Softmax };

std::string to_string(Activation a);
std::string to_string(Readout r);
Activation activation_from_string(const std::string& s);
Readout readout_from_string(const std::string& s);

// Fully connected layer: y = act(W x + b), weights shaped [n_out, n_in].
struct DenseLayer {
  Tensor weights;
  Tensor biases;
  Activation activation = Activation::Identity;

  DenseLayer() = default;
  DenseLayer(Tensor w, Tensor b, Activation act);

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  static DenseLayer identity(std::size_t dim);
};

// Ordered dense layers with a readout tag. Networks are immutable once built;
// forward passes are pure.
struct LayeredNetwork {
  std::vector<DenseLayer> layers;
  Readout readout = Readout::Logits;

  LayeredNetwork() = default;
  LayeredNetwork(std::vector<DenseLayer> ls, Readout r);

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::size_t parameter_count() const;

  void validate() const;  // throws ValidationError if layer dims do not chain
};

// Per-layer tensors recorded by forward(); index k matches layers[k].
struct ActivationTrace {
  Tensor input;
  std::vector<Tensor> pre;   // W x + b before activation
  std::vector<Tensor> post;  // after activation
  Tensor output;             // post.back(), softmaxed when readout == Softmax

  const Tensor& logits() const { return post.back(); }
  // Activation feeding layer k (the network input for k == 0).
  const Tensor& layer_input(std::size_t k) const { return k == 0 ? input : post[k - 1]; }
};

Tensor softmax(const Tensor& logits);

ActivationTrace forward(const LayeredNetwork& net, const Tensor& x);

// Convenience: final output only.
Tensor predict(const LayeredNetwork& net, const Tensor& x);

std::size_t argmax(const Tensor& v);

}  // namespace mlfx
