#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mlfx/network.hpp"
#include "mlfx/tensor.hpp"

namespace mlfx {

// Relevance propagation settings. The rule splits positive and negative
// contributions with weights alpha and beta, alpha - beta == 1.
struct LrpConfig {
  double alpha = 1.0;
  double beta = 0.0;
  double epsilon = 1e-9;

  void validate() const;
};

// Input relevances per layer, aligned with the ActivationTrace produced by
// forward(): input_rel[k] is the relevance arriving at the input of layer k,
// so input_rel[0] is the relevance on the network input.
struct RelevanceTrace {
  Tensor output_init;
  std::vector<Tensor> input_rel;
  // Output units whose positive and negative contribution pools were both
  // empty while carrying nonzero relevance; their share is dropped.
  std::size_t dropped_units = 0;
  double dropped_relevance = 0.0;
  // Units with nonzero relevance whose pools were populated on one side only.
  // The rule still applies there, but layer-sum conservation does not.
  std::size_t single_pool_units = 0;
};

// One-hot relevance at `target` (argmax when unset), scaled by that logit.
Tensor init_relevance(const Tensor& logits, std::optional<std::size_t> target = std::nullopt);

// Redistributes out_rel onto the layer inputs with the alpha-beta rule,
// z_ij = a_i * w_ji. Biases take part in the denominators only. `trace`, when
// given, accumulates dropped-unit diagnostics.
Tensor lrp_linear(const DenseLayer& layer, const Tensor& in_acts, const Tensor& out_rel,
                  const LrpConfig& cfg, RelevanceTrace* trace = nullptr);

// Full backward pass: initializes at the logits (softmax readout is bypassed)
// and applies lrp_linear layer by layer. Relu steps pass relevance through
// unchanged; contributions are formed from the previous layer's
// post-activation values.
RelevanceTrace lrp_propagate(const LayeredNetwork& net, const Tensor& x, const LrpConfig& cfg,
                             std::optional<std::size_t> target = std::nullopt);

// Same propagation against an existing forward trace (used by composites).
RelevanceTrace lrp_propagate(const LayeredNetwork& net, const ActivationTrace& fwd,
                             const LrpConfig& cfg, std::optional<std::size_t> target = std::nullopt);

}  // namespace mlfx
