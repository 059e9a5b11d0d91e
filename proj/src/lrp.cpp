#include "mlfx/lrp.hpp"

#include <cmath>

#include "mlfx/common.hpp"

namespace mlfx {

void LrpConfig::validate() const {
  if (std::abs(alpha - beta - 1.0) > 1e-12) {
    throw ValidationError("lrp: alpha - beta must equal 1");
  }
  if (!(epsilon > 0.0)) {
    throw ValidationError("lrp: epsilon must be positive");
  }
}

Tensor init_relevance(const Tensor& logits, std::optional<std::size_t> target) {
  logits.require_finite("init_relevance");
  const std::size_t cls = target.value_or(argmax(logits));
  if (cls >= logits.numel()) {
    throw ValidationError("init_relevance: target class out of range");
  }
  Tensor rel({logits.numel()});
  rel[cls] = logits[cls];
  return rel;
}

Tensor lrp_linear(const DenseLayer& layer, const Tensor& in_acts, const Tensor& out_rel,
                  const LrpConfig& cfg, RelevanceTrace* trace) {
  cfg.validate();
  const std::size_t n_in = layer.in_dim();
  const std::size_t n_out = layer.out_dim();
  if (in_acts.numel() != n_in || out_rel.numel() != n_out) {
    throw ValidationError("lrp_linear: activation/relevance dims do not match layer");
  }

  Tensor in_rel({n_in});
  for (std::size_t j = 0; j < n_out; ++j) {
    const double rj = out_rel[j];
    if (rj == 0.0) continue;

    const double* wrow = layer.weights.data().data() + j * n_in;
    const double bias = layer.biases[j];
    double pos_sum = bias > 0.0 ? bias : 0.0;
    double neg_sum = bias < 0.0 ? bias : 0.0;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double z = in_acts[i] * wrow[i];
      if (z > 0.0) {
        pos_sum += z;
      } else {
        neg_sum += z;
      }
    }

    if (pos_sum == 0.0 && neg_sum == 0.0) {
      // No contribution pool to redistribute over; this unit's relevance is
      // dropped and surfaced as a diagnostic rather than amplified by epsilon.
      if (trace != nullptr) {
        trace->dropped_units += 1;
        trace->dropped_relevance += rj;
      }
      continue;
    }
    if (trace != nullptr && ((pos_sum > 0.0) != (neg_sum < 0.0))) {
      trace->single_pool_units += 1;
    }

    const double pos_denom = pos_sum + cfg.epsilon;
    const double neg_denom = neg_sum - cfg.epsilon;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double z = in_acts[i] * wrow[i];
      if (z > 0.0) {
        in_rel[i] += cfg.alpha * z / pos_denom * rj;
      } else if (z < 0.0) {
        in_rel[i] -= cfg.beta * z / neg_denom * rj;
      }
    }
  }
  in_rel.require_finite("lrp_linear");
  return in_rel;
}

RelevanceTrace lrp_propagate(const LayeredNetwork& net, const ActivationTrace& fwd,
                             const LrpConfig& cfg, std::optional<std::size_t> target) {
  cfg.validate();
  RelevanceTrace trace;
  trace.output_init = init_relevance(fwd.logits(), target);
  trace.input_rel.resize(net.layers.size());

  Tensor rel = trace.output_init;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    rel = lrp_linear(net.layers[k], fwd.layer_input(k), rel, cfg, &trace);
    trace.input_rel[k] = rel;
  }
  return trace;
}

RelevanceTrace lrp_propagate(const LayeredNetwork& net, const Tensor& x, const LrpConfig& cfg,
                             std::optional<std::size_t> target) {
  return lrp_propagate(net, forward(net, x), cfg, target);
}

}  // namespace mlfx
