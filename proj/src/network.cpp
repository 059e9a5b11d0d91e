#include "mlfx/network.hpp"

#include <algorithm>
#include <cmath>

#include "mlfx/common.hpp"

namespace mlfx {

std::string to_string(Activation a) {
  return a == Activation::Identity ? "identity" : "relu";
}

std::string to_string(Readout r) { return r == Readout::Logits ? "logits" : "softmax"; }

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  throw ValidationError("unknown activation: " + s);
}

Readout readout_from_string(const std::string& s) {
  if (s == "logits") return Readout::Logits;
  if (s == "softmax") return Readout::Softmax;
  throw ValidationError("unknown readout: " + s);
}

DenseLayer::DenseLayer(Tensor w, Tensor b, Activation act)
    : weights(std::move(w)), biases(std::move(b)), activation(act) {
  if (weights.shape().size() != 2) {
    throw ValidationError("layer weights must be a matrix [n_out, n_in]");
  }
  if (biases.shape().size() != 1 || biases.numel() != weights.rows()) {
    throw ValidationError("layer bias length must equal n_out");
  }
}

DenseLayer DenseLayer::identity(std::size_t dim) {
  Tensor w({dim, dim});
  for (std::size_t i = 0; i < dim; ++i) w.at(i, i) = 1.0;
  return DenseLayer(std::move(w), Tensor({dim}), Activation::Identity);
}

LayeredNetwork::LayeredNetwork(std::vector<DenseLayer> ls, Readout r)
    : layers(std::move(ls)), readout(r) {
  validate();
}

void LayeredNetwork::validate() const {
  if (layers.empty()) throw ValidationError("network needs at least one layer");
  for (std::size_t k = 1; k < layers.size(); ++k) {
    if (layers[k].in_dim() != layers[k - 1].out_dim()) {
      throw ValidationError("layer " + std::to_string(k) + " input dim " +
                            std::to_string(layers[k].in_dim()) + " does not chain with previous output dim " +
                            std::to_string(layers[k - 1].out_dim()));
    }
  }
}

std::size_t LayeredNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.numel() + l.biases.numel();
  return n;
}

Tensor softmax(const Tensor& logits) {
  Tensor out({logits.numel()});
  double mx = logits[0];
  for (std::size_t i = 1; i < logits.numel(); ++i) mx = std::max(mx, logits[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.numel(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) {
    throw NumericError("softmax: non-finite normalizer");
  }
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= sum;
  return out;
}

ActivationTrace forward(const LayeredNetwork& net, const Tensor& x) {
  net.validate();
  if (x.numel() != net.input_dim()) {
    throw ValidationError("forward: input length " + std::to_string(x.numel()) +
                          " does not match network input dim " + std::to_string(net.input_dim()));
  }

  ActivationTrace trace;
  trace.input = x;
  trace.pre.reserve(net.layers.size());
  trace.post.reserve(net.layers.size());

  const Tensor* current = &trace.input;
  for (const DenseLayer& layer : net.layers) {
    const std::size_t n_out = layer.out_dim();
    const std::size_t n_in = layer.in_dim();
    Tensor z({n_out});
    for (std::size_t j = 0; j < n_out; ++j) {
      double acc = layer.biases[j];
      const double* wrow = layer.weights.data().data() + j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += wrow[i] * (*current)[i];
      z[j] = acc;
    }
    Tensor a = z;
    if (layer.activation == Activation::Relu) {
      for (std::size_t j = 0; j < n_out; ++j) a[j] = std::max(0.0, a[j]);
    }
    trace.pre.push_back(std::move(z));
    trace.post.push_back(std::move(a));
    current = &trace.post.back();
  }

  trace.output = net.readout == Readout::Softmax ? softmax(trace.post.back()) : trace.post.back();
  trace.output.require_finite("forward");
  return trace;
}

Tensor predict(const LayeredNetwork& net, const Tensor& x) { return forward(net, x).output; }

std::size_t argmax(const Tensor& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.numel(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace mlfx
