#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mlfx/network.hpp"
#include "mlfx/rng.hpp"
#include "mlfx/tensor.hpp"
#include "mlfx/train.hpp"

namespace mlfx::test {

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("mlfx_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline Tensor vec(std::vector<double> v) { return Tensor::from_vector(std::move(v)); }

// rows-of-weights constructor: mat({{1,2},{3,4}}) is 2x2.
inline Tensor mat(std::vector<std::vector<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = rows.front().size();
  Tensor t({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) t.at(i, j) = rows[i][j];
  }
  return t;
}

inline DenseLayer layer(std::vector<std::vector<double>> w, std::vector<double> b,
                        Activation act = Activation::Identity) {
  return DenseLayer(mat(std::move(w)), vec(std::move(b)), act);
}

inline LayeredNetwork net(std::vector<DenseLayer> layers, Readout readout = Readout::Logits) {
  return LayeredNetwork(std::move(layers), readout);
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Random zero-bias MLP for conservation/oracle properties.
inline LayeredNetwork random_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                 Activation hidden = Activation::Relu, bool zero_bias = true) {
  LayeredNetwork n = make_mlp(dims, hidden, Activation::Identity, Readout::Logits, seed);
  if (!zero_bias) {
    Rng rng(derive_seed(seed, 0xB1A5));
    for (auto& l : n.layers) {
      for (double& b : l.biases.data()) b = rng.uniform(-0.1, 0.1);
    }
  }
  return n;
}

inline Tensor random_vector(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t({n});
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace mlfx::test
