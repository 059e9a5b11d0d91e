#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "mlfx/common.hpp"
#include "mlfx/network.hpp"
#include "test_support.hpp"

using namespace mlfx;
using namespace mlfx::test;

TEST_CASE("identity network reproduces its input") {
  const auto n = net({DenseLayer::identity(2)});
  const auto out = predict(n, vec({3.0, -1.0}));
  CHECK(out[0] == doctest::Approx(3.0));
  CHECK(out[1] == doctest::Approx(-1.0));
}

TEST_CASE("relu clamps negative pre-activations") {
  const auto n = net({layer({{1, 0}, {0, 1}}, {0, 0}, Activation::Relu)});
  const auto out = predict(n, vec({-1.0, 2.0}));
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 2.0);
}

TEST_CASE("dense layer matches hand matrix product") {
  const auto n = net({layer({{3, 1}}, {0})});
  CHECK(predict(n, vec({1.0, 2.0}))[0] == doctest::Approx(5.0));
}

TEST_CASE("forward records one trace entry per layer") {
  const auto n = net({layer({{1, 1}, {1, -1}}, {0, 0}, Activation::Relu), layer({{2, 3}}, {1})});
  const auto trace = forward(n, vec({1.0, 2.0}));
  REQUIRE(trace.pre.size() == 2);
  REQUIRE(trace.post.size() == 2);
  CHECK(trace.pre[0][1] == doctest::Approx(-1.0));
  CHECK(trace.post[0][1] == 0.0);
  CHECK(trace.output[0] == doctest::Approx(2 * 3 + 3 * 0 + 1));
}

TEST_CASE("softmax readout is a probability vector") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto n = random_mlp({5, 7, 4}, seed);
    n.readout = Readout::Softmax;
    const auto out = predict(n, random_vector(5, derive_seed(seed, 1), -2.0, 2.0));
    double sum = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) {
      CHECK(out[i] >= 0.0);
      sum += out[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("forward rejects dimension mismatch") {
  const auto n = net({layer({{3, 1}}, {0})});
  CHECK_THROWS_AS(forward(n, vec({1.0, 2.0, 3.0})), ValidationError);
}

TEST_CASE("network validation rejects non-chaining layers") {
  std::vector<DenseLayer> layers;
  layers.push_back(layer({{1, 0}, {0, 1}}, {0, 0}));
  layers.push_back(layer({{1, 1, 1}}, {0}));  // expects 3 inputs, gets 2
  CHECK_THROWS_AS(net(std::move(layers)), ValidationError);
}

TEST_CASE("non-finite values trip the finite-output invariant") {
  const auto n = net({DenseLayer::identity(1)});
  Tensor x({1});
  x[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(forward(n, x), NumericError);
}
