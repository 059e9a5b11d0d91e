#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlfx/autoencoder.hpp"
#include "mlfx/common.hpp"
#include "mlfx/gmlf.hpp"
#include "mlfx/segmentation.hpp"
#include "mlfx/vae.hpp"
#include "test_support.hpp"

using namespace mlfx;
using namespace mlfx::test;

namespace {

LrpConfig cfg_ab(double alpha, double beta, double eps = 1e-9) {
  LrpConfig cfg;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.epsilon = eps;
  return cfg;
}

Image random_gray(std::size_t h, std::size_t w, std::uint64_t seed, double lo = 0.05) {
  Image img(h, w, 1);
  Rng rng(seed);
  for (double& v : img.pixels) v = rng.uniform(lo, 1.0);
  return img;
}

double sum(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

SegmentationHierarchy halves_2x2() {
  SegmentationHierarchy h;
  h.height = 2;
  h.width = 2;
  h.levels.resize(1);
  h.levels[0].labels = {0, 0, 1, 1};
  h.levels[0].num_regions = 2;
  return h;
}

}  // namespace

TEST_CASE("flat composite on the ones vector equals the classifier on the image") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Image img = random_gray(4, 4, derive_seed(seed, 2));
    const auto h = hierarchical_segment(img, auto_thresholds(img, 1));
    const auto ae = build_segmentation_autoencoder(img, h);
    const auto model = random_mlp({16, 10, 3}, seed, Activation::Relu, false);

    const auto composite = stack_composite(ae, model);
    const Tensor via_composite = forward(composite.net, ae.encoding).logits();
    const Tensor direct = forward(model, img.to_tensor()).logits();
    for (std::size_t c = 0; c < direct.numel(); ++c) {
      CHECK(std::abs(via_composite[c] - direct[c]) <= 1e-12);
    }
  }
}

TEST_CASE("vae composite on the posterior mean equals the classifier on the image") {
  Dataset data;
  for (std::uint64_t i = 0; i < 6; ++i) {
    data.inputs.push_back(random_vector(9, derive_seed(77, i), 0.0, 1.0));
  }
  TrainConfig tcfg;
  tcfg.epochs = 4;
  tcfg.learning_rate = 1e-3;
  tcfg.seed = 3;
  const VaeModel vae = train_vae(data, 4, 2.0, tcfg).vae;

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Tensor x = random_vector(9, derive_seed(seed, 5), 0.0, 1.0);
    const auto ae = build_vae_autoencoder(vae, x);
    const auto model = random_mlp({9, 7, 2}, seed, Activation::Relu, false);
    const auto composite = stack_composite(ae, model);
    const Tensor via_composite = forward(composite.net, ae.encoding).logits();
    const Tensor direct = forward(model, x).logits();
    for (std::size_t c = 0; c < direct.numel(); ++c) {
      CHECK(std::abs(via_composite[c] - direct[c]) <= 1e-12);
    }
  }
}

TEST_CASE("stack_composite rejects mismatched dimensions") {
  const Image img = random_gray(2, 2, 4);
  const auto ae = build_segmentation_autoencoder(img, halves_2x2());
  const auto model = random_mlp({9, 4, 2}, 1);
  CHECK_THROWS_AS(stack_composite(ae, model), ValidationError);
}

TEST_CASE("segment-aligned linear classifier routes all relevance to its segment") {
  // f(x) = sum of the first row's pixels; segments are the two rows.
  Image img(2, 2, 1);
  img.pixels = {0.5, 1.5, 0.7, 0.2};
  const auto ae = build_segmentation_autoencoder(img, halves_2x2());
  const auto model = net({layer({{1, 1, 0, 0}}, {0})});

  const auto report = explain(model, img.to_tensor(), ae, cfg_ab(1, 0, 1e-12));
  REQUIRE(report.level_relevance.size() == 1);
  CHECK(report.relevance()[0] == doctest::Approx(0.5 + 1.5).epsilon(1e-9));
  CHECK(report.relevance()[1] == doctest::Approx(0.0));
  CHECK(report.predicted_logit == doctest::Approx(2.0));
}

TEST_CASE("identity classifier on one pixel and one segment yields the logit") {
  Image img(1, 1, 1);
  img.pixels = {0.8};
  SegmentationHierarchy h;
  h.height = h.width = 1;
  h.levels.resize(1);
  h.levels[0].labels = {0};
  h.levels[0].num_regions = 1;
  const auto ae = build_segmentation_autoencoder(img, h);
  const auto model = net({DenseLayer::identity(1)});
  const auto report = explain(model, img.to_tensor(), ae, cfg_ab(1, 0));
  CHECK(report.relevance()[0] == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("flat relevance sums to the predicted logit for zero-bias classifiers") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const Image img = random_gray(4, 4, derive_seed(seed, 31));
    const auto h = hierarchical_segment(img, auto_thresholds(img, 1));
    const auto ae = build_segmentation_autoencoder(img, h);
    const auto model = random_mlp({16, 12, 3}, derive_seed(seed, 32));  // zero biases

    const auto report = explain(model, img.to_tensor(), ae, cfg_ab(1, 0, 1e-12));
    REQUIRE(report.dropped_units == 0);
    CHECK(rel_err(sum(report.relevance()), report.predicted_logit) < 1e-9);
  }
}

TEST_CASE("flat explanation matches the pixel aggregation oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image img = random_gray(5, 5, derive_seed(seed, 11));
    const auto h = hierarchical_segment(img, auto_thresholds(img, 1));
    const auto ae = build_segmentation_autoencoder(img, h);
    const auto model = random_mlp({25, 14, 4}, derive_seed(seed, 12), Activation::Relu, false);

    const auto cfg = cfg_ab(1, 0);
    const auto report = explain(model, img.to_tensor(), ae, cfg);
    const Tensor oracle = aggregate_oracle(model, img.to_tensor(), h.levels[0], 1, cfg);

    REQUIRE(report.relevance().numel() == oracle.numel());
    for (std::size_t i = 0; i < oracle.numel(); ++i) {
      CHECK(rel_err(report.relevance()[i], oracle[i]) < 1e-6);
    }
  }
}

TEST_CASE("oracle on a single-segment partition equals the total pixel relevance") {
  const Image img = random_gray(3, 3, 8);
  Partition whole;
  whole.labels.assign(9, 0);
  whole.num_regions = 1;
  const auto model = random_mlp({9, 6, 2}, 5);
  const auto cfg = cfg_ab(1, 0);
  const Tensor oracle = aggregate_oracle(model, img.to_tensor(), whole, 1, cfg);
  const auto trace = lrp_propagate(model, img.to_tensor(), cfg);
  CHECK(oracle[0] == doctest::Approx(sum(trace.input_rel[0])));
}

TEST_CASE("zero image yields zero relevance everywhere") {
  Image img(2, 2, 1, 0.0);
  const auto model = random_mlp({4, 3, 2}, 2);
  const Tensor oracle = aggregate_oracle(model, img.to_tensor(), halves_2x2().levels[0], 1,
                                         cfg_ab(1, 0));
  CHECK(oracle[0] == 0.0);
  CHECK(oracle[1] == 0.0);
}

TEST_CASE("hierarchical report has one relevance vector per level") {
  const Image img = random_gray(6, 6, 71);
  const auto h = hierarchical_segment(img, auto_thresholds(img, 3));
  const auto ae = build_segmentation_autoencoder(img, h);
  const auto model = random_mlp({36, 16, 3}, 6, Activation::Relu, false);

  const auto report = explain(model, img.to_tensor(), ae, cfg_ab(1, 0));
  REQUIRE(report.kind == MlfKind::HierSeg);
  REQUIRE(report.level_relevance.size() == h.num_levels());
  for (std::size_t k = 0; k < h.num_levels(); ++k) {
    CHECK(report.level_relevance[k].numel() == h.levels[k].num_regions);
  }
}

TEST_CASE("drilldown follows the most relevant child chain") {
  SegmentationHierarchy h;
  h.height = 1;
  h.width = 6;
  h.levels.resize(2);
  h.levels[0].labels = {0, 0, 0, 0, 1, 1};
  h.levels[0].num_regions = 2;
  h.levels[1].labels = {0, 0, 1, 1, 2, 2};
  h.levels[1].num_regions = 3;
  h.parents = {{0, 0, 1}};

  RelevanceReport report;
  report.kind = MlfKind::HierSeg;
  report.level_relevance = {vec({0.9, 0.1}), vec({0.6, 0.3, 0.1})};

  const auto chains = hierarchical_drilldown(report, h, 2);
  REQUIRE(chains.size() == 2);
  CHECK(chains[0] == std::vector<std::uint32_t>{0, 0});
  CHECK(chains[1] == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("drilldown with one branch on a flat hierarchy is the argmax segment") {
  SegmentationHierarchy h = halves_2x2();
  RelevanceReport report;
  report.kind = MlfKind::FlatSeg;
  report.level_relevance = {vec({0.2, 0.9})};
  const auto chains = hierarchical_drilldown(report, h, 1);
  REQUIRE(chains.size() == 1);
  CHECK(chains[0] == std::vector<std::uint32_t>{1});
}

TEST_CASE("drilldown ties resolve to the lower region id") {
  SegmentationHierarchy h;
  h.height = 1;
  h.width = 4;
  h.levels.resize(2);
  h.levels[0].labels = {0, 0, 1, 1};
  h.levels[0].num_regions = 2;
  h.levels[1].labels = {0, 1, 2, 3};
  h.levels[1].num_regions = 4;
  h.parents = {{0, 0, 1, 1}};

  RelevanceReport report;
  report.kind = MlfKind::HierSeg;
  report.level_relevance = {vec({0.5, 0.5}), vec({0.25, 0.25, 0.25, 0.25})};
  const auto chains = hierarchical_drilldown(report, h, 2);
  CHECK(chains[0] == std::vector<std::uint32_t>{0, 0});
  CHECK(chains[1] == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("drilldown rejects more branches than coarse segments") {
  SegmentationHierarchy h = halves_2x2();
  RelevanceReport report;
  report.kind = MlfKind::FlatSeg;
  report.level_relevance = {vec({0.2, 0.9})};
  CHECK_THROWS_AS(hierarchical_drilldown(report, h, 3), ValidationError);
}

TEST_CASE("segment ranking is invariant to positive image scaling for linear models") {
  const Image img = random_gray(3, 3, 55);
  const auto h = hierarchical_segment(img, auto_thresholds(img, 1));
  const auto model = random_mlp({9, 3}, 9);  // single linear layer

  auto ranking = [&](const Image& input) {
    const auto ae = build_segmentation_autoencoder(input, h);
    const auto report = explain(model, input.to_tensor(), ae, cfg_ab(1, 0));
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < report.relevance().numel(); ++i) {
      order.emplace_back(-report.relevance()[i], i);
    }
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> ids;
    for (const auto& [v, i] : order) ids.push_back(i);
    return ids;
  };

  Image scaled = img;
  for (double& v : scaled.pixels) v *= 4.0;
  CHECK(ranking(img) == ranking(scaled));
}

TEST_CASE("explain rejects an autoencoder built for a different input") {
  const Image img = random_gray(2, 2, 61);
  const auto ae = build_segmentation_autoencoder(img, halves_2x2());
  const auto model = random_mlp({4, 2}, 3);
  Tensor other = img.to_tensor();
  other[0] += 0.25;
  CHECK_THROWS_AS(explain(model, other, ae, cfg_ab(1, 0)), ValidationError);
}

TEST_CASE("composite fidelity diagnostic stays at machine precision") {
  const Image img = random_gray(4, 4, 13);
  const auto h = hierarchical_segment(img, auto_thresholds(img, 2));
  const auto ae = build_segmentation_autoencoder(img, h);
  const auto model = random_mlp({16, 8, 3}, 21, Activation::Relu, false);
  const auto report = explain(model, img.to_tensor(), ae, cfg_ab(1, 0));
  CHECK(report.composite_fidelity <= 1e-12);
}

TEST_CASE("the residual branch carries zero relevance into the encoding") {
  // The residual is a zero-weight layer: propagating any relevance through it
  // yields exactly zero, whatever the bias holds.
  for (double scale : {0.0, 1.0, -3.0, 42.0}) {
    Tensor r({4});
    for (std::size_t i = 0; i < 4; ++i) r[i] = scale * (static_cast<double>(i) - 1.5);
    const DenseLayer res = residual_layer(r, 3);
    const auto rel = lrp_linear(res, vec({1.0, -2.0, 0.5}), vec({1.0, 2.0, 3.0, 4.0}),
                                cfg_ab(1, 0));
    for (std::size_t i = 0; i < rel.numel(); ++i) CHECK(rel[i] == 0.0);
  }
}

TEST_CASE("relevance report JSON round-trips") {
  RelevanceReport report;
  report.kind = MlfKind::HierSeg;
  report.level_relevance = {vec({0.5, -0.25}), vec({0.1, 0.2, 0.2})};
  report.predicted_class = 2;
  report.predicted_logit = 1.25;
  report.config = cfg_ab(2, 1);
  const auto loaded = report_from_json(report_to_json(report));
  CHECK(loaded.kind == MlfKind::HierSeg);
  CHECK(loaded.predicted_class == 2);
  CHECK(loaded.predicted_logit == 1.25);
  CHECK(loaded.config.alpha == 2.0);
  REQUIRE(loaded.level_relevance.size() == 2);
  CHECK(loaded.level_relevance[0].data() == report.level_relevance[0].data());
  CHECK(loaded.level_relevance[1].data() == report.level_relevance[1].data());
}
