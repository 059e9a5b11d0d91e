#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "mlfx/common.hpp"
#include "mlfx/rng.hpp"
#include "mlfx/segmentation.hpp"
#include "test_support.hpp"

using namespace mlfx;
using namespace mlfx::test;

namespace {

Image gray(std::size_t h, std::size_t w, const std::vector<double>& values) {
  Image img(h, w, 1);
  img.pixels = values;
  return img;
}

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Image img(h, w, 1);
  Rng rng(seed);
  for (double& v : img.pixels) v = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("constant image yields zero edge weights") {
  const auto edges = build_edge_graph(Image(3, 3, 1, 0.5));
  REQUIRE(edges.size() == 12);
  for (const Edge& e : edges) CHECK(e.weight == 0.0);
}

TEST_CASE("1x2 image has a single edge with the color distance") {
  const auto edges = build_edge_graph(gray(1, 2, {0.0, 255.0}));
  REQUIRE(edges.size() == 1);
  CHECK(edges[0].weight == doctest::Approx(255.0));
}

TEST_CASE("2x2 gradient image weights match direct distances") {
  // [[0,0],[10,10]]: horizontal edges 0, vertical edges 10.
  const auto edges = build_edge_graph(gray(2, 2, {0, 0, 10, 10}));
  REQUIRE(edges.size() == 4);
  for (const Edge& e : edges) {
    const bool horizontal = e.b == e.a + 1;
    CHECK(e.weight == doctest::Approx(horizontal ? 0.0 : 10.0));
  }
}

TEST_CASE("empty image is rejected") {
  Image img;
  CHECK_THROWS_AS(build_edge_graph(img), ValidationError);
}

TEST_CASE("constant image is one region at every level") {
  const auto h = hierarchical_segment(Image(4, 4, 1, 0.3), {5.0, 1.0, 0.5});
  REQUIRE(h.num_levels() == 3);
  for (const Partition& level : h.levels) CHECK(level.num_regions == 1);
  CHECK(check_refinement(h).ok);
}

TEST_CASE("half-and-half image splits only at the fine threshold") {
  Image img(4, 4, 1, 0.0);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 2; c < 4; ++c) img.at(r, c) = 255.0;
  }
  const auto h = hierarchical_segment(img, {300.0, 10.0});
  CHECK(h.levels[0].num_regions == 1);
  CHECK(h.levels[1].num_regions == 2);
  CHECK(check_refinement(h).ok);
  // Left and right halves are the two fine regions.
  CHECK(h.levels[1].labels[0] != h.levels[1].labels[3]);
}

TEST_CASE("checkerboard at a small threshold is all singletons") {
  Image img(4, 4, 1);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) img.at(r, c) = ((r + c) % 2 == 0) ? 0.0 : 255.0;
  }
  const Partition part = flat_segment(img, 10.0);
  CHECK(part.num_regions == 16);
}

TEST_CASE("flat_segment equals the single-level hierarchy") {
  const auto img = random_image(6, 6, 21);
  const auto part = flat_segment(img, 0.4);
  const auto h = hierarchical_segment(img, {0.4});
  CHECK(part.labels == h.levels[0].labels);
}

TEST_CASE("thresholds must be strictly decreasing and nonnegative") {
  const Image img(4, 4, 1, 0.0);
  CHECK_THROWS_AS(hierarchical_segment(img, {1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(hierarchical_segment(img, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(hierarchical_segment(img, {1.0, -0.5}), ValidationError);
  CHECK_THROWS_AS(hierarchical_segment(img, {}), ValidationError);
}

TEST_CASE("check_refinement flags a child straddling two parents") {
  SegmentationHierarchy h;
  h.height = 1;
  h.width = 4;
  h.levels.resize(2);
  h.levels[0].labels = {0, 0, 1, 1};
  h.levels[0].num_regions = 2;
  h.levels[1].labels = {0, 1, 1, 2};  // child 1 straddles parents 0 and 1
  h.levels[1].num_regions = 3;
  h.parents = {{0, 0, 1}};
  const auto check = check_refinement(h);
  CHECK(!check.ok);
  CHECK(check.level == 1);
  CHECK(check.child == 1);
}

TEST_CASE("single-level hierarchies are vacuously refined") {
  SegmentationHierarchy h;
  h.height = 1;
  h.width = 2;
  h.levels.resize(1);
  h.levels[0].labels = {0, 1};
  h.levels[0].num_regions = 2;
  CHECK(check_refinement(h).ok);
}

TEST_CASE("hierarchies from random images always satisfy refinement") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto img = random_image(8, 8, seed);
    const auto thresholds = auto_thresholds(img, 3);
    const auto h = hierarchical_segment(img, thresholds);
    CHECK(check_refinement(h).ok);
    // Region counts never decrease with fineness, ids stay dense.
    for (std::size_t k = 0; k + 1 < h.num_levels(); ++k) {
      CHECK(h.levels[k].num_regions <= h.levels[k + 1].num_regions);
    }
    for (const Partition& level : h.levels) {
      std::set<std::uint32_t> used(level.labels.begin(), level.labels.end());
      CHECK(used.size() == level.num_regions);
      CHECK(*used.rbegin() == level.num_regions - 1);
    }
  }
}

TEST_CASE("lowering a threshold never decreases the region count") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto img = random_image(7, 7, derive_seed(seed, 3));
    const auto coarse = flat_segment(img, 0.5);
    const auto fine = flat_segment(img, 0.25);
    CHECK(coarse.num_regions <= fine.num_regions);
  }
}

TEST_CASE("pixel-to-region assignment ignores edge insertion order") {
  const auto img = random_image(6, 6, 99);
  auto edges = build_edge_graph(img);
  const auto base = components_below(edges, img.positions(), 0.4);

  Rng rng(7);
  for (int shuffle = 0; shuffle < 5; ++shuffle) {
    rng.shuffle(edges);
    const auto permuted = components_below(edges, img.positions(), 0.4);
    CHECK(permuted.labels == base.labels);
  }
}

TEST_CASE("min-region-size merge removes small regions and keeps refinement") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto img = random_image(10, 10, derive_seed(seed, 8));
    const auto h = hierarchical_segment(img, auto_thresholds(img, 3), /*min_region_size=*/8);
    CHECK(check_refinement(h).ok);
    const auto sizes = h.finest().region_sizes();
    if (h.finest().num_regions > 1) {
      for (std::size_t s : sizes) CHECK(s >= 8);
    }
  }
}

TEST_CASE("auto thresholds are strictly decreasing on textured images") {
  const auto img = random_image(9, 9, 5);
  const auto t = auto_thresholds(img, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0] > t[1]);
  CHECK(t[1] > t[2]);
  CHECK(t[2] >= 0.0);
}

TEST_CASE("auto thresholds reject degenerate weight distributions") {
  CHECK_THROWS_AS(auto_thresholds(Image(4, 4, 1, 0.5), 3), ValidationError);
}

TEST_CASE("hierarchy JSON round-trips") {
  const auto img = random_image(5, 5, 31);
  const auto h = hierarchical_segment(img, auto_thresholds(img, 2));
  const auto loaded = hierarchy_from_json(hierarchy_to_json(h));
  REQUIRE(loaded.num_levels() == h.num_levels());
  for (std::size_t k = 0; k < h.num_levels(); ++k) {
    CHECK(loaded.levels[k].labels == h.levels[k].labels);
    CHECK(loaded.levels[k].num_regions == h.levels[k].num_regions);
  }
  CHECK(loaded.parents == h.parents);
}

TEST_CASE("regions are 4-connected") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto img = random_image(8, 8, derive_seed(seed, 44));
    const auto part = flat_segment(img, 0.35, /*min_region_size=*/4);
    // Flood fill each region from its first pixel and make sure it covers it.
    const auto pixels = part.region_pixels();
    for (std::uint32_t r = 0; r < part.num_regions; ++r) {
      std::set<std::uint32_t> members(pixels[r].begin(), pixels[r].end());
      std::vector<std::uint32_t> stack{pixels[r].front()};
      std::set<std::uint32_t> seen{pixels[r].front()};
      while (!stack.empty()) {
        const std::uint32_t p = stack.back();
        stack.pop_back();
        const std::uint32_t row = p / 8, col = p % 8;
        const std::uint32_t neighbors[4] = {p >= 8 ? p - 8 : p, p + 8, col > 0 ? p - 1 : p,
                                            col + 1 < 8 ? p + 1 : p};
        (void)row;
        for (std::uint32_t q : neighbors) {
          if (q == p || q >= 64) continue;
          if (members.count(q) && !seen.count(q)) {
            seen.insert(q);
            stack.push_back(q);
          }
        }
      }
      CHECK(seen.size() == members.size());
    }
  }
}
