#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlfx/image.hpp"

namespace mlfx {

// Undirected pixel-graph edge between positions a < b.
struct Edge {
  double weight = 0.0;
  std::uint32_t a = 0;
  std::uint32_t b = 0;
};

// 4-neighborhood graph; edge weight is the Euclidean distance between the
// color vectors of the two pixels.
std::vector<Edge> build_edge_graph(const Image& img);

// Pixel partition with dense region ids. Every region is 4-connected.
struct Partition {
  std::vector<std::uint32_t> labels;  // one per pixel position
  std::uint32_t num_regions = 0;

  std::vector<std::vector<std::uint32_t>> region_pixels() const;
  std::vector<std::size_t> region_sizes() const;
};

// K nested partitions ordered coarse -> fine with child -> parent maps
// between adjacent levels (parents[k] maps level k+1 regions into level k).
struct SegmentationHierarchy {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Partition> levels;
  std::vector<std::vector<std::uint32_t>> parents;

  std::size_t num_levels() const { return levels.size(); }
  const Partition& finest() const { return levels.back(); }
  const Partition& coarsest() const { return levels.front(); }
};

// Connected components over edges with weight < lambda. Edges are re-sorted
// by (weight, a, b) internally, so the result does not depend on input order.
Partition components_below(std::vector<Edge> edges, std::size_t n_positions, double lambda);

// Single-linkage hierarchy: level k holds the components of the subgraph with
// edge weights < thresholds[k]. Thresholds must be strictly decreasing and
// nonnegative. When min_region_size > 0, regions smaller than it are merged
// into their cheapest neighbor at the finest level before the coarser levels
// are derived, which keeps the refinement invariant intact.
SegmentationHierarchy hierarchical_segment(const Image& img, const std::vector<double>& thresholds,
                                           std::size_t min_region_size = 0);

Partition flat_segment(const Image& img, double threshold, std::size_t min_region_size = 0);

// Image-adaptive thresholds from quantiles of the MST edge-weight
// distribution (0.9 down to 0.3 across levels). Throws ValidationError when
// the distribution is too degenerate to yield strictly decreasing values.
std::vector<double> auto_thresholds(const Image& img, std::size_t levels);

struct RefinementCheck {
  bool ok = true;
  std::size_t level = 0;        // finer level of the first violation
  std::uint32_t child = 0;      // violating child region id
};

// True iff every region at each finer level lies wholly inside one region of
// the coarser level above it.
RefinementCheck check_refinement(const SegmentationHierarchy& h);

// JSON round trip used by the `segment` CLI output.
std::string hierarchy_to_json(const SegmentationHierarchy& h);
SegmentationHierarchy hierarchy_from_json(const std::string& text);
SegmentationHierarchy load_hierarchy(const std::string& path);
void save_hierarchy(const SegmentationHierarchy& h, const std::string& path);

}  // namespace mlfx
