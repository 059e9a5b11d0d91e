#include "mlfx/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlfx/common.hpp"

namespace mlfx {

namespace {

using json = nlohmann::json;

struct UnionFind {
  std::vector<std::uint32_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::uint32_t>(i);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);  // keep the smaller index as root
    parent[a] = b;
  }
};

void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
}

// Dense ids ordered by first pixel occurrence.
Partition canonicalize(UnionFind& uf, std::size_t n) {
  Partition part;
  part.labels.resize(n);
  std::vector<std::uint32_t> id_of_root(n, std::numeric_limits<std::uint32_t>::max());
  std::uint32_t next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t root = uf.find(static_cast<std::uint32_t>(p));
    if (id_of_root[root] == std::numeric_limits<std::uint32_t>::max()) {
      id_of_root[root] = next++;
    }
    part.labels[p] = id_of_root[root];
  }
  part.num_regions = next;
  return part;
}

// Min boundary weight between adjacent regions of `part`.
std::map<std::pair<std::uint32_t, std::uint32_t>, double> region_adjacency(
    const Partition& part, const std::vector<Edge>& pixel_edges) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> adj;
  for (const Edge& e : pixel_edges) {
    std::uint32_t ra = part.labels[e.a];
    std::uint32_t rb = part.labels[e.b];
    if (ra == rb) continue;
    if (ra > rb) std::swap(ra, rb);
    auto [it, inserted] = adj.try_emplace({ra, rb}, e.weight);
    if (!inserted && e.weight < it->second) it->second = e.weight;
  }
  return adj;
}

// Merges regions smaller than min_size into the neighbor joined by the
// cheapest boundary edge. Smallest region first, ties by lower id.
Partition merge_small_regions(const Partition& part, const std::vector<Edge>& pixel_edges,
                              std::size_t min_size) {
  auto adj = region_adjacency(part, pixel_edges);
  UnionFind uf(part.num_regions);
  std::vector<std::size_t> sizes = part.region_sizes();

  auto set_size = [&](std::uint32_t r) { return sizes[uf.find(r)]; };

  for (;;) {
    std::uint32_t victim = std::numeric_limits<std::uint32_t>::max();
    std::size_t victim_size = min_size;
    for (std::uint32_t r = 0; r < part.num_regions; ++r) {
      if (uf.find(r) != r) continue;
      if (sizes[r] < victim_size) {
        victim_size = sizes[r];
        victim = r;
      }
    }
    if (victim == std::numeric_limits<std::uint32_t>::max()) break;

    // Cheapest edge out of the victim's merged set; ties by lower neighbor id.
    double best_w = std::numeric_limits<double>::infinity();
    std::uint32_t best_neighbor = std::numeric_limits<std::uint32_t>::max();
    for (const auto& [pair, w] : adj) {
      const std::uint32_t ra = uf.find(pair.first);
      const std::uint32_t rb = uf.find(pair.second);
      if (ra == rb) continue;
      std::uint32_t other;
      if (ra == victim) {
        other = rb;
      } else if (rb == victim) {
        other = ra;
      } else {
        continue;
      }
      if (w < best_w || (w == best_w && other < best_neighbor)) {
        best_w = w;
        best_neighbor = other;
      }
    }
    if (best_neighbor == std::numeric_limits<std::uint32_t>::max()) break;  // single region left

    const std::size_t merged = set_size(victim) + set_size(best_neighbor);
    uf.unite(victim, best_neighbor);
    sizes[uf.find(victim)] = merged;
  }

  UnionFind pixel_uf(part.labels.size());
  std::vector<std::uint32_t> first_pixel(part.num_regions, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t p = 0; p < part.labels.size(); ++p) {
    const std::uint32_t r = part.labels[p];
    if (first_pixel[r] == std::numeric_limits<std::uint32_t>::max()) {
      first_pixel[r] = p;
    } else {
      pixel_uf.unite(p, first_pixel[r]);
    }
  }
  for (std::uint32_t r = 0; r < part.num_regions; ++r) {
    const std::uint32_t root = uf.find(r);
    if (root != r) pixel_uf.unite(first_pixel[r], first_pixel[root]);
  }
  return canonicalize(pixel_uf, part.labels.size());
}

// Components of the fine-region graph with edges < lambda, mapped back to
// pixel labels.
Partition coarsen(const Partition& fine,
                  const std::map<std::pair<std::uint32_t, std::uint32_t>, double>& adj,
                  double lambda) {
  UnionFind uf(fine.num_regions);
  std::vector<Edge> region_edges;
  region_edges.reserve(adj.size());
  for (const auto& [pair, w] : adj) {
    region_edges.push_back({w, pair.first, pair.second});
  }
  sort_edges(region_edges);
  for (const Edge& e : region_edges) {
    if (e.weight < lambda) uf.unite(e.a, e.b);
  }

  // Relabel over pixels so ids follow first pixel occurrence.
  UnionFind pixel_uf(fine.labels.size());
  std::vector<std::uint32_t> first_pixel(fine.num_regions, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t p = 0; p < fine.labels.size(); ++p) {
    const std::uint32_t r = fine.labels[p];
    if (first_pixel[r] == std::numeric_limits<std::uint32_t>::max()) {
      first_pixel[r] = p;
    } else {
      pixel_uf.unite(p, first_pixel[r]);
    }
  }
  for (std::uint32_t r = 0; r < fine.num_regions; ++r) {
    const std::uint32_t root = uf.find(r);
    if (root != r) pixel_uf.unite(first_pixel[r], first_pixel[root]);
  }
  return canonicalize(pixel_uf, fine.labels.size());
}

}  // namespace

std::vector<Edge> build_edge_graph(const Image& img) {
  if (img.height == 0 || img.width == 0 || img.pixels.empty()) {
    throw ValidationError("build_edge_graph: empty image");
  }
  std::vector<Edge> edges;
  edges.reserve(2 * img.positions());
  auto color_distance = [&](std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (std::size_t ch = 0; ch < img.channels; ++ch) {
      const double d = img.pixels[p * img.channels + ch] - img.pixels[q * img.channels + ch];
      acc += d * d;
    }
    return std::sqrt(acc);
  };
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const std::size_t p = r * img.width + c;
      if (c + 1 < img.width) {
        edges.push_back({color_distance(p, p + 1), static_cast<std::uint32_t>(p),
                         static_cast<std::uint32_t>(p + 1)});
      }
      if (r + 1 < img.height) {
        edges.push_back({color_distance(p, p + img.width), static_cast<std::uint32_t>(p),
                         static_cast<std::uint32_t>(p + img.width)});
      }
    }
  }
  return edges;
}

std::vector<std::vector<std::uint32_t>> Partition::region_pixels() const {
  std::vector<std::vector<std::uint32_t>> out(num_regions);
  for (std::uint32_t p = 0; p < labels.size(); ++p) out[labels[p]].push_back(p);
  return out;
}

std::vector<std::size_t> Partition::region_sizes() const {
  std::vector<std::size_t> sizes(num_regions, 0);
  for (std::uint32_t l : labels) ++sizes[l];
  return sizes;
}

Partition components_below(std::vector<Edge> edges, std::size_t n_positions, double lambda) {
  sort_edges(edges);
  UnionFind uf(n_positions);
  for (const Edge& e : edges) {
    if (e.weight < lambda) uf.unite(e.a, e.b);
  }
  return canonicalize(uf, n_positions);
}

SegmentationHierarchy hierarchical_segment(const Image& img, const std::vector<double>& thresholds,
                                           std::size_t min_region_size) {
  if (thresholds.empty()) throw ValidationError("hierarchical_segment: no thresholds");
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (thresholds[k] < 0.0) throw ValidationError("hierarchical_segment: thresholds must be >= 0");
    if (k > 0 && !(thresholds[k] < thresholds[k - 1])) {
      throw ValidationError("hierarchical_segment: thresholds must be strictly decreasing");
    }
  }

  std::vector<Edge> edges = build_edge_graph(img);
  sort_edges(edges);

  const std::size_t levels = thresholds.size();
  Partition fine = components_below(edges, img.positions(), thresholds.back());
  if (min_region_size > 0) {
    fine = merge_small_regions(fine, edges, min_region_size);
  }

  SegmentationHierarchy h;
  h.height = img.height;
  h.width = img.width;
  h.levels.resize(levels);
  h.levels[levels - 1] = fine;

  const auto adj = region_adjacency(fine, edges);
  for (std::size_t k = 0; k + 1 < levels; ++k) {
    h.levels[k] = coarsen(fine, adj, thresholds[k]);
  }

  h.parents.resize(levels >= 1 ? levels - 1 : 0);
  for (std::size_t k = 0; k + 1 < levels; ++k) {
    auto& pm = h.parents[k];
    pm.assign(h.levels[k + 1].num_regions, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t p = 0; p < h.levels[k].labels.size(); ++p) {
      pm[h.levels[k + 1].labels[p]] = h.levels[k].labels[p];
    }
  }
  return h;
}

Partition flat_segment(const Image& img, double threshold, std::size_t min_region_size) {
  return hierarchical_segment(img, {threshold}, min_region_size).levels.front();
}

std::vector<double> auto_thresholds(const Image& img, std::size_t levels) {
  if (levels == 0) throw ValidationError("auto_thresholds: need at least one level");
  std::vector<Edge> edges = build_edge_graph(img);
  sort_edges(edges);

  // Kruskal; MST weights end up sorted ascending.
  UnionFind uf(img.positions());
  std::vector<double> mst;
  mst.reserve(img.positions());
  for (const Edge& e : edges) {
    if (uf.find(e.a) != uf.find(e.b)) {
      uf.unite(e.a, e.b);
      mst.push_back(e.weight);
    }
  }
  if (mst.empty()) throw ValidationError("auto_thresholds: single-pixel image has no edges");

  std::vector<double> distinct = mst;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> out;
  out.reserve(levels);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < levels; ++k) {
    const double q = levels == 1 ? 0.9 : 0.9 - 0.6 * static_cast<double>(k) / static_cast<double>(levels - 1);
    const std::size_t rank =
        static_cast<std::size_t>(std::llround(q * static_cast<double>(mst.size() - 1)));
    double cand = mst[rank];
    // Drop to the largest distinct weight strictly below the previous level.
    if (cand >= prev) {
      auto below = std::lower_bound(distinct.begin(), distinct.end(), prev);
      if (below == distinct.begin()) {
        throw ValidationError("auto_thresholds: edge-weight distribution too degenerate for " +
                              std::to_string(levels) + " strictly decreasing thresholds");
      }
      cand = *std::prev(below);
    }
    out.push_back(cand);
    prev = cand;
  }
  return out;
}

RefinementCheck check_refinement(const SegmentationHierarchy& h) {
  for (std::size_t k = 0; k + 1 < h.levels.size(); ++k) {
    const Partition& coarse = h.levels[k];
    const Partition& fine = h.levels[k + 1];
    std::vector<std::uint32_t> seen(fine.num_regions, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t p = 0; p < fine.labels.size(); ++p) {
      const std::uint32_t child = fine.labels[p];
      if (seen[child] == std::numeric_limits<std::uint32_t>::max()) {
        seen[child] = coarse.labels[p];
      } else if (seen[child] != coarse.labels[p]) {
        return {false, k + 1, child};
      }
    }
  }
  return {};
}

std::string hierarchy_to_json(const SegmentationHierarchy& h) {
  json j;
  j["format"] = "mlfx-hierarchy";
  j["version"] = 1;
  j["height"] = h.height;
  j["width"] = h.width;
  j["levels"] = json::array();
  for (const Partition& level : h.levels) {
    j["levels"].push_back({{"num_regions", level.num_regions}, {"labels", level.labels}});
  }
  j["parents"] = h.parents;
  return j.dump();
}

SegmentationHierarchy hierarchy_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "mlfx-hierarchy") {
    throw IoError("not a hierarchy file");
  }
  if (j.value("version", 0) != 1) throw IoError("unsupported hierarchy version");
  SegmentationHierarchy h;
  h.height = j.at("height").get<std::size_t>();
  h.width = j.at("width").get<std::size_t>();
  for (const auto& lv : j.at("levels")) {
    Partition p;
    p.num_regions = lv.at("num_regions").get<std::uint32_t>();
    p.labels = lv.at("labels").get<std::vector<std::uint32_t>>();
    if (p.labels.size() != h.height * h.width) {
      throw IoError("hierarchy labels do not match dimensions");
    }
    h.levels.push_back(std::move(p));
  }
  h.parents = j.at("parents").get<std::vector<std::vector<std::uint32_t>>>();
  if (h.levels.empty() || h.parents.size() + 1 != h.levels.size()) {
    throw IoError("hierarchy parent maps do not match levels");
  }
  return h;
}

SegmentationHierarchy load_hierarchy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return hierarchy_from_json(ss.str());
}

void save_hierarchy(const SegmentationHierarchy& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << hierarchy_to_json(h) << "\n";
}

}  // namespace mlfx
