#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mlfx/autoencoder.hpp"
#include "mlfx/gmlf.hpp"
#include "mlfx/image.hpp"
#include "mlfx/segmentation.hpp"
#include "mlfx/tensor.hpp"
#include "mlfx/vae.hpp"

namespace mlfx {

using Rgb = std::array<double, 3>;

// Color assigned to relevance rank r (0 = most relevant).
Rgb rank_color(std::size_t rank);

// Base image with the top_n most relevant segments tinted by rank
// (ties broken by lower region id). Returns a 3-channel image.
Image render_heatmap_overlay(const Image& base, const Partition& part, const Tensor& relevance,
                             std::size_t top_n);

// Continuous diverging colormap over per-pixel relevance.
Image render_pixel_heatmap(const Image& base, const Tensor& pixel_relevance);

// One overlay per (chain, level), level-major within each chain:
// result[c * K + k] highlights chains[c][k] on the level-k partition.
std::vector<Image> render_drilldown(const Image& base, const SegmentationHierarchy& h,
                                    const std::vector<std::vector<std::uint32_t>>& chains);

// Decoded images sweeping each of the `top_latents` most relevant latents
// (by |u|) across mean +- range_sigmas * std while fixing the others to the
// original encoding. The residual is not added: these are pure decoder
// outputs. steps == 1 decodes the original encoding. Row-major result:
// result[l * steps + s].
std::vector<Image> render_latent_traversal(const VaeModel& vae, const MlfAutoencoder& ae,
                                           const RelevanceReport& report, std::size_t steps,
                                           double range_sigmas, std::size_t height,
                                           std::size_t width, std::size_t top_latents = 2);

// Simple SVG line plot.
struct CurveSeries {
  std::string label;
  std::vector<double> values;
  Rgb color{0.8, 0.2, 0.2};
};

void write_curves_svg(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series);

// Legend mapping tint colors to relevance values.
void write_legend_svg(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& entries);

}  // namespace mlfx
