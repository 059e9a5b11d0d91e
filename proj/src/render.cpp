#include "mlfx/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mlfx/common.hpp"
#include "mlfx/eval.hpp"

namespace mlfx {

namespace {

Image to_rgb(const Image& base) {
  if (base.channels == 3) return base;
  if (base.channels != 1) throw ValidationError("render: expected 1 or 3 channels");
  Image out(base.height, base.width, 3);
  for (std::size_t p = 0; p < base.positions(); ++p) {
    for (std::size_t ch = 0; ch < 3; ++ch) out.pixels[p * 3 + ch] = base.pixels[p];
  }
  return out;
}

void tint_region(Image& rgb, const Partition& part, std::uint32_t region, const Rgb& color) {
  constexpr double kAlpha = 0.55;
  for (std::size_t p = 0; p < part.labels.size(); ++p) {
    if (part.labels[p] != region) continue;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double& v = rgb.pixels[p * 3 + ch];
      v = (1.0 - kAlpha) * v + kAlpha * color[ch];
    }
  }
}

std::string svg_color(const Rgb& c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(c[0] * 255)),
                static_cast<int>(std::lround(c[1] * 255)),
                static_cast<int>(std::lround(c[2] * 255)));
  return buf;
}

}  // namespace

Rgb rank_color(std::size_t rank) {
  static const std::vector<Rgb> palette = {
      {0.90, 0.10, 0.10}, {1.00, 0.55, 0.00}, {0.95, 0.90, 0.10}, {0.10, 0.75, 0.10},
      {0.10, 0.80, 0.80}, {0.15, 0.30, 0.95}, {0.60, 0.15, 0.85}, {0.90, 0.35, 0.65},
  };
  const Rgb base = palette[rank % palette.size()];
  // Later cycles get dimmer so ranks stay distinguishable.
  const double fade = 1.0 / (1.0 + static_cast<double>(rank / palette.size()) * 0.5);
  return {base[0] * fade, base[1] * fade, base[2] * fade};
}

Image render_heatmap_overlay(const Image& base, const Partition& part, const Tensor& relevance,
                             std::size_t top_n) {
  if (part.labels.size() != base.positions()) {
    throw ValidationError("render: partition does not cover the image");
  }
  if (relevance.numel() != part.num_regions) {
    throw ValidationError("render: one relevance value per segment required");
  }
  Image rgb = to_rgb(base);
  const auto order = descending_order(relevance);
  const std::size_t n = std::min<std::size_t>(top_n, order.size());
  for (std::size_t rank = 0; rank < n; ++rank) {
    tint_region(rgb, part, order[rank], rank_color(rank));
  }
  return rgb;
}

Image render_pixel_heatmap(const Image& base, const Tensor& pixel_relevance) {
  if (pixel_relevance.numel() != base.positions() * base.channels) {
    throw ValidationError("render: pixel relevance length mismatch");
  }
  double mx = 0.0;
  for (double v : pixel_relevance.data()) mx = std::max(mx, std::abs(v));
  if (mx == 0.0) mx = 1.0;

  Image rgb(base.height, base.width, 3);
  for (std::size_t p = 0; p < base.positions(); ++p) {
    double rel = 0.0;
    for (std::size_t ch = 0; ch < base.channels; ++ch) {
      rel += pixel_relevance[p * base.channels + ch];
    }
    const double t = std::clamp(rel / mx, -1.0, 1.0);
    // Diverging blue-white-red.
    if (t >= 0.0) {
      rgb.pixels[p * 3 + 0] = 1.0;
      rgb.pixels[p * 3 + 1] = 1.0 - t;
      rgb.pixels[p * 3 + 2] = 1.0 - t;
    } else {
      rgb.pixels[p * 3 + 0] = 1.0 + t;
      rgb.pixels[p * 3 + 1] = 1.0 + t;
      rgb.pixels[p * 3 + 2] = 1.0;
    }
  }
  return rgb;
}

std::vector<Image> render_drilldown(const Image& base, const SegmentationHierarchy& h,
                                    const std::vector<std::vector<std::uint32_t>>& chains) {
  std::vector<Image> panels;
  panels.reserve(chains.size() * h.num_levels());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    if (chains[c].size() != h.num_levels()) {
      throw ValidationError("render_drilldown: chain length does not match hierarchy depth");
    }
    for (std::size_t k = 0; k < h.num_levels(); ++k) {
      Image rgb = to_rgb(base);
      tint_region(rgb, h.levels[k], chains[c][k], rank_color(c));
      panels.push_back(std::move(rgb));
    }
  }
  return panels;
}

std::vector<Image> render_latent_traversal(const VaeModel& vae, const MlfAutoencoder& ae,
                                           const RelevanceReport& report, std::size_t steps,
                                           double range_sigmas, std::size_t height,
                                           std::size_t width, std::size_t top_latents) {
  if (report.kind != MlfKind::Vae) {
    throw ValidationError("render_latent_traversal: report is not VAE-based");
  }
  if (steps == 0) throw ValidationError("render_latent_traversal: steps must be >= 1");
  if (height * width != vae.decoder.output_dim()) {
    throw ValidationError("render_latent_traversal: geometry does not match decoder output");
  }

  // Most relevant latents by |u|.
  Tensor abs_u({report.relevance().numel()});
  for (std::size_t i = 0; i < abs_u.numel(); ++i) abs_u[i] = std::abs(report.relevance()[i]);
  auto order = descending_order(abs_u);
  order.resize(std::min<std::size_t>(top_latents, order.size()));

  std::vector<Image> grid;
  grid.reserve(order.size() * steps);
  for (std::uint32_t latent : order) {
    const double center = vae.latent_mean.empty() ? 0.0 : vae.latent_mean[latent];
    const double sigma = vae.latent_std.empty() ? 1.0 : vae.latent_std[latent];
    for (std::size_t s = 0; s < steps; ++s) {
      Tensor h = ae.encoding;
      if (steps > 1) {
        const double t = static_cast<double>(s) / static_cast<double>(steps - 1);
        h[latent] = center + (2.0 * t - 1.0) * range_sigmas * sigma;
      }
      const Tensor decoded = decode(ae, h, /*add_residual=*/false);
      Image img(height, width, 1);
      img.pixels = decoded.data();
      grid.push_back(std::move(img));
    }
  }
  return grid;
}

void write_curves_svg(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series) {
  if (series.empty()) throw ValidationError("write_curves_svg: no series");
  const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;

  std::size_t n = 0;
  double ymin = 0.0, ymax = 1e-9;
  for (const CurveSeries& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (n < 2) n = 2;
  const double yspan = ymax - ymin;

  auto px = [&](std::size_t i) {
    return ml + static_cast<double>(i) / static_cast<double>(n - 1) * (w - ml - mr);
  };
  auto py = [&](double v) { return h - mb - (v - ymin) / yspan * (h - mt - mb); };

  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"15\" y=\"" << (mt + h - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << (mt + h - mb) / 2 << ")\">" << y_label << "</text>\n";

  // y ticks
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = ymin + yspan * tick / 4.0;
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\""
        << py(v) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    out << buf << "</text>\n";
  }

  std::size_t li = 0;
  for (const CurveSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << svg_color(s.color) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << px(i) << "," << py(s.values[i]) << " ";
    }
    out << "\"/>\n";
    const double ly = mt + 8 + 16.0 * static_cast<double>(li);
    out << "<line x1=\"" << w - mr - 120 << "\" y1=\"" << ly << "\" x2=\"" << w - mr - 100
        << "\" y2=\"" << ly << "\" stroke=\"" << svg_color(s.color) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << w - mr - 95 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
    ++li;
  }
  out << "</svg>\n";
  if (!out) throw IoError(path + ": write failed");
}

void write_legend_svg(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  const int row = 22;
  const int h = 20 + row * static_cast<int>(entries.size());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int y = 12 + row * static_cast<int>(i);
    out << "<rect x=\"10\" y=\"" << y << "\" width=\"16\" height=\"16\" fill=\""
        << svg_color(rank_color(i)) << "\"/>\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", entries[i].second);
    out << "<text x=\"34\" y=\"" << y + 13 << "\">" << entries[i].first << " = " << buf
        << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace mlfx
