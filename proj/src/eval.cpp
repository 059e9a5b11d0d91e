#include "mlfx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "mlfx/common.hpp"
#include "mlfx/rng.hpp"

namespace mlfx {

FillMode fill_from_string(const std::string& s) {
  if (s == "noise") return FillMode::Noise;
  if (s == "zeros") return FillMode::Zeros;
  if (s == "mean") return FillMode::Mean;
  throw ValidationError("unknown fill mode: " + s);
}

std::vector<std::uint32_t> descending_order(const Tensor& values) {
  std::vector<std::uint32_t> ids(values.numel());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] > values[b]; });
  return ids;
}

namespace {

void dfs_emit(const SegmentationHierarchy& h, const RelevanceReport& report, std::size_t level,
              std::uint32_t region, std::vector<std::uint32_t>& out) {
  if (level + 1 == h.num_levels()) {
    out.push_back(region);
    return;
  }
  const Tensor& u = report.level_relevance[level + 1];
  std::vector<std::uint32_t> children;
  for (std::uint32_t c = 0; c < h.parents[level].size(); ++c) {
    if (h.parents[level][c] == region) children.push_back(c);
  }
  std::stable_sort(children.begin(), children.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return u[a] > u[b]; });
  for (std::uint32_t c : children) dfs_emit(h, report, level + 1, c, out);
}

}  // namespace

std::vector<std::uint32_t> flip_order_hierarchical(const SegmentationHierarchy& h,
                                                   const RelevanceReport& report) {
  if (report.level_relevance.size() != h.num_levels()) {
    throw ValidationError("flip_order_hierarchical: report does not match hierarchy");
  }
  for (std::size_t k = 0; k < h.num_levels(); ++k) {
    if (report.level_relevance[k].numel() != h.levels[k].num_regions) {
      throw ValidationError("flip_order_hierarchical: relevance length mismatch at level " +
                            std::to_string(k));
    }
  }
  std::vector<std::uint32_t> out;
  out.reserve(h.finest().num_regions);
  for (std::uint32_t root : descending_order(report.level_relevance.front())) {
    dfs_emit(h, report, 0, root, out);
  }
  return out;
}

Image perturb_segments(const Image& img, const Partition& part,
                       const std::vector<std::uint32_t>& ordering, std::size_t k, FillMode fill,
                       std::uint64_t seed) {
  if (part.labels.size() != img.positions()) {
    throw ValidationError("perturb_segments: partition does not cover the image");
  }
  if (k > ordering.size()) {
    throw ValidationError("perturb_segments: k exceeds the number of segments");
  }

  Image out = img;
  const auto pixels_of = part.region_pixels();
  Rng rng(seed);
  for (std::size_t j = 0; j < k; ++j) {
    const std::uint32_t seg = ordering[j];
    if (seg >= part.num_regions) throw ValidationError("perturb_segments: segment id out of range");
    std::vector<double> mean(img.channels, 0.0);
    if (fill == FillMode::Mean) {
      for (std::uint32_t p : pixels_of[seg]) {
        for (std::size_t ch = 0; ch < img.channels; ++ch) {
          mean[ch] += img.pixels[p * img.channels + ch];
        }
      }
      for (double& m : mean) m /= static_cast<double>(pixels_of[seg].size());
    }
    for (std::uint32_t p : pixels_of[seg]) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        double& v = out.pixels[p * img.channels + ch];
        switch (fill) {
          case FillMode::Noise: v = rng.uniform(); break;
          case FillMode::Zeros: v = 0.0; break;
          case FillMode::Mean: v = mean[ch]; break;
        }
      }
    }
  }
  return out;
}

Tensor perturb_latents(const MlfAutoencoder& ae, const Tensor& h,
                       const std::vector<std::uint32_t>& ordering, std::size_t k,
                       std::uint64_t seed) {
  if (ae.kind != MlfKind::Vae) {
    throw ValidationError("perturb_latents: autoencoder is not a VAE");
  }
  if (k > ordering.size()) {
    throw ValidationError("perturb_latents: k exceeds the number of latents");
  }
  if (k == 0) return ae.input;

  Tensor hp = h;
  Rng rng(seed);
  for (std::size_t j = 0; j < k; ++j) {
    if (ordering[j] >= hp.numel()) throw ValidationError("perturb_latents: latent id out of range");
    hp[ordering[j]] = rng.normal();
  }
  return decode(ae, hp, /*add_residual=*/true);
}

MorfResult morf_curve(const LayeredNetwork& model, const Tensor& original,
                      const std::function<Tensor(std::size_t)>& perturb, std::size_t L,
                      std::size_t n_units) {
  if (L > n_units) {
    throw ValidationError("morf_curve: more steps than perturbable units");
  }
  const Tensor logits = forward(model, original).logits();
  const std::size_t cls = argmax(logits);

  auto score = [&](const Tensor& input) { return softmax(forward(model, input).logits())[cls]; };

  MorfResult result;
  result.steps = L;
  result.scores.reserve(L + 1);
  result.scores.push_back(score(original));
  for (std::size_t k = 1; k <= L; ++k) {
    result.scores.push_back(score(perturb(k)));
  }
  result.aopc_value = aopc(result.scores);
  return result;
}

double aopc(const std::vector<double>& scores) {
  if (scores.empty()) throw ValidationError("aopc: empty score list");
  double acc = 0.0;
  for (double s : scores) acc += scores.front() - s;
  return acc / static_cast<double>(scores.size());
}

MeanCurve aopc_mean(const std::vector<MorfResult>& results) {
  if (results.empty()) throw ValidationError("aopc_mean: no results");
  const std::size_t L = results.front().steps;
  for (const MorfResult& r : results) {
    if (r.steps != L || r.scores.size() != L + 1) {
      throw ValidationError("aopc_mean: mixed step counts");
    }
  }
  MeanCurve mean;
  mean.curve.assign(L + 1, 0.0);
  mean.aopc_series.assign(L + 1, 0.0);
  for (const MorfResult& r : results) {
    for (std::size_t k = 0; k <= L; ++k) mean.curve[k] += r.scores[k];
    double drop = 0.0;
    for (std::size_t k = 0; k <= L; ++k) {
      drop += r.scores.front() - r.scores[k];
      mean.aopc_series[k] += drop / static_cast<double>(k + 1);
    }
  }
  const double inv = 1.0 / static_cast<double>(results.size());
  for (double& v : mean.curve) v *= inv;
  for (double& v : mean.aopc_series) v *= inv;
  mean.aopc_value = mean.aopc_series.back();
  return mean;
}

namespace {

MorfResult mean_of_trials(const std::vector<MorfResult>& trials, std::uint64_t seed) {
  const MeanCurve mean = aopc_mean(trials);
  MorfResult out;
  out.scores = mean.curve;
  out.steps = trials.front().steps;
  out.aopc_value = mean.aopc_value;
  out.seed = seed;
  return out;
}

}  // namespace

MorfResult random_baseline_segments(const LayeredNetwork& model, const Image& img,
                                    const Partition& part, std::size_t L, std::size_t trials,
                                    std::uint64_t seed, FillMode fill) {
  if (trials < 1) throw ValidationError("random_baseline: trials must be >= 1");
  std::vector<MorfResult> runs;
  runs.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::uint32_t> ordering(part.num_regions);
    std::iota(ordering.begin(), ordering.end(), 0);
    Rng order_rng(derive_seed(seed, t));
    order_rng.shuffle(ordering);
    const std::uint64_t fill_seed = derive_seed(seed, t, 0xF1);
    runs.push_back(morf_curve(
        model, img.to_tensor(),
        [&](std::size_t k) {
          return perturb_segments(img, part, ordering, k, fill, fill_seed).to_tensor();
        },
        L, part.num_regions));
  }
  return mean_of_trials(runs, seed);
}

MorfResult random_baseline_latents(const LayeredNetwork& model, const MlfAutoencoder& ae,
                                   std::size_t L, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("random_baseline: trials must be >= 1");
  std::vector<MorfResult> runs;
  runs.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::uint32_t> ordering(ae.mlf_count());
    std::iota(ordering.begin(), ordering.end(), 0);
    Rng order_rng(derive_seed(seed, t));
    order_rng.shuffle(ordering);
    const std::uint64_t noise_seed = derive_seed(seed, t, 0xF2);
    runs.push_back(morf_curve(
        model, ae.input,
        [&](std::size_t k) { return perturb_latents(ae, ae.encoding, ordering, k, noise_seed); },
        L, ae.mlf_count()));
  }
  return mean_of_trials(runs, seed);
}

double paired_one_sided_p(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("paired test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("paired test: need at least two pairs");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var == 0.0) return mean > 0.0 ? 0.0 : 1.0;
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::cdf(boost::math::complement(dist, t));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("pearson: bad input lengths");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) throw NumericError("pearson: zero variance input");
  return num / std::sqrt(va * vb);
}

}  // namespace mlfx
