#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mlfx/autoencoder.hpp"
#include "mlfx/gmlf.hpp"
#include "mlfx/image.hpp"
#include "mlfx/network.hpp"
#include "mlfx/segmentation.hpp"

namespace mlfx {

enum class FillMode { Noise, Zeros, Mean };

FillMode fill_from_string(const std::string& s);

// Finest-level segment ids ordered for region flipping: depth-first from the
// coarsest level, visiting children in descending relevance (ties: lower id).
// The result is a permutation of the finest-level ids.
std::vector<std::uint32_t> flip_order_hierarchical(const SegmentationHierarchy& h,
                                                   const RelevanceReport& report);

// Ids sorted by descending value, ties by lower id.
std::vector<std::uint32_t> descending_order(const Tensor& values);

// Replaces the pixels of the first k segments of `ordering`. Noise fill draws
// uniform values over [0, 1]; Mean uses the per-segment per-channel mean.
// Deterministic given the seed, and the noise laid into segment j does not
// depend on k, so successive steps extend each other.
Image perturb_segments(const Image& img, const Partition& part,
                       const std::vector<std::uint32_t>& ordering, std::size_t k, FillMode fill,
                       std::uint64_t seed);

// Replaces the first k latents of `ordering` with standard-normal prior draws
// and returns the classifier input decoder(h') + residual. k == 0 returns the
// original input exactly.
Tensor perturb_latents(const MlfAutoencoder& ae, const Tensor& h,
                       const std::vector<std::uint32_t>& ordering, std::size_t k,
                       std::uint64_t seed);

struct MorfResult {
  std::vector<double> scores;  // f(x^(0)) .. f(x^(L)), predicted-class probability
  std::size_t steps = 0;       // L
  std::vector<std::uint32_t> ordering;
  double aopc_value = 0.0;
  std::uint64_t seed = 0;
};

// Score of the class predicted on the original input, as softmax probability,
// across L perturbation steps. perturb(k) must return the k-step input;
// perturb(0) is never called (the original is scored directly).
MorfResult morf_curve(const LayeredNetwork& model, const Tensor& original,
                      const std::function<Tensor(std::size_t)>& perturb, std::size_t L,
                      std::size_t n_units);

// (1/(L+1)) * sum_k (scores[0] - scores[k]).
double aopc(const std::vector<double>& scores);

struct MeanCurve {
  std::vector<double> curve;        // pointwise mean scores
  std::vector<double> aopc_series;  // mean AOPC truncated at each step
  double aopc_value = 0.0;
};

// Pointwise mean over results with equal L.
MeanCurve aopc_mean(const std::vector<MorfResult>& results);

// Mean MoRF curve over `trials` random segment orderings.
MorfResult random_baseline_segments(const LayeredNetwork& model, const Image& img,
                                    const Partition& part, std::size_t L, std::size_t trials,
                                    std::uint64_t seed, FillMode fill = FillMode::Noise);

// Same for VAE latents.
MorfResult random_baseline_latents(const LayeredNetwork& model, const MlfAutoencoder& ae,
                                   std::size_t L, std::size_t trials, std::uint64_t seed);

// Paired one-sided t-test, H1: mean(a - b) > 0. Returns the p-value.
double paired_one_sided_p(const std::vector<double>& a, const std::vector<double>& b);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mlfx
