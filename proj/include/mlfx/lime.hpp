#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlfx/eval.hpp"
#include "mlfx/image.hpp"
#include "mlfx/network.hpp"
#include "mlfx/segmentation.hpp"

namespace mlfx {

// Surrogate explanation: one ridge-regression weight per segment.
struct LimeExplanation {
  std::vector<double> weights;
  double intercept = 0.0;
  std::size_t n_samples = 0;
  double kernel_width = 0.25;
  double ridge = 1.0;
  std::uint64_t seed = 0;
  std::size_t attempts = 1;  // sampling attempts consumed (jitter retries)
};

// Weighted ridge fit over binary masks. Sample weight is
// exp(-(1-s)^2 / kernel_width^2) with s the fraction of kept segments; the
// intercept is not penalized. Throws NumericError when the design is singular
// (e.g. all masks equal).
LimeExplanation lime_fit(const std::vector<std::vector<double>>& masks,
                         const std::vector<double>& responses, double kernel_width, double ridge);

// Samples masks uniformly over {0,1}^m, scores masked images with the
// predicted-class probability, and fits the surrogate. Singular designs are
// retried with fresh samples; after 3 attempts the error propagates.
LimeExplanation lime_explain(const LayeredNetwork& model, const Image& img, const Partition& part,
                             std::size_t n_samples, double kernel_width, double ridge,
                             std::uint64_t seed, FillMode fill = FillMode::Noise);

// Masked image: segments with mask 0 are replaced per fill.
Image apply_mask(const Image& img, const Partition& part, const std::vector<double>& mask,
                 FillMode fill, std::uint64_t seed);

}  // namespace mlfx
