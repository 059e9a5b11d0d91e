#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlfx/autoencoder.hpp"
#include "mlfx/lrp.hpp"
#include "mlfx/network.hpp"
#include "mlfx/segmentation.hpp"
#include "mlfx/tensor.hpp"

namespace mlfx {

// Decoder stacked onto the classifier with the residual injected as a bias at
// the junction; maps an MLF encoding straight to classifier outputs.
struct CompositeModel {
  LayeredNetwork net;
  std::size_t decoder_layers = 0;  // leading layers that came from the decoder
};

CompositeModel stack_composite(const MlfAutoencoder& ae, const LayeredNetwork& classifier);

// Per-MLF relevances for one input. For the hierarchical kind there is one
// vector per segmentation level (coarse -> fine); otherwise a single vector.
struct RelevanceReport {
  MlfKind kind = MlfKind::FlatSeg;
  std::vector<Tensor> level_relevance;
  std::size_t predicted_class = 0;
  double predicted_logit = 0.0;
  LrpConfig config;
  // Diagnostics.
  double composite_fidelity = 0.0;  // max |composite(h) - classifier(x)| over logits
  std::size_t dropped_units = 0;
  double dropped_relevance = 0.0;

  const Tensor& relevance() const { return level_relevance.front(); }
};

// Runs relevance propagation on the composite from the classifier logits down
// to the MLF encoding. The autoencoder must have been built for exactly this
// input.
RelevanceReport explain(const LayeredNetwork& classifier, const Tensor& x,
                        const MlfAutoencoder& ae, const LrpConfig& cfg,
                        std::optional<std::size_t> target = std::nullopt);

// Independent check for the flat path: pixel-level relevance propagation on
// the classifier alone, summed per segment.
Tensor aggregate_oracle(const LayeredNetwork& classifier, const Tensor& x, const Partition& part,
                        std::size_t channels, const LrpConfig& cfg,
                        std::optional<std::size_t> target = std::nullopt);

// Top-branches drill-down chains: for each of the top-n coarsest segments,
// follow the most relevant child at every finer level (ties: lower id).
// chains[i][k] is the selected region id at level k.
std::vector<std::vector<std::uint32_t>> hierarchical_drilldown(const RelevanceReport& report,
                                                               const SegmentationHierarchy& h,
                                                               std::size_t branches);

// JSON report emitted by the `explain` CLI.
std::string report_to_json(const RelevanceReport& report);
RelevanceReport report_from_json(const std::string& text);
void save_report(const RelevanceReport& report, const std::string& path);
RelevanceReport load_report(const std::string& path);

}  // namespace mlfx
