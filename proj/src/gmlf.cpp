#include "mlfx/gmlf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlfx/common.hpp"

namespace mlfx {

CompositeModel stack_composite(const MlfAutoencoder& ae, const LayeredNetwork& classifier) {
  classifier.validate();
  ae.decoder.validate();
  if (ae.decoder.output_dim() != classifier.input_dim()) {
    throw ValidationError("stack_composite: decoder output dim " +
                          std::to_string(ae.decoder.output_dim()) +
                          " does not match classifier input dim " +
                          std::to_string(classifier.input_dim()));
  }

  CompositeModel composite;
  composite.decoder_layers = ae.decoder.layers.size();
  std::vector<DenseLayer> layers = ae.decoder.layers;
  // Residual junction: x = decoder(h) + r, realized as a bias on the
  // decoder's final layer. Relevance propagation sees it as bias only.
  for (std::size_t i = 0; i < ae.residual.numel(); ++i) {
    layers.back().biases[i] += ae.residual[i];
  }
  layers.insert(layers.end(), classifier.layers.begin(), classifier.layers.end());
  composite.net = LayeredNetwork(std::move(layers), classifier.readout);
  return composite;
}

RelevanceReport explain(const LayeredNetwork& classifier, const Tensor& x,
                        const MlfAutoencoder& ae, const LrpConfig& cfg,
                        std::optional<std::size_t> target) {
  cfg.validate();
  if (ae.input.data() != x.data()) {
    throw ValidationError("explain: autoencoder was not built for this input");
  }

  const CompositeModel composite = stack_composite(ae, classifier);
  const ActivationTrace fwd = forward(composite.net, ae.encoding);
  const Tensor direct_logits = forward(classifier, x).logits();

  RelevanceReport report;
  report.kind = ae.kind;
  report.config = cfg;
  for (std::size_t c = 0; c < direct_logits.numel(); ++c) {
    report.composite_fidelity =
        std::max(report.composite_fidelity, std::abs(fwd.logits()[c] - direct_logits[c]));
  }

  const RelevanceTrace rel = lrp_propagate(composite.net, fwd, cfg, target);
  report.predicted_class = target.value_or(argmax(fwd.logits()));
  report.predicted_logit = fwd.logits()[report.predicted_class];
  report.dropped_units = rel.dropped_units;
  report.dropped_relevance = rel.dropped_relevance;

  if (ae.kind == MlfKind::HierSeg) {
    // One vector per segmentation level, read at the decoder layer inputs:
    // the input of decoder layer k carries the level-(k+1) region values.
    const std::size_t levels = ae.hierarchy.num_levels();
    for (std::size_t k = 0; k < levels; ++k) {
      report.level_relevance.push_back(rel.input_rel[k]);
    }
  } else {
    report.level_relevance.push_back(rel.input_rel[0]);
  }
  return report;
}

Tensor aggregate_oracle(const LayeredNetwork& classifier, const Tensor& x, const Partition& part,
                        std::size_t channels, const LrpConfig& cfg,
                        std::optional<std::size_t> target) {
  if (part.labels.size() * channels != x.numel()) {
    throw ValidationError("aggregate_oracle: partition does not cover the input");
  }
  const RelevanceTrace rel = lrp_propagate(classifier, x, cfg, target);
  const Tensor& pixel_rel = rel.input_rel[0];
  Tensor out({static_cast<std::size_t>(part.num_regions)});
  for (std::size_t p = 0; p < part.labels.size(); ++p) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      out[part.labels[p]] += pixel_rel[p * channels + ch];
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> hierarchical_drilldown(const RelevanceReport& report,
                                                               const SegmentationHierarchy& h,
                                                               std::size_t branches) {
  if (report.kind != MlfKind::HierSeg && h.num_levels() > 1) {
    throw ValidationError("hierarchical_drilldown: report is not hierarchical");
  }
  if (report.level_relevance.size() != h.num_levels()) {
    throw ValidationError("hierarchical_drilldown: report does not match hierarchy");
  }
  const Tensor& top = report.level_relevance.front();
  if (branches > top.numel()) {
    throw ValidationError("hierarchical_drilldown: more branches requested than coarse segments");
  }

  // Top-n coarsest segments by relevance, ties by lower id.
  std::vector<std::uint32_t> roots(top.numel());
  std::iota(roots.begin(), roots.end(), 0);
  std::stable_sort(roots.begin(), roots.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return top[a] > top[b]; });
  roots.resize(branches);

  std::vector<std::vector<std::uint32_t>> chains;
  chains.reserve(branches);
  for (std::uint32_t root : roots) {
    std::vector<std::uint32_t> chain{root};
    for (std::size_t k = 0; k + 1 < h.num_levels(); ++k) {
      const Tensor& u = report.level_relevance[k + 1];
      const auto& parents = h.parents[k];
      std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
      for (std::uint32_t child = 0; child < parents.size(); ++child) {
        if (parents[child] != chain.back()) continue;
        if (best == std::numeric_limits<std::uint32_t>::max() || u[child] > u[best]) {
          best = child;
        }
      }
      if (best == std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("hierarchical_drilldown: region without children in hierarchy");
      }
      chain.push_back(best);
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

std::string report_to_json(const RelevanceReport& report) {
  nlohmann::json j;
  j["format"] = "mlfx-relevance";
  j["version"] = 1;
  j["kind"] = to_string(report.kind);
  j["predicted_class"] = report.predicted_class;
  j["predicted_logit"] = report.predicted_logit;
  j["alpha"] = report.config.alpha;
  j["beta"] = report.config.beta;
  j["epsilon"] = report.config.epsilon;
  j["composite_fidelity"] = report.composite_fidelity;
  j["dropped_units"] = report.dropped_units;
  j["dropped_relevance"] = report.dropped_relevance;
  j["levels"] = nlohmann::json::array();
  for (const Tensor& u : report.level_relevance) {
    j["levels"].push_back(u.data());
  }
  return j.dump(2);
}

RelevanceReport report_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "mlfx-relevance") {
    throw IoError("not a relevance report");
  }
  RelevanceReport report;
  report.kind = mlf_kind_from_string(j.at("kind").get<std::string>());
  report.predicted_class = j.at("predicted_class").get<std::size_t>();
  report.predicted_logit = j.at("predicted_logit").get<double>();
  report.config.alpha = j.at("alpha").get<double>();
  report.config.beta = j.at("beta").get<double>();
  report.config.epsilon = j.at("epsilon").get<double>();
  report.composite_fidelity = j.value("composite_fidelity", 0.0);
  report.dropped_units = j.value("dropped_units", std::size_t{0});
  report.dropped_relevance = j.value("dropped_relevance", 0.0);
  for (const auto& lv : j.at("levels")) {
    report.level_relevance.push_back(Tensor::from_vector(lv.get<std::vector<double>>()));
  }
  if (report.level_relevance.empty()) throw IoError("relevance report has no levels");
  return report;
}

void save_report(const RelevanceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << report_to_json(report) << "\n";
}

RelevanceReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

}  // namespace mlfx
