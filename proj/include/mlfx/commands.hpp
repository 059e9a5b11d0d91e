#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlfx/manifest.hpp"

namespace mlfx {

// Command configs are plain structs with JSON round-trips so that a run
// manifest can replay the exact invocation.

struct SynthDataCmd {
  std::string out_dir;
  std::size_t count = 300;
  std::size_t size = 16;
  double noise = 0.05;
  std::uint64_t seed = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SynthDataCmd, out_dir, count, size, noise, seed)

struct TrainClassifierCmd {
  std::string data_dir;
  std::string out_model;
  std::vector<std::size_t> hidden = {128, 64};
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  double holdout = 0.2;
  std::string optimizer = "sgd-momentum";
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrainClassifierCmd, data_dir, out_model, hidden, learning_rate,
                                   batch_size, epochs, seed, holdout, optimizer)

struct TrainVaeCmd {
  std::string data_dir;
  std::string out_model;
  std::size_t latents = 10;
  double beta = 4.0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrainVaeCmd, data_dir, out_model, latents, beta, learning_rate,
                                   batch_size, epochs, seed)

struct SegmentCmd {
  std::string image;
  std::string out_prefix;
  std::size_t levels = 3;
  std::vector<double> thresholds;  // used when auto_quantiles is off
  bool auto_quantiles = true;
  std::size_t min_region_size = 16;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SegmentCmd, image, out_prefix, levels, thresholds,
                                   auto_quantiles, min_region_size)

struct ExplainCmd {
  std::string kind = "flat";  // flat | hier | vae
  std::string model;
  std::string image;
  std::string hierarchy;  // segmentation kinds
  std::string vae;        // vae kind
  std::string out_prefix;
  double alpha = 1.0;
  double beta = 0.0;
  double epsilon = 1e-9;
  int target_class = -1;  // -1 -> predicted class
  std::size_t top = 2;
  std::size_t traversal_steps = 7;
  double traversal_sigmas = 3.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExplainCmd, kind, model, image, hierarchy, vae, out_prefix,
                                   alpha, beta, epsilon, target_class, top, traversal_steps,
                                   traversal_sigmas)

struct EvaluateCmd {
  std::string explainer;  // gmlf-flat | gmlf-hier | gmlf-vae | lime | random
  std::string images_dir;
  std::string model;
  std::string vae;  // required for gmlf-vae, switches `random` to latents
  std::string out_dir;
  std::size_t steps = 0;  // 0 -> min perturbable units over the image set
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string fill = "noise";
  std::size_t levels = 3;  // hierarchy depth for gmlf-hier
  std::size_t min_region_size = 16;
  double alpha = 1.0;
  double beta = 0.0;
  double epsilon = 1e-9;
  std::size_t lime_samples = 1000;
  double lime_kernel = 0.25;
  double lime_ridge = 1.0;
  std::size_t max_images = 0;  // 0 -> all
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EvaluateCmd, explainer, images_dir, model, vae, out_dir, steps,
                                   trials, seed, fill, levels, min_region_size, alpha, beta,
                                   epsilon, lime_samples, lime_kernel, lime_ridge, max_images)

struct RenderCmd {
  std::string mode = "heatmap";  // heatmap | drilldown | traversal
  std::string image;
  std::string report;
  std::string hierarchy;
  std::string vae;
  std::string out_prefix;
  std::size_t top = 2;
  std::size_t traversal_steps = 7;
  double traversal_sigmas = 3.0;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RenderCmd, mode, image, report, hierarchy, vae, out_prefix, top,
                                   traversal_steps, traversal_sigmas)

struct ReportCmd {
  std::vector<std::string> inputs;  // evaluation summary CSVs
  std::string out_prefix;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReportCmd, inputs, out_prefix)

void run_synth_data(const SynthDataCmd& cmd, RunContext& ctx);
void run_train_classifier(const TrainClassifierCmd& cmd, RunContext& ctx);
void run_train_vae(const TrainVaeCmd& cmd, RunContext& ctx);
void run_segment(const SegmentCmd& cmd, RunContext& ctx);
void run_explain(const ExplainCmd& cmd, RunContext& ctx);
void run_evaluate(const EvaluateCmd& cmd, RunContext& ctx);
void run_render(const RenderCmd& cmd, RunContext& ctx);
void run_report(const ReportCmd& cmd, RunContext& ctx);

// Where the command's manifest is written.
std::string manifest_path_for(const std::string& command, const nlohmann::json& config);

// Dispatch by name with a JSON config (also the replay path). Returns the
// process exit code: 0 ok, 2 validation error, 3 numeric failure.
int dispatch_command(const std::string& command, const nlohmann::json& config);

}  // namespace mlfx
