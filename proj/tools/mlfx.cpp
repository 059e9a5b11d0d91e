#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlfx/commands.hpp"
#include "mlfx/manifest.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"Middle-level feature explanations for image classifiers"};
  app.set_version_flag("--version", std::string(mlfx::kToolVersion));
  app.require_subcommand(0, 1);

  std::string replay_manifest;
  app.add_option("--manifest", replay_manifest,
                 "Replay a previous run from its manifest (reproduces outputs bit-exactly)");

  mlfx::SynthDataCmd synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "Generate the synthetic shapes dataset");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of images");
  synth_cmd->add_option("--size", synth.size, "Image side length");
  synth_cmd->add_option("--noise", synth.noise, "Uniform pixel noise amplitude");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->envname("MLFX_SEED");

  mlfx::TrainClassifierCmd trainc;
  auto* trainc_cmd = app.add_subcommand("train-classifier", "Train an MLP classifier");
  trainc_cmd->add_option("--data", trainc.data_dir, "Dataset directory")->required();
  trainc_cmd->add_option("--out", trainc.out_model, "Output model manifest (.json)")->required();
  trainc_cmd->add_option("--hidden", trainc.hidden, "Hidden layer sizes");
  trainc_cmd->add_option("--lr", trainc.learning_rate, "Learning rate");
  trainc_cmd->add_option("--batch", trainc.batch_size, "Batch size");
  trainc_cmd->add_option("--epochs", trainc.epochs, "Epochs");
  trainc_cmd->add_option("--holdout", trainc.holdout, "Held-out fraction");
  trainc_cmd->add_option("--optimizer", trainc.optimizer, "sgd or sgd-momentum");
  trainc_cmd->add_option("--seed", trainc.seed, "RNG seed")->envname("MLFX_SEED");

  mlfx::TrainVaeCmd trainv;
  auto* trainv_cmd = app.add_subcommand("train-vae", "Train the dense VAE");
  trainv_cmd->add_option("--data", trainv.data_dir, "Dataset directory")->required();
  trainv_cmd->add_option("--out", trainv.out_model, "Output model manifest (.json)")->required();
  trainv_cmd->add_option("--latents", trainv.latents, "Latent dimension");
  trainv_cmd->add_option("--beta", trainv.beta, "KL weight");
  trainv_cmd->add_option("--lr", trainv.learning_rate, "Learning rate");
  trainv_cmd->add_option("--batch", trainv.batch_size, "Batch size");
  trainv_cmd->add_option("--epochs", trainv.epochs, "Epochs");
  trainv_cmd->add_option("--seed", trainv.seed, "RNG seed")->envname("MLFX_SEED");

  mlfx::SegmentCmd segment;
  auto* segment_cmd = app.add_subcommand("segment", "Flat or hierarchical segmentation");
  segment_cmd->add_option("--image", segment.image, "Input PGM/PPM image")->required();
  segment_cmd->add_option("--out-prefix", segment.out_prefix, "Output path prefix")->required();
  segment_cmd->add_option("--levels", segment.levels, "Hierarchy depth K");
  segment_cmd->add_option("--thresholds", segment.thresholds,
                          "Explicit strictly-decreasing thresholds");
  segment_cmd->add_flag("--auto-quantiles,!--no-auto-quantiles", segment.auto_quantiles,
                        "Derive thresholds from MST edge-weight quantiles (default)");
  segment_cmd->add_option("--min-region-size", segment.min_region_size,
                          "Merge regions smaller than this many pixels (0 disables)");

  mlfx::ExplainCmd explain;
  auto* explain_cmd = app.add_subcommand("explain", "Per-MLF relevance explanation");
  explain_cmd->add_option("--kind", explain.kind, "flat | hier | vae")->required();
  explain_cmd->add_option("--model", explain.model, "Classifier model manifest")->required();
  explain_cmd->add_option("--image", explain.image, "Input image")->required();
  explain_cmd->add_option("--hierarchy", explain.hierarchy, "Hierarchy JSON (segmentation kinds)");
  explain_cmd->add_option("--vae", explain.vae, "VAE model manifest (vae kind)");
  explain_cmd->add_option("--out-prefix", explain.out_prefix, "Output path prefix")->required();
  explain_cmd->add_option("--alpha", explain.alpha, "LRP alpha");
  explain_cmd->add_option("--beta", explain.beta, "LRP beta");
  explain_cmd->add_option("--epsilon", explain.epsilon, "LRP stabilizer");
  explain_cmd->add_option("--target-class", explain.target_class, "Class to explain (-1: predicted)");
  explain_cmd->add_option("--top", explain.top, "Highlighted segments / drill-down branches");

  mlfx::EvaluateCmd evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "MoRF/AOPC evaluation");
  evaluate_cmd->add_option("--explainer", evaluate.explainer,
                           "gmlf-flat | gmlf-hier | gmlf-vae | lime | random")->required();
  evaluate_cmd->add_option("--images", evaluate.images_dir, "Dataset directory")->required();
  evaluate_cmd->add_option("--model", evaluate.model, "Classifier model manifest")->required();
  evaluate_cmd->add_option("--vae", evaluate.vae, "VAE model manifest (latent explainers)");
  evaluate_cmd->add_option("--out-dir", evaluate.out_dir, "Output directory")->required();
  evaluate_cmd->add_option("--steps", evaluate.steps, "Perturbation steps L (0: auto)");
  evaluate_cmd->add_option("--trials", evaluate.trials, "Random baseline trials");
  evaluate_cmd->add_option("--fill", evaluate.fill, "noise | zeros | mean");
  evaluate_cmd->add_option("--levels", evaluate.levels, "Hierarchy depth for gmlf-hier and random (1 matches gmlf-flat/lime)");
  evaluate_cmd->add_option("--min-region-size", evaluate.min_region_size, "Region merge floor");
  evaluate_cmd->add_option("--alpha", evaluate.alpha, "LRP alpha");
  evaluate_cmd->add_option("--beta", evaluate.beta, "LRP beta");
  evaluate_cmd->add_option("--epsilon", evaluate.epsilon, "LRP stabilizer");
  evaluate_cmd->add_option("--lime-samples", evaluate.lime_samples, "LIME mask samples");
  evaluate_cmd->add_option("--lime-kernel", evaluate.lime_kernel, "LIME kernel width");
  evaluate_cmd->add_option("--lime-ridge", evaluate.lime_ridge, "LIME ridge strength");
  evaluate_cmd->add_option("--max-images", evaluate.max_images, "Cap on evaluated images (0: all)");
  evaluate_cmd->add_option("--seed", evaluate.seed, "RNG seed")->envname("MLFX_SEED");

  mlfx::RenderCmd render;
  auto* render_cmd = app.add_subcommand("render", "Re-render overlays from a stored report");
  render_cmd->add_option("--mode", render.mode, "heatmap | drilldown | traversal")->required();
  render_cmd->add_option("--image", render.image, "Input image")->required();
  render_cmd->add_option("--report", render.report, "Relevance report JSON")->required();
  render_cmd->add_option("--hierarchy", render.hierarchy, "Hierarchy JSON");
  render_cmd->add_option("--vae", render.vae, "VAE model manifest");
  render_cmd->add_option("--out-prefix", render.out_prefix, "Output path prefix")->required();
  render_cmd->add_option("--top", render.top, "Segments / branches to highlight");
  render_cmd->add_option("--steps", render.traversal_steps, "Traversal steps");
  render_cmd->add_option("--range", render.traversal_sigmas, "Traversal range in latent sigmas");

  mlfx::ReportCmd report;
  auto* report_cmd = app.add_subcommand("report", "Combine evaluation summaries");
  report_cmd->add_option("--inputs", report.inputs, "Evaluation summary CSVs")->required();
  report_cmd->add_option("--out-prefix", report.out_prefix, "Output path prefix")->required();

  CLI11_PARSE(app, argc, argv);

  if (!replay_manifest.empty()) {
    try {
      const mlfx::RunManifest m = mlfx::load_run_manifest(replay_manifest);
      std::cerr << "replaying " << m.command << " from " << replay_manifest << "\n";
      return mlfx::dispatch_command(m.command, m.config);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  if (synth_cmd->parsed()) return mlfx::dispatch_command("synth-data", json(synth));
  if (trainc_cmd->parsed()) return mlfx::dispatch_command("train-classifier", json(trainc));
  if (trainv_cmd->parsed()) return mlfx::dispatch_command("train-vae", json(trainv));
  if (segment_cmd->parsed()) return mlfx::dispatch_command("segment", json(segment));
  if (explain_cmd->parsed()) return mlfx::dispatch_command("explain", json(explain));
  if (evaluate_cmd->parsed()) return mlfx::dispatch_command("evaluate", json(evaluate));
  if (render_cmd->parsed()) return mlfx::dispatch_command("render", json(render));
  if (report_cmd->parsed()) return mlfx::dispatch_command("report", json(report));

  std::cout << app.help();
  return 0;
}
