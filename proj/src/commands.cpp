#include "mlfx/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "mlfx/autoencoder.hpp"
#include "mlfx/common.hpp"
#include "mlfx/eval.hpp"
#include "mlfx/gmlf.hpp"
#include "mlfx/image.hpp"
#include "mlfx/lime.hpp"
#include "mlfx/model_io.hpp"
#include "mlfx/render.hpp"
#include "mlfx/rng.hpp"
#include "mlfx/segmentation.hpp"
#include "mlfx/synth.hpp"
#include "mlfx/train.hpp"
#include "mlfx/vae.hpp"

namespace mlfx {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError(dir + ": cannot create directory");
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "sgd-momentum") return Optimizer::SgdMomentum;
  throw ValidationError("unknown optimizer: " + s);
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string manifest_path_for(const std::string& command, const json& config) {
  if (command == "synth-data") return join(config.at("out_dir"), "manifest.json");
  if (command == "evaluate") return join(config.at("out_dir"), "manifest.json");
  if (command == "train-classifier" || command == "train-vae") {
    fs::path p(config.at("out_model").get<std::string>());
    p.replace_extension(".manifest.json");
    return p.string();
  }
  return config.at("out_prefix").get<std::string>() + ".manifest.json";
}

void run_synth_data(const SynthDataCmd& cmd, RunContext& ctx) {
  SynthConfig cfg;
  cfg.count = cmd.count;
  cfg.image_size = cmd.size;
  cfg.noise = cmd.noise;
  cfg.seed = cmd.seed;
  for (const std::string& path : synth_dataset_to_dir(cfg, cmd.out_dir)) {
    ctx.add_output(path);
  }
  std::cout << "wrote " << cmd.count << " images to " << cmd.out_dir << "\n";
}

void run_train_classifier(const TrainClassifierCmd& cmd, RunContext& ctx) {
  const Dataset all = load_dataset(cmd.data_dir);
  ctx.add_input(join(cmd.data_dir, "labels.csv"));
  auto [train, held_out] = split_dataset(all, cmd.holdout, cmd.seed);
  if (train.inputs.empty()) throw ValidationError("train split is empty");

  std::vector<std::size_t> arch;
  arch.push_back(train.feature_dim());
  arch.insert(arch.end(), cmd.hidden.begin(), cmd.hidden.end());
  arch.push_back(static_cast<std::size_t>(all.num_classes()));

  TrainConfig cfg;
  cfg.learning_rate = cmd.learning_rate;
  cfg.batch_size = cmd.batch_size;
  cfg.epochs = cmd.epochs;
  cfg.seed = cmd.seed;
  cfg.optimizer = optimizer_from_string(cmd.optimizer);

  const TrainResult result = train_classifier(train, arch, cfg);
  save_model(result.net, cmd.out_model);
  ctx.add_output(cmd.out_model);
  fs::path blob(cmd.out_model);
  blob.replace_extension(".bin");
  ctx.add_output(blob.string());

  std::cout << "train accuracy: " << accuracy(result.net, train) << "\n";
  if (!held_out.inputs.empty()) {
    std::cout << "held-out accuracy: " << accuracy(result.net, held_out) << "\n";
  }
  if (!result.epoch_losses.empty()) {
    std::cout << "loss: " << result.epoch_losses.front() << " -> " << result.epoch_losses.back()
              << " over " << result.epoch_losses.size() << " epochs\n";
  }
}

void run_train_vae(const TrainVaeCmd& cmd, RunContext& ctx) {
  const Dataset data = load_dataset(cmd.data_dir);
  ctx.add_input(join(cmd.data_dir, "labels.csv"));

  TrainConfig cfg;
  cfg.learning_rate = cmd.learning_rate;
  cfg.batch_size = cmd.batch_size;
  cfg.epochs = cmd.epochs;
  cfg.seed = cmd.seed;

  const VaeTrainResult result = train_vae(data, cmd.latents, cmd.beta, cfg);
  save_vae(result.vae, cmd.out_model);
  ctx.add_output(cmd.out_model);
  fs::path blob(cmd.out_model);
  blob.replace_extension(".bin");
  ctx.add_output(blob.string());

  if (!result.epoch_recon.empty()) {
    std::cout << "reconstruction: " << result.epoch_recon.front() << " -> "
              << result.epoch_recon.back() << " over " << result.epoch_recon.size()
              << " epochs\n";
  }
}

void run_segment(const SegmentCmd& cmd, RunContext& ctx) {
  const Image img = read_image(cmd.image);
  ctx.add_input(cmd.image);

  std::vector<double> thresholds = cmd.thresholds;
  if (thresholds.empty()) {
    if (!cmd.auto_quantiles) {
      throw ValidationError("segment: --thresholds required when --auto-quantiles is off");
    }
    thresholds = auto_thresholds(img, cmd.levels);
  } else if (thresholds.size() != cmd.levels) {
    throw ValidationError("segment: threshold count does not match --levels");
  }
  const SegmentationHierarchy h = hierarchical_segment(img, thresholds, cmd.min_region_size);

  const std::string json_path = cmd.out_prefix + ".hierarchy.json";
  save_hierarchy(h, json_path);
  ctx.add_output(json_path);
  for (std::size_t k = 0; k < h.num_levels(); ++k) {
    const std::string pgm = cmd.out_prefix + ".level" + std::to_string(k + 1) + ".pgm";
    write_label_pgm(h.levels[k].labels, h.height, h.width, pgm);
    ctx.add_output(pgm);
    std::cout << "level " << k + 1 << ": " << h.levels[k].num_regions << " regions (lambda="
              << thresholds[k] << ")\n";
  }
}

void run_explain(const ExplainCmd& cmd, RunContext& ctx) {
  const Image img = read_image(cmd.image);
  ctx.add_input(cmd.image);
  const LayeredNetwork model = load_model(cmd.model);
  ctx.add_input(cmd.model);

  LrpConfig cfg;
  cfg.alpha = cmd.alpha;
  cfg.beta = cmd.beta;
  cfg.epsilon = cmd.epsilon;
  std::optional<std::size_t> target;
  if (cmd.target_class >= 0) target = static_cast<std::size_t>(cmd.target_class);

  const MlfKind kind = mlf_kind_from_string(cmd.kind);
  MlfAutoencoder ae;
  if (kind == MlfKind::Vae) {
    if (cmd.vae.empty()) throw ValidationError("explain: --vae required for kind vae");
    const VaeModel vae = load_vae(cmd.vae);
    ctx.add_input(cmd.vae);
    ae = build_vae_autoencoder(vae, img.to_tensor());
    const RelevanceReport report = explain(model, img.to_tensor(), ae, cfg, target);
    const std::string report_path = cmd.out_prefix + ".report.json";
    save_report(report, report_path);
    ctx.add_output(report_path);

    const auto grid = render_latent_traversal(vae, ae, report, cmd.traversal_steps,
                                              cmd.traversal_sigmas, img.height, img.width);
    const std::size_t steps = cmd.traversal_steps;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), ".latent%zu_step%zu.pgm", i / steps, i % steps);
      write_pgm(grid[i], cmd.out_prefix + name);
      ctx.add_output(cmd.out_prefix + name);
    }
    std::cout << "predicted class " << report.predicted_class << " (logit "
              << report.predicted_logit << "), " << grid.size() << " traversal tiles\n";
    return;
  }

  if (cmd.hierarchy.empty()) {
    throw ValidationError("explain: --hierarchy required for segmentation kinds");
  }
  const SegmentationHierarchy h = load_hierarchy(cmd.hierarchy);
  ctx.add_input(cmd.hierarchy);
  if (kind == MlfKind::FlatSeg && h.num_levels() != 1) {
    throw ValidationError("explain: flat kind requires a single-level hierarchy");
  }
  ae = build_segmentation_autoencoder(img, h);
  const RelevanceReport report = explain(model, img.to_tensor(), ae, cfg, target);
  if (report.dropped_units > 0) {
    std::cerr << "warning: " << report.dropped_units
              << " output units had empty contribution pools; dropped relevance "
              << report.dropped_relevance << "\n";
  }
  const std::string report_path = cmd.out_prefix + ".report.json";
  save_report(report, report_path);
  ctx.add_output(report_path);

  if (kind == MlfKind::FlatSeg) {
    const Image overlay =
        render_heatmap_overlay(img, h.levels[0], report.relevance(), cmd.top);
    write_ppm(overlay, cmd.out_prefix + ".overlay.ppm");
    ctx.add_output(cmd.out_prefix + ".overlay.ppm");

    std::vector<std::pair<std::string, double>> legend;
    const auto order = descending_order(report.relevance());
    for (std::size_t r = 0; r < std::min<std::size_t>(cmd.top, order.size()); ++r) {
      legend.emplace_back("segment " + std::to_string(order[r]), report.relevance()[order[r]]);
    }
    write_legend_svg(cmd.out_prefix + ".legend.svg", legend);
    ctx.add_output(cmd.out_prefix + ".legend.svg");
  } else {
    const auto chains = hierarchical_drilldown(report, h, std::min<std::size_t>(cmd.top, h.coarsest().num_regions));
    const auto panels = render_drilldown(img, h, chains);
    for (std::size_t c = 0; c < chains.size(); ++c) {
      for (std::size_t k = 0; k < h.num_levels(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), ".chain%zu_level%zu.ppm", c, k + 1);
        write_ppm(panels[c * h.num_levels() + k], cmd.out_prefix + name);
        ctx.add_output(cmd.out_prefix + name);
      }
    }
  }
  std::cout << "predicted class " << report.predicted_class << " (logit "
            << report.predicted_logit << "), fidelity " << report.composite_fidelity << "\n";
}

namespace {

struct EvalItem {
  MorfResult curve;
  std::size_t image_index = 0;
};

void write_curve_csv(const std::string& path, const MorfResult& r) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "step,score\n";
  for (std::size_t k = 0; k < r.scores.size(); ++k) {
    out << k << "," << csv_double(r.scores[k]) << "\n";
  }
}

}  // namespace

void run_evaluate(const EvaluateCmd& cmd, RunContext& ctx) {
  ensure_dir(cmd.out_dir);
  const std::vector<Image> images_all = load_dataset_images(cmd.images_dir);
  ctx.add_input(join(cmd.images_dir, "labels.csv"));
  const LayeredNetwork model = load_model(cmd.model);
  ctx.add_input(cmd.model);

  std::vector<Image> images = images_all;
  if (cmd.max_images > 0 && images.size() > cmd.max_images) images.resize(cmd.max_images);
  if (images.empty()) throw ValidationError("evaluate: no images");

  const FillMode fill = fill_from_string(cmd.fill);
  LrpConfig lrp_cfg;
  lrp_cfg.alpha = cmd.alpha;
  lrp_cfg.beta = cmd.beta;
  lrp_cfg.epsilon = cmd.epsilon;

  const bool is_vae = cmd.explainer == "gmlf-vae" || (cmd.explainer == "random" && !cmd.vae.empty());
  VaeModel vae;
  if (is_vae) {
    if (cmd.vae.empty()) throw ValidationError("evaluate: --vae required for latent explainers");
    vae = load_vae(cmd.vae);
    ctx.add_input(cmd.vae);
  }

  // Per-image segmentations and perturbable unit counts. The random baseline
  // follows --levels so it can be matched to either segmentation explainer.
  const std::size_t seg_levels =
      cmd.explainer == "gmlf-hier" || cmd.explainer == "random" ? cmd.levels : 1;
  std::vector<SegmentationHierarchy> hierarchies(images.size());
  std::vector<std::size_t> units(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (is_vae) {
      units[i] = vae.latent_dim;
    } else {
      hierarchies[i] =
          hierarchical_segment(images[i], auto_thresholds(images[i], seg_levels), cmd.min_region_size);
      units[i] = hierarchies[i].finest().num_regions;
    }
  }
  std::size_t L = cmd.steps;
  if (L == 0) L = *std::min_element(units.begin(), units.end());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (L > units[i]) {
      throw ValidationError("evaluate: steps " + std::to_string(L) + " exceed the " +
                            std::to_string(units[i]) + " perturbable units of image " +
                            std::to_string(i));
    }
  }

  std::vector<MorfResult> curves;
  curves.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    const std::uint64_t image_seed = derive_seed(cmd.seed, i);
    MorfResult curve;

    if (cmd.explainer == "random") {
      curve = is_vae ? random_baseline_latents(model, build_vae_autoencoder(vae, img.to_tensor()),
                                               L, cmd.trials, image_seed)
                     : random_baseline_segments(model, img, hierarchies[i].finest(), L, cmd.trials,
                                                image_seed, fill);
    } else if (cmd.explainer == "gmlf-vae") {
      const MlfAutoencoder ae = build_vae_autoencoder(vae, img.to_tensor());
      const RelevanceReport report = explain(model, img.to_tensor(), ae, lrp_cfg);
      const auto ordering = descending_order(report.relevance());
      const std::uint64_t noise_seed = derive_seed(image_seed, 0xF2);
      curve = morf_curve(
          model, ae.input,
          [&](std::size_t k) { return perturb_latents(ae, ae.encoding, ordering, k, noise_seed); },
          L, units[i]);
      curve.ordering = ordering;
    } else {
      const SegmentationHierarchy& h = hierarchies[i];
      std::vector<std::uint32_t> ordering;
      if (cmd.explainer == "gmlf-flat") {
        const MlfAutoencoder ae = build_segmentation_autoencoder(img, h);
        ordering = descending_order(explain(model, img.to_tensor(), ae, lrp_cfg).relevance());
      } else if (cmd.explainer == "gmlf-hier") {
        const MlfAutoencoder ae = build_segmentation_autoencoder(img, h);
        ordering = flip_order_hierarchical(h, explain(model, img.to_tensor(), ae, lrp_cfg));
      } else if (cmd.explainer == "lime") {
        const LimeExplanation lime =
            lime_explain(model, img, h.finest(), cmd.lime_samples, cmd.lime_kernel, cmd.lime_ridge,
                         derive_seed(image_seed, 0x11), fill);
        ordering = descending_order(Tensor::from_vector(lime.weights));
      } else {
        throw ValidationError("unknown explainer: " + cmd.explainer);
      }
      const std::uint64_t fill_seed = derive_seed(image_seed, 0xF1);
      curve = morf_curve(
          model, img.to_tensor(),
          [&](std::size_t k) {
            return perturb_segments(img, h.finest(), ordering, k, fill, fill_seed).to_tensor();
          },
          L, units[i]);
      curve.ordering = ordering;
    }
    curve.seed = image_seed;

    char name[64];
    std::snprintf(name, sizeof(name), "curve_%05zu.csv", i);
    const std::string csv_path = join(cmd.out_dir, name);
    write_curve_csv(csv_path, curve);
    ctx.add_output(csv_path);
    curves.push_back(std::move(curve));
  }

  const MeanCurve mean = aopc_mean(curves);
  const std::string summary_path = join(cmd.out_dir, "summary.csv");
  {
    std::ofstream out(summary_path);
    if (!out) throw IoError(summary_path + ": cannot open for writing");
    out << "explainer,step,mean_score,mean_aopc\n";
    for (std::size_t k = 0; k <= L; ++k) {
      out << cmd.explainer << "," << k << "," << csv_double(mean.curve[k]) << ","
          << csv_double(mean.aopc_series[k]) << "\n";
    }
  }
  ctx.add_output(summary_path);

  const Rgb color = cmd.explainer == "random" ? Rgb{0.1, 0.6, 0.1} : Rgb{0.8, 0.15, 0.15};
  write_curves_svg(join(cmd.out_dir, "morf.svg"), "Mean MoRF curve", "perturbation step",
                   "class probability", {{cmd.explainer, mean.curve, color}});
  ctx.add_output(join(cmd.out_dir, "morf.svg"));
  write_curves_svg(join(cmd.out_dir, "aopc.svg"), "Mean AOPC per step", "perturbation step",
                   "AOPC", {{cmd.explainer, mean.aopc_series, color}});
  ctx.add_output(join(cmd.out_dir, "aopc.svg"));

  std::cout << cmd.explainer << ": mean AOPC over " << images.size() << " images at L=" << L
            << ": " << mean.aopc_value << "\n";
}

void run_render(const RenderCmd& cmd, RunContext& ctx) {
  const Image img = read_image(cmd.image);
  ctx.add_input(cmd.image);
  const RelevanceReport report = load_report(cmd.report);
  ctx.add_input(cmd.report);

  if (cmd.mode == "heatmap" || cmd.mode == "drilldown") {
    const SegmentationHierarchy h = load_hierarchy(cmd.hierarchy);
    ctx.add_input(cmd.hierarchy);
    if (cmd.mode == "heatmap") {
      const Image overlay =
          render_heatmap_overlay(img, h.finest(), report.level_relevance.back(), cmd.top);
      write_ppm(overlay, cmd.out_prefix + ".overlay.ppm");
      ctx.add_output(cmd.out_prefix + ".overlay.ppm");
    } else {
      const auto chains = hierarchical_drilldown(
          report, h, std::min<std::size_t>(cmd.top, h.coarsest().num_regions));
      const auto panels = render_drilldown(img, h, chains);
      for (std::size_t c = 0; c < chains.size(); ++c) {
        for (std::size_t k = 0; k < h.num_levels(); ++k) {
          char name[64];
          std::snprintf(name, sizeof(name), ".chain%zu_level%zu.ppm", c, k + 1);
          write_ppm(panels[c * h.num_levels() + k], cmd.out_prefix + name);
          ctx.add_output(cmd.out_prefix + name);
        }
      }
    }
  } else if (cmd.mode == "traversal") {
    const VaeModel vae = load_vae(cmd.vae);
    ctx.add_input(cmd.vae);
    const MlfAutoencoder ae = build_vae_autoencoder(vae, img.to_tensor());
    const auto grid = render_latent_traversal(vae, ae, report, cmd.traversal_steps,
                                              cmd.traversal_sigmas, img.height, img.width);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), ".latent%zu_step%zu.pgm", i / cmd.traversal_steps,
                    i % cmd.traversal_steps);
      write_pgm(grid[i], cmd.out_prefix + name);
      ctx.add_output(cmd.out_prefix + name);
    }
  } else {
    throw ValidationError("render: unknown mode " + cmd.mode);
  }
}

void run_report(const ReportCmd& cmd, RunContext& ctx) {
  if (cmd.inputs.empty()) throw ValidationError("report: no input summaries");

  struct Series {
    std::string name;
    std::vector<double> curve;
    std::vector<double> aopc;
  };
  std::vector<Series> all;
  for (const std::string& path : cmd.inputs) {
    std::ifstream in(path);
    if (!in) throw IoError(path + ": cannot open for reading");
    ctx.add_input(path);
    Series s;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string name, step, score, aopc_v;
      std::getline(ss, name, ',');
      std::getline(ss, step, ',');
      std::getline(ss, score, ',');
      std::getline(ss, aopc_v, ',');
      s.name = name;
      s.curve.push_back(std::stod(score));
      s.aopc.push_back(std::stod(aopc_v));
    }
    if (s.curve.empty()) throw ValidationError(path + ": empty summary");
    all.push_back(std::move(s));
  }

  const std::string combined = cmd.out_prefix + ".combined.csv";
  {
    std::ofstream out(combined);
    if (!out) throw IoError(combined + ": cannot open for writing");
    out << "explainer,steps,final_aopc\n";
    for (const Series& s : all) {
      out << s.name << "," << s.curve.size() - 1 << "," << csv_double(s.aopc.back()) << "\n";
    }
  }
  ctx.add_output(combined);

  std::vector<CurveSeries> morf_series, aopc_series;
  for (std::size_t i = 0; i < all.size(); ++i) {
    morf_series.push_back({all[i].name, all[i].curve, rank_color(i)});
    aopc_series.push_back({all[i].name, all[i].aopc, rank_color(i)});
  }
  write_curves_svg(cmd.out_prefix + ".morf.svg", "Mean MoRF curves", "perturbation step",
                   "class probability", morf_series);
  ctx.add_output(cmd.out_prefix + ".morf.svg");
  write_curves_svg(cmd.out_prefix + ".aopc.svg", "Mean AOPC per step", "perturbation step", "AOPC",
                   aopc_series);
  ctx.add_output(cmd.out_prefix + ".aopc.svg");

  for (const Series& s : all) {
    std::cout << s.name << ": final AOPC " << s.aopc.back() << "\n";
  }
}

int dispatch_command(const std::string& command, const json& config) {
  std::optional<RunContext> ctx;
  try {
    ctx.emplace(command, config, manifest_path_for(command, config));
    if (command == "synth-data") {
      run_synth_data(config.get<SynthDataCmd>(), *ctx);
    } else if (command == "train-classifier") {
      run_train_classifier(config.get<TrainClassifierCmd>(), *ctx);
    } else if (command == "train-vae") {
      run_train_vae(config.get<TrainVaeCmd>(), *ctx);
    } else if (command == "segment") {
      run_segment(config.get<SegmentCmd>(), *ctx);
    } else if (command == "explain") {
      run_explain(config.get<ExplainCmd>(), *ctx);
    } else if (command == "evaluate") {
      run_evaluate(config.get<EvaluateCmd>(), *ctx);
    } else if (command == "render") {
      run_render(config.get<RenderCmd>(), *ctx);
    } else if (command == "report") {
      run_report(config.get<ReportCmd>(), *ctx);
    } else {
      throw ValidationError("unknown command: " + command);
    }
    ctx->finish();
    return 0;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    if (ctx) ctx->fail(e.what());
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (ctx) ctx->fail(e.what());
    return 2;
  }
}

}  // namespace mlfx
