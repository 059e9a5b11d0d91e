#include "mlfx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mlfx/common.hpp"
#include "mlfx/rng.hpp"

namespace mlfx {

namespace fs = std::filesystem;

const char* SynthConfig::class_name(std::size_t c) {
  switch (c) {
    case 0: return "square";
    case 1: return "disk";
    case 2: return "triangle";
  }
  return "?";
}

Image synth_image(const SynthConfig& cfg, std::size_t klass, std::uint64_t instance_seed) {
  const std::size_t n = cfg.image_size;
  if (n < 8) throw ValidationError("synth: image size must be at least 8");
  Rng rng(instance_seed);

  const double background = 0.15;
  const double foreground = 0.85;
  // Shape extent and center jitter kept small enough that the shape stays
  // fully inside the frame.
  const double s = (0.22 + 0.10 * rng.uniform()) * static_cast<double>(n);
  const double jitter = static_cast<double>(n) * 0.08;
  const double cr = static_cast<double>(n) / 2.0 + rng.uniform(-jitter, jitter);
  const double cc = static_cast<double>(n) / 2.0 + rng.uniform(-jitter, jitter);

  Image img(n, n, 1, background);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double dr = static_cast<double>(r) + 0.5 - cr;
      const double dc = static_cast<double>(c) + 0.5 - cc;
      bool inside = false;
      switch (klass) {
        case 0:  // square
          inside = std::abs(dr) <= s * 0.82 && std::abs(dc) <= s * 0.82;
          break;
        case 1:  // disk
          inside = dr * dr + dc * dc <= s * s;
          break;
        case 2:  // upward triangle
          inside = dr >= -s && dr <= s && std::abs(dc) <= (dr + s) * 0.55;
          break;
        default:
          throw ValidationError("synth: unknown class");
      }
      if (inside) img.at(r, c) = foreground;
    }
  }
  if (cfg.noise > 0.0) {
    for (double& v : img.pixels) {
      v = std::clamp(v + rng.uniform(-cfg.noise, cfg.noise), 0.0, 1.0);
    }
  }
  return img;
}

Dataset synth_dataset(const SynthConfig& cfg) {
  if (cfg.count < SynthConfig::kClasses) {
    throw ValidationError("synth: count must be at least the number of classes");
  }
  Dataset data;
  data.inputs.reserve(cfg.count);
  data.labels.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const std::size_t klass = i % SynthConfig::kClasses;
    const Image img = synth_image(cfg, klass, derive_seed(cfg.seed, i));
    data.inputs.push_back(img.to_tensor());
    data.labels.push_back(static_cast<int>(klass));
  }
  return data;
}

std::vector<std::string> synth_dataset_to_dir(const SynthConfig& cfg, const std::string& dir) {
  if (cfg.count < SynthConfig::kClasses) {
    throw ValidationError("synth: count must be at least the number of classes");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError(dir + ": cannot create output directory");

  std::vector<std::string> written;
  std::ostringstream csv;
  csv << "filename,label\n";
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const std::size_t klass = i % SynthConfig::kClasses;
    const Image img = synth_image(cfg, klass, derive_seed(cfg.seed, i));
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05zu.pgm", i);
    const std::string path = (fs::path(dir) / name).string();
    write_pgm(img, path);
    written.push_back(path);
    csv << name << "," << klass << "\n";
  }
  const std::string csv_path = (fs::path(dir) / "labels.csv").string();
  std::ofstream out(csv_path);
  if (!out) throw IoError(csv_path + ": cannot open for writing");
  out << csv.str();
  written.push_back(csv_path);
  return written;
}

Dataset load_dataset(const std::string& dir) {
  const std::string csv_path = (fs::path(dir) / "labels.csv").string();
  std::ifstream in(csv_path);
  if (!in) throw IoError(csv_path + ": cannot open label file");

  Dataset data;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "filename,label") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError(csv_path + ": malformed line: " + line);
    const std::string name = line.substr(0, comma);
    const int label = std::stoi(line.substr(comma + 1));
    if (label < 0) throw ValidationError(csv_path + ": negative label for " + name);
    data.inputs.push_back(read_image((fs::path(dir) / name).string()).to_tensor());
    data.labels.push_back(label);
  }
  if (data.inputs.empty()) throw ValidationError(dir + ": dataset is empty");
  return data;
}

std::vector<Image> load_dataset_images(const std::string& dir) {
  const Dataset data = load_dataset(dir);
  std::vector<Image> images;
  images.reserve(data.size());
  for (const Tensor& t : data.inputs) images.push_back(Image::from_tensor(t));
  return images;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double holdout_fraction,
                                          std::uint64_t seed) {
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw ValidationError("split: holdout fraction must be in [0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5B11));
  rng.shuffle(order);

  const std::size_t holdout = static_cast<std::size_t>(
      std::floor(holdout_fraction * static_cast<double>(data.size())));
  Dataset train, test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Dataset& target = i < holdout ? test : train;
    target.inputs.push_back(data.inputs[order[i]]);
    target.labels.push_back(data.labels[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace mlfx
