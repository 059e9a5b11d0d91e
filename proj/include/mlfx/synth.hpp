#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mlfx/image.hpp"
#include "mlfx/train.hpp"

namespace mlfx {

// Three-class shape dataset: filled square, disk and triangle on a darker
// background, with per-pixel uniform noise. Class-balanced and deterministic.
struct SynthConfig {
  std::size_t count = 300;
  std::size_t image_size = 16;
  double noise = 0.05;
  std::uint64_t seed = 0;

  static constexpr std::size_t kClasses = 3;
  static const char* class_name(std::size_t c);
};

Image synth_image(const SynthConfig& cfg, std::size_t klass, std::uint64_t instance_seed);

Dataset synth_dataset(const SynthConfig& cfg);

// Writes PGM images plus labels.csv (`filename,label`); returns written paths.
std::vector<std::string> synth_dataset_to_dir(const SynthConfig& cfg, const std::string& dir);

// Directory of PGM/PPM images with a labels.csv mapping filename to label.
Dataset load_dataset(const std::string& dir);
std::vector<Image> load_dataset_images(const std::string& dir);

// Deterministic split into (train, held-out).
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double holdout_fraction,
                                          std::uint64_t seed);

}  // namespace mlfx
