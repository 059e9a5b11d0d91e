#include "mlfx/model_io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlfx/common.hpp"

namespace mlfx {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kModelVersion = 1;

std::string blob_path_for(const std::string& manifest_path) {
  fs::path p(manifest_path);
  p.replace_extension(".bin");
  return p.string();
}

void append_params(std::vector<double>& out, const LayeredNetwork& net) {
  for (const DenseLayer& l : net.layers) {
    out.insert(out.end(), l.weights.data().begin(), l.weights.data().end());
    out.insert(out.end(), l.biases.data().begin(), l.biases.data().end());
  }
}

void write_blob(const std::string& path, const std::vector<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
  }
  if (!out) throw IoError(path + ": write failed");
}

std::vector<double> read_blob(const std::string& path, std::size_t expected_doubles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::vector<double> values(expected_doubles);
  for (std::size_t i = 0; i < expected_doubles; ++i) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
    if (!in) throw IoError(path + ": truncated blob");
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  if (in.peek() != EOF) throw IoError(path + ": blob longer than manifest declares");
  return values;
}

std::uint64_t checksum_of(const std::vector<double>& values) {
  return fnv1a64(values.data(), values.size() * sizeof(double));
}

json layers_to_json(const LayeredNetwork& net) {
  json arr = json::array();
  for (const DenseLayer& l : net.layers) {
    arr.push_back({{"in", l.in_dim()}, {"out", l.out_dim()}, {"activation", to_string(l.activation)}});
  }
  return arr;
}

// Consumes layer parameters from `values` starting at `offset`. `what` names
// the network in error messages.
LayeredNetwork layers_from_json(const json& layers, const json& readout,
                                const std::vector<double>& values, std::size_t& offset,
                                const std::string& what) {
  std::vector<DenseLayer> ls;
  std::size_t index = 0;
  for (const auto& lj : layers) {
    const std::size_t n_in = lj.at("in").get<std::size_t>();
    const std::size_t n_out = lj.at("out").get<std::size_t>();
    const std::size_t need = n_out * n_in + n_out;
    if (offset + need > values.size()) {
      throw IoError("model blob too short for " + what + " layer " + std::to_string(index) +
                    " (" + std::to_string(n_out) + "x" + std::to_string(n_in) + ")");
    }
    Tensor w({n_out, n_in},
             std::vector<double>(values.begin() + offset, values.begin() + offset + n_out * n_in));
    offset += n_out * n_in;
    Tensor b({n_out}, std::vector<double>(values.begin() + offset, values.begin() + offset + n_out));
    offset += n_out;
    ls.emplace_back(std::move(w), std::move(b),
                    activation_from_string(lj.at("activation").get<std::string>()));
    ++index;
  }
  return LayeredNetwork(std::move(ls), readout_from_string(readout.get<std::string>()));
}

json load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "mlfx-model") {
    throw IoError(path + ": not a model manifest");
  }
  if (j.value("version", -1) != kModelVersion) {
    throw IoError(path + ": unsupported model version " + std::to_string(j.value("version", -1)));
  }
  return j;
}

std::vector<double> load_checked_blob(const json& manifest, const std::string& manifest_path) {
  const fs::path dir = fs::path(manifest_path).parent_path();
  const std::string blob = (dir / manifest.at("blob").get<std::string>()).string();
  const std::size_t doubles = manifest.at("blob_doubles").get<std::size_t>();
  std::vector<double> values = read_blob(blob, doubles);
  const std::uint64_t expected = std::stoull(manifest.at("checksum").get<std::string>(), nullptr, 16);
  if (checksum_of(values) != expected) {
    throw IoError(blob + ": checksum failure (corrupted model blob)");
  }
  return values;
}

void finish_manifest(json& j, const std::string& path, const std::vector<double>& values) {
  const std::string blob = blob_path_for(path);
  write_blob(blob, values);
  j["blob"] = fs::path(blob).filename().string();
  j["blob_doubles"] = values.size();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(checksum_of(values)));
  j["checksum"] = buf;
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  return fnv1a64(s.data(), s.size());
}

void save_model(const LayeredNetwork& net, const std::string& path) {
  net.validate();
  json j;
  j["format"] = "mlfx-model";
  j["version"] = kModelVersion;
  j["readout"] = to_string(net.readout);
  j["layers"] = layers_to_json(net);
  std::vector<double> values;
  values.reserve(net.parameter_count());
  append_params(values, net);
  finish_manifest(j, path, values);
}

LayeredNetwork load_model(const std::string& path) {
  const json j = load_manifest(path);
  if (j.contains("vae")) throw IoError(path + ": is a VAE model, use load_vae");
  const std::vector<double> values = load_checked_blob(j, path);
  std::size_t offset = 0;
  LayeredNetwork net = layers_from_json(j.at("layers"), j.at("readout"), values, offset, "model");
  if (offset != values.size()) {
    throw IoError(path + ": blob length inconsistent with declared layer dims");
  }
  return net;
}

void save_vae(const VaeModel& vae, const std::string& path) {
  vae.validate();
  json j;
  j["format"] = "mlfx-model";
  j["version"] = kModelVersion;
  j["vae"] = {{"latent_dim", vae.latent_dim},
              {"beta", vae.beta},
              {"latent_mean", vae.latent_mean},
              {"latent_std", vae.latent_std}};
  j["encoder"] = {{"readout", to_string(vae.encoder.readout)}, {"layers", layers_to_json(vae.encoder)}};
  j["decoder"] = {{"readout", to_string(vae.decoder.readout)}, {"layers", layers_to_json(vae.decoder)}};
  std::vector<double> values;
  values.reserve(vae.encoder.parameter_count() + vae.decoder.parameter_count());
  append_params(values, vae.encoder);
  append_params(values, vae.decoder);
  finish_manifest(j, path, values);
}

VaeModel load_vae(const std::string& path) {
  const json j = load_manifest(path);
  if (!j.contains("vae")) throw IoError(path + ": not a VAE model file");
  const std::vector<double> values = load_checked_blob(j, path);

  VaeModel vae;
  std::size_t offset = 0;
  vae.encoder = layers_from_json(j.at("encoder").at("layers"), j.at("encoder").at("readout"), values,
                                 offset, "encoder");
  vae.decoder = layers_from_json(j.at("decoder").at("layers"), j.at("decoder").at("readout"), values,
                                 offset, "decoder");
  if (offset != values.size()) {
    throw IoError(path + ": blob length inconsistent with declared layer dims");
  }
  const json& vj = j.at("vae");
  vae.latent_dim = vj.at("latent_dim").get<std::size_t>();
  vae.beta = vj.at("beta").get<double>();
  vae.latent_mean = vj.value("latent_mean", std::vector<double>(vae.latent_dim, 0.0));
  vae.latent_std = vj.value("latent_std", std::vector<double>(vae.latent_dim, 1.0));
  vae.validate();
  return vae;
}

}  // namespace mlfx
