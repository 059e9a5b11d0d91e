#pragma once

#include <string>

#include "mlfx/network.hpp"
#include "mlfx/vae.hpp"

namespace mlfx {

// Model files are a JSON manifest (version, layer dims, activations, readout,
// checksum) next to a little-endian float64 blob holding, per layer, the
// row-major weights followed by the biases. `path` names the manifest; the
// blob lives alongside it with a .bin extension.

void save_model(const LayeredNetwork& net, const std::string& path);
LayeredNetwork load_model(const std::string& path);

// VAE files reuse the same container with a "vae" manifest section; the blob
// holds the encoder parameters followed by the decoder parameters.
void save_vae(const VaeModel& vae, const std::string& path);
VaeModel load_vae(const std::string& path);

// FNV-1a 64 over a byte buffer; also used for input hashes in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t hash_file(const std::string& path);

}  // namespace mlfx
