#pragma once

#include <cstddef>
#include <string>

#include "mlfx/image.hpp"
#include "mlfx/network.hpp"
#include "mlfx/segmentation.hpp"
#include "mlfx/tensor.hpp"
#include "mlfx/vae.hpp"

namespace mlfx {

enum class MlfKind { FlatSeg, HierSeg, Vae };

std::string to_string(MlfKind k);
MlfKind mlf_kind_from_string(const std::string& s);

// Input-specific encoder/decoder pair with the exactness-restoring residual:
// decode(encoding) + residual reproduces the input elementwise. For the
// segmentation kinds the encoding is the all-ones vector over the coarsest
// level and the residual is zero; for the VAE kind the encoding is the
// posterior mean.
struct MlfAutoencoder {
  MlfKind kind = MlfKind::FlatSeg;
  Tensor input;             // flattened image this autoencoder was built for
  Tensor encoding;          // h
  LayeredNetwork decoder;   // h -> input space
  Tensor residual;          // r = input - decoder(encoding)
  std::size_t channels = 1;

  // MLF catalog: the hierarchy for segmentation kinds, latent indices for VAE.
  SegmentationHierarchy hierarchy;
  std::size_t latent_dim = 0;

  std::size_t mlf_count() const { return encoding.numel(); }
  std::size_t input_dim() const { return input.numel(); }
};

// Decoder of K+1 identity layers with zero biases: the 0/1 containment
// matrices between consecutive levels, region->pixel membership, and a final
// diagonal layer carrying the pixel values. decoder(all-ones) == image.
MlfAutoencoder build_segmentation_autoencoder(const Image& img, const SegmentationHierarchy& h);

// Flat convenience: wraps a single partition as a one-level hierarchy.
MlfAutoencoder build_flat_autoencoder(const Image& img, const Partition& part);

// r = x - decoder(h).
Tensor build_residual_layer(const Tensor& x, const LayeredNetwork& decoder, const Tensor& h);

// The residual realized as a network layer: zero weights, bias r, identity.
DenseLayer residual_layer(const Tensor& r, std::size_t in_dim);

// Encoder = posterior mean mu(x); decoder = the VAE decoder network.
MlfAutoencoder build_vae_autoencoder(const VaeModel& vae, const Tensor& x);

// decoder(h), optionally + residual.
Tensor decode(const MlfAutoencoder& ae, const Tensor& h, bool add_residual);

}  // namespace mlfx
