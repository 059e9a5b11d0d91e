#include "mlfx/autoencoder.hpp"

#include <algorithm>

#include "mlfx/common.hpp"

namespace mlfx {

std::string to_string(MlfKind k) {
  switch (k) {
    case MlfKind::FlatSeg: return "flat-seg";
    case MlfKind::HierSeg: return "hier-seg";
    case MlfKind::Vae: return "vae";
  }
  return "?";
}

MlfKind mlf_kind_from_string(const std::string& s) {
  if (s == "flat-seg" || s == "flat") return MlfKind::FlatSeg;
  if (s == "hier-seg" || s == "hier") return MlfKind::HierSeg;
  if (s == "vae") return MlfKind::Vae;
  throw ValidationError("unknown MLF kind: " + s);
}

MlfAutoencoder build_segmentation_autoencoder(const Image& img, const SegmentationHierarchy& h) {
  if (h.num_levels() == 0) throw ValidationError("segmentation autoencoder: empty hierarchy");
  if (h.height != img.height || h.width != img.width ||
      h.finest().labels.size() != img.positions()) {
    throw ValidationError("segmentation autoencoder: hierarchy does not cover the image");
  }

  const std::size_t levels = h.num_levels();
  const std::size_t d = img.scalars();
  std::vector<DenseLayer> layers;
  layers.reserve(levels + 1);

  // Containment layers between consecutive segmentation levels: weight 1
  // where the finer region lies inside the coarser one.
  for (std::size_t k = 0; k + 1 < levels; ++k) {
    const std::size_t n_in = h.levels[k].num_regions;
    const std::size_t n_out = h.levels[k + 1].num_regions;
    Tensor w({n_out, n_in});
    for (std::uint32_t child = 0; child < n_out; ++child) {
      w.at(child, h.parents[k][child]) = 1.0;
    }
    layers.emplace_back(std::move(w), Tensor({n_out}), Activation::Identity);
  }

  // Finest regions fan out to the scalar slots of their member pixels.
  {
    const Partition& fine = h.finest();
    Tensor w({d, static_cast<std::size_t>(fine.num_regions)});
    for (std::size_t p = 0; p < fine.labels.size(); ++p) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        w.at(p * img.channels + ch, fine.labels[p]) = 1.0;
      }
    }
    layers.emplace_back(std::move(w), Tensor({d}), Activation::Identity);
  }

  // Diagonal layer carrying the pixel values themselves.
  {
    Tensor w({d, d});
    for (std::size_t s = 0; s < d; ++s) w.at(s, s) = img.pixels[s];
    layers.emplace_back(std::move(w), Tensor({d}), Activation::Identity);
  }

  MlfAutoencoder ae;
  ae.kind = levels == 1 ? MlfKind::FlatSeg : MlfKind::HierSeg;
  ae.input = Tensor({d}, img.pixels);
  ae.encoding = Tensor({static_cast<std::size_t>(h.coarsest().num_regions)});
  for (double& v : ae.encoding.data()) v = 1.0;
  ae.decoder = LayeredNetwork(std::move(layers), Readout::Logits);
  ae.residual = build_residual_layer(ae.input, ae.decoder, ae.encoding);
  ae.channels = img.channels;
  ae.hierarchy = h;
  return ae;
}

MlfAutoencoder build_flat_autoencoder(const Image& img, const Partition& part) {
  SegmentationHierarchy h;
  h.height = img.height;
  h.width = img.width;
  h.levels = {part};
  return build_segmentation_autoencoder(img, h);
}

Tensor build_residual_layer(const Tensor& x, const LayeredNetwork& decoder, const Tensor& h) {
  if (decoder.output_dim() != x.numel()) {
    throw ValidationError("residual: decoder output dim does not match input length");
  }
  const Tensor decoded = predict(decoder, h);
  Tensor r({x.numel()});
  for (std::size_t i = 0; i < x.numel(); ++i) r[i] = x[i] - decoded[i];
  return r;
}

DenseLayer residual_layer(const Tensor& r, std::size_t in_dim) {
  return DenseLayer(Tensor({r.numel(), in_dim}), r, Activation::Identity);
}

MlfAutoencoder build_vae_autoencoder(const VaeModel& vae, const Tensor& x) {
  vae.validate();
  if (x.numel() != vae.encoder.input_dim()) {
    throw ValidationError("vae autoencoder: input length does not match encoder");
  }
  MlfAutoencoder ae;
  ae.kind = MlfKind::Vae;
  ae.input = Tensor({x.numel()}, x.data());
  ae.encoding = vae_encode(vae, x).mu;  // deterministic mean, no sampling
  ae.decoder = vae.decoder;
  ae.residual = build_residual_layer(ae.input, ae.decoder, ae.encoding);
  ae.latent_dim = vae.latent_dim;
  return ae;
}

Tensor decode(const MlfAutoencoder& ae, const Tensor& h, bool add_residual) {
  Tensor out = predict(ae.decoder, h);
  if (add_residual) {
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += ae.residual[i];
  }
  return out;
}

}  // namespace mlfx
