#include "mlfx/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlfx/common.hpp"
#include "mlfx/rng.hpp"

namespace mlfx {

namespace {
constexpr double kLogvarMin = -10.0;
constexpr double kLogvarMax = 10.0;
}  // namespace

void VaeModel::validate() const {
  encoder.validate();
  decoder.validate();
  if (latent_dim == 0) throw ValidationError("vae: latent dim must be positive");
  if (encoder.output_dim() != 2 * latent_dim) {
    throw ValidationError("vae: encoder output dim must be 2 * latent_dim");
  }
  if (decoder.input_dim() != latent_dim) {
    throw ValidationError("vae: decoder input dim must equal latent_dim");
  }
  if (decoder.output_dim() != encoder.input_dim()) {
    throw ValidationError("vae: decoder output dim must equal encoder input dim");
  }
}

VaeEncoding vae_encode(const VaeModel& vae, const Tensor& x) {
  vae.validate();
  const Tensor out = predict(vae.encoder, x);
  const std::size_t m = vae.latent_dim;
  VaeEncoding enc{Tensor({m}), Tensor({m})};
  for (std::size_t i = 0; i < m; ++i) {
    enc.mu[i] = out[i];
    enc.logvar[i] = std::clamp(out[m + i], kLogvarMin, kLogvarMax);
  }
  return enc;
}

Tensor vae_sample(const Tensor& mu, const Tensor& logvar, const Tensor& eps) {
  if (mu.numel() != logvar.numel() || mu.numel() != eps.numel()) {
    throw ValidationError("vae_sample: mu/logvar/eps dims must agree");
  }
  Tensor z({mu.numel()});
  for (std::size_t i = 0; i < z.numel(); ++i) {
    z[i] = mu[i] + std::exp(0.5 * logvar[i]) * eps[i];
  }
  return z;
}

Tensor vae_sample(const Tensor& mu, const Tensor& logvar, std::uint64_t seed) {
  Rng rng(seed);
  Tensor eps({mu.numel()});
  for (std::size_t i = 0; i < eps.numel(); ++i) eps[i] = rng.normal();
  return vae_sample(mu, logvar, eps);
}

double vae_kl(const Tensor& mu, const Tensor& logvar) {
  if (mu.numel() != logvar.numel()) throw ValidationError("vae_kl: dims must agree");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.numel(); ++i) {
    acc += 1.0 + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]);
  }
  return -0.5 * acc;
}

double vae_loss(const Tensor& x, const Tensor& xhat, const Tensor& mu, const Tensor& logvar,
                double beta) {
  if (beta < 0.0) throw ValidationError("vae_loss: beta must be >= 0");
  if (x.numel() != xhat.numel()) throw ValidationError("vae_loss: x/xhat dims must agree");
  double recon = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = xhat[i] - x[i];
    recon += d * d;
  }
  return recon + beta * vae_kl(mu, logvar);
}

VaeGradients vae_sample_gradients(const VaeModel& vae, const Tensor& x, const Tensor& eps) {
  vae.validate();
  const std::size_t m = vae.latent_dim;
  if (eps.numel() != m) throw ValidationError("vae gradients: eps length must be latent_dim");

  const ActivationTrace enc_trace = forward(vae.encoder, x);
  const Tensor& enc_out = enc_trace.logits();
  Tensor mu({m}), logvar({m});
  std::vector<bool> clamped(m);
  for (std::size_t i = 0; i < m; ++i) {
    mu[i] = enc_out[i];
    const double raw = enc_out[m + i];
    clamped[i] = raw < kLogvarMin || raw > kLogvarMax;
    logvar[i] = std::clamp(raw, kLogvarMin, kLogvarMax);
  }
  const Tensor z = vae_sample(mu, logvar, eps);
  const ActivationTrace dec_trace = forward(vae.decoder, z);
  const Tensor& xhat = dec_trace.logits();

  VaeGradients out{Gradients(vae.encoder), Gradients(vae.decoder)};
  out.kl = vae_kl(mu, logvar);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = xhat[i] - x[i];
    out.recon += d * d;
  }
  out.loss = out.recon + vae.beta * out.kl;

  Tensor drecon({x.numel()});
  for (std::size_t i = 0; i < x.numel(); ++i) drecon[i] = 2.0 * (xhat[i] - x[i]);
  out.decoder = backprop(vae.decoder, dec_trace, drecon);
  const Tensor& dz = out.decoder.input;

  Tensor denc({2 * m});
  for (std::size_t i = 0; i < m; ++i) {
    denc[i] = dz[i] + vae.beta * mu[i];
    const double dlogvar =
        dz[i] * eps[i] * 0.5 * std::exp(0.5 * logvar[i]) - 0.5 * vae.beta * (1.0 - std::exp(logvar[i]));
    denc[m + i] = clamped[i] ? 0.0 : dlogvar;
  }
  out.encoder = backprop(vae.encoder, enc_trace, denc);
  return out;
}

VaeModel make_vae(std::size_t input_dim, std::size_t latent_dim, double beta, std::uint64_t seed) {
  if (latent_dim == 0) throw ValidationError("make_vae: latent dim must be positive");
  VaeModel vae;
  vae.latent_dim = latent_dim;
  vae.beta = beta;
  vae.encoder = make_mlp({input_dim, 256, 64, 2 * latent_dim}, Activation::Relu,
                         Activation::Identity, Readout::Logits, derive_seed(seed, 0xE1));
  vae.decoder = make_mlp({latent_dim, 64, 256, input_dim}, Activation::Relu, Activation::Identity,
                         Readout::Logits, derive_seed(seed, 0xD2));
  vae.latent_mean.assign(latent_dim, 0.0);
  vae.latent_std.assign(latent_dim, 1.0);
  return vae;
}

VaeTrainResult train_vae(const Dataset& data, std::size_t latent_dim, double beta,
                         const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (cfg.batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (beta < 0.0) throw ValidationError("train_vae: beta must be >= 0");
  if (data.inputs.empty()) throw ValidationError("train_vae: dataset is empty");

  VaeTrainResult result;
  result.vae = make_vae(data.feature_dim(), latent_dim, beta, cfg.seed);
  if (cfg.epochs == 0) return result;

  Gradients enc_velocity(result.vae.encoder);
  Gradients dec_velocity(result.vae.decoder);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5u));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    Rng noise_rng(derive_seed(cfg.seed, 0xE5, epoch));
    double epoch_loss = 0.0;
    double epoch_recon = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      Gradients enc_batch(result.vae.encoder);
      Gradients dec_batch(result.vae.decoder);
      for (std::size_t idx = start; idx < end; ++idx) {
        Tensor eps({latent_dim});
        for (std::size_t i = 0; i < latent_dim; ++i) eps[i] = noise_rng.normal();
        const VaeGradients g = vae_sample_gradients(result.vae, data.inputs[order[idx]], eps);
        epoch_loss += g.loss;
        epoch_recon += g.recon;
        enc_batch.accumulate(g.encoder);
        dec_batch.accumulate(g.decoder);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      enc_batch.scale(inv);
      dec_batch.scale(inv);
      apply_update(result.vae.encoder, enc_batch, cfg, enc_velocity);
      apply_update(result.vae.decoder, dec_batch, cfg, dec_velocity);
    }
    epoch_loss /= static_cast<double>(data.size());
    epoch_recon /= static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("train_vae: training diverged (non-finite loss)");
    }
    result.epoch_losses.push_back(epoch_loss);
    result.epoch_recon.push_back(epoch_recon);
  }

  // Latent statistics over the training set, for traversal ranges.
  const std::size_t m = latent_dim;
  std::vector<double> mean(m, 0.0), sq(m, 0.0);
  for (const Tensor& x : data.inputs) {
    const VaeEncoding enc = vae_encode(result.vae, x);
    for (std::size_t i = 0; i < m; ++i) {
      mean[i] += enc.mu[i];
      sq[i] += enc.mu[i] * enc.mu[i];
    }
  }
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < m; ++i) {
    mean[i] /= n;
    const double var = std::max(0.0, sq[i] / n - mean[i] * mean[i]);
    sq[i] = std::sqrt(var);
  }
  result.vae.latent_mean = std::move(mean);
  result.vae.latent_std = std::move(sq);
  return result;
}

}  // namespace mlfx
