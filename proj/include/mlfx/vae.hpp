#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mlfx/network.hpp"
#include "mlfx/tensor.hpp"
#include "mlfx/train.hpp"

namespace mlfx {

// Variational autoencoder halves. The encoder emits [mu, logvar] concatenated
// (2m values); the decoder maps an m-vector back to input space.
struct VaeModel {
  LayeredNetwork encoder;
  LayeredNetwork decoder;
  std::size_t latent_dim = 0;
  double beta = 4.0;
  // Training-set statistics of mu, used for latent traversal ranges.
  std::vector<double> latent_mean;
  std::vector<double> latent_std;

  void validate() const;
};

struct VaeEncoding {
  Tensor mu;
  Tensor logvar;  // clamped to [-10, 10]
};

VaeEncoding vae_encode(const VaeModel& vae, const Tensor& x);

// Reparameterized draw z = mu + exp(logvar/2) * eps.
Tensor vae_sample(const Tensor& mu, const Tensor& logvar, const Tensor& eps);
Tensor vae_sample(const Tensor& mu, const Tensor& logvar, std::uint64_t seed);

// KL(q(z|x) || N(0, I)) = -1/2 sum(1 + logvar - mu^2 - exp(logvar)).
double vae_kl(const Tensor& mu, const Tensor& logvar);

// Squared reconstruction error summed over pixels plus beta * KL.
double vae_loss(const Tensor& x, const Tensor& xhat, const Tensor& mu, const Tensor& logvar,
                double beta);

struct VaeGradients {
  Gradients encoder;
  Gradients decoder;
  double loss = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

// Loss and analytic parameter gradients for one sample with a fixed noise
// draw. Used by training and by the finite-difference checks.
VaeGradients vae_sample_gradients(const VaeModel& vae, const Tensor& x, const Tensor& eps);

struct VaeTrainResult {
  VaeModel vae;
  std::vector<double> epoch_losses;
  std::vector<double> epoch_recon;  // mean squared reconstruction sums
};

// Dense VAE at desk scale: encoder [d, 256, 64, 2m], decoder [m, 64, 256, d],
// relu hidden and identity output layers. Deterministic given (seed, config,
// data); throws NumericError on divergence.
VaeTrainResult train_vae(const Dataset& data, std::size_t latent_dim, double beta,
                         const TrainConfig& cfg);

VaeModel make_vae(std::size_t input_dim, std::size_t latent_dim, double beta, std::uint64_t seed);

}  // namespace mlfx
