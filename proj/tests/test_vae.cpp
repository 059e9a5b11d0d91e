#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlfx/autoencoder.hpp"
#include "mlfx/common.hpp"
#include "mlfx/vae.hpp"
#include "test_support.hpp"

using namespace mlfx;
using namespace mlfx::test;

namespace {

Dataset repeated_image(std::size_t copies, std::size_t dim, std::uint64_t seed) {
  Dataset data;
  const Tensor x = random_vector(dim, seed, 0.0, 1.0);
  for (std::size_t i = 0; i < copies; ++i) data.inputs.push_back(x);
  return data;
}

double vae_elbo(const VaeModel& vae, const Tensor& x, const Tensor& eps) {
  const VaeEncoding enc = vae_encode(vae, x);
  const Tensor z = vae_sample(enc.mu, enc.logvar, eps);
  return vae_loss(x, predict(vae.decoder, z), enc.mu, enc.logvar, vae.beta);
}

}  // namespace

TEST_CASE("kl of the prior match is zero, and 0.5 for a unit mean shift") {
  CHECK(vae_kl(vec({0.0}), vec({0.0})) == doctest::Approx(0.0));
  CHECK(vae_kl(vec({1.0}), vec({0.0})) == doctest::Approx(0.5));
  CHECK(vae_kl(vec({0.0, 1.0}), vec({0.0, 0.0})) == doctest::Approx(0.5));
}

TEST_CASE("perfect reconstruction at the prior has zero loss") {
  const auto x = vec({0.2, 0.8});
  CHECK(vae_loss(x, x, vec({0.0}), vec({0.0}), 4.0) == doctest::Approx(0.0));
}

TEST_CASE("kl is nonnegative for random parameters") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto mu = random_vector(5, seed, -3.0, 3.0);
    const auto logvar = random_vector(5, derive_seed(seed, 1), -4.0, 4.0);
    CHECK(vae_kl(mu, logvar) >= 0.0);
  }
}

TEST_CASE("reparameterized sample with unit variance and zero mean equals epsilon") {
  const auto eps = vec({0.3, -1.2, 0.9});
  const Tensor z = vae_sample(vec({0.0, 0.0, 0.0}), vec({0.0, 0.0, 0.0}), eps);
  CHECK(z.data() == eps.data());
}

TEST_CASE("clamped log-variance makes the sample collapse to the mean") {
  const auto mu = vec({0.5, -0.5});
  const auto eps = vec({1.0, -1.0});
  const Tensor z = vae_sample(mu, vec({-10.0, -10.0}), eps);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(z[i] - mu[i]) <= 1e-2 * std::abs(eps[i]));
  }
}

TEST_CASE("encode clamps the log-variance head") {
  VaeModel vae = make_vae(4, 2, 1.0, 3);
  // Force a huge pre-clamp logvar via the last encoder bias.
  vae.encoder.layers.back().biases[2] = 1e6;
  vae.encoder.layers.back().biases[3] = -1e6;
  const VaeEncoding enc = vae_encode(vae, vec({0.1, 0.2, 0.3, 0.4}));
  CHECK(enc.logvar[0] == 10.0);
  CHECK(enc.logvar[1] == -10.0);
}

TEST_CASE("analytic elbo gradients match finite differences") {
  const double step = 1e-5;
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    VaeModel vae;
    vae.latent_dim = 2;
    vae.beta = 1.5;
    vae.encoder = make_mlp({4, 6, 4}, Activation::Relu, Activation::Identity, Readout::Logits,
                           derive_seed(seed, 1));
    vae.decoder = make_mlp({2, 5, 4}, Activation::Relu, Activation::Identity, Readout::Logits,
                           derive_seed(seed, 2));
    const Tensor x = random_vector(4, derive_seed(seed, 3), 0.0, 1.0);
    Tensor eps({2});
    Rng rng(derive_seed(seed, 4));
    for (double& v : eps.data()) v = rng.normal();

    const VaeGradients g = vae_sample_gradients(vae, x, eps);
    CHECK(g.loss == doctest::Approx(vae_elbo(vae, x, eps)));

    auto check_net = [&](LayeredNetwork& netref, const Gradients& grads) {
      for (std::size_t k = 0; k < netref.layers.size(); ++k) {
        auto check_param = [&](Tensor& param, const Tensor& grad) {
          for (std::size_t i = 0; i < param.numel(); ++i) {
            const double saved = param[i];
            param[i] = saved + step;
            const double up = vae_elbo(vae, x, eps);
            param[i] = saved - step;
            const double down = vae_elbo(vae, x, eps);
            param[i] = saved;
            CHECK(rel_err(grad[i], (up - down) / (2.0 * step)) < 1e-4);
          }
        };
        check_param(netref.layers[k].weights, grads.weights[k]);
        check_param(netref.layers[k].biases, grads.biases[k]);
      }
    };
    check_net(vae.encoder, g.encoder);
    check_net(vae.decoder, g.decoder);
  }
}

TEST_CASE("vae training is deterministic and reconstruction improves") {
  Dataset data;
  for (std::uint64_t i = 0; i < 12; ++i) {
    data.inputs.push_back(random_vector(9, derive_seed(4, i), 0.0, 1.0));
  }
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.learning_rate = 1e-3;
  cfg.seed = 99;
  const auto a = train_vae(data, 3, 1.0, cfg);
  const auto b = train_vae(data, 3, 1.0, cfg);
  for (std::size_t k = 0; k < a.vae.encoder.layers.size(); ++k) {
    CHECK(a.vae.encoder.layers[k].weights.data() == b.vae.encoder.layers[k].weights.data());
  }
  REQUIRE(a.epoch_recon.size() == 8);
  CHECK(a.epoch_recon.back() <= a.epoch_recon.front());
}

TEST_CASE("a single repeated image is memorized with beta zero") {
  const Dataset data = repeated_image(8, 16, 7);
  double pixel_variance = 0.0;
  {
    double mean = 0.0;
    for (double v : data.inputs.front().data()) mean += v;
    mean /= 16.0;
    for (double v : data.inputs.front().data()) pixel_variance += (v - mean) * (v - mean);
    pixel_variance /= 16.0;
  }

  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 2e-3;
  cfg.batch_size = 8;
  cfg.seed = 11;
  const auto result = train_vae(data, 2, 0.0, cfg);
  const double mse = result.epoch_recon.back() / 16.0;  // per-pixel
  CHECK(mse < 0.01 * pixel_variance);
}

TEST_CASE("a huge beta collapses the posterior mean toward zero") {
  Dataset data;
  for (std::uint64_t i = 0; i < 10; ++i) {
    data.inputs.push_back(random_vector(8, derive_seed(21, i), 0.0, 1.0));
  }
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-7;
  cfg.batch_size = 10;
  cfg.seed = 17;
  const auto result = train_vae(data, 2, 1e6, cfg);

  double norm = 0.0;
  for (const Tensor& x : data.inputs) {
    const VaeEncoding enc = vae_encode(result.vae, x);
    for (std::size_t i = 0; i < enc.mu.numel(); ++i) norm += enc.mu[i] * enc.mu[i];
  }
  norm = std::sqrt(norm / static_cast<double>(data.size()));
  CHECK(norm < 0.1);
}

TEST_CASE("vae autoencoder restores the input through the residual") {
  const auto train = repeated_image(4, 12, 3);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-3;
  cfg.seed = 31;
  const VaeModel vae = train_vae(train, 10, 4.0, cfg).vae;

  const Tensor x = random_vector(12, 90, 0.0, 1.0);
  const MlfAutoencoder ae = build_vae_autoencoder(vae, x);
  CHECK(ae.kind == MlfKind::Vae);
  CHECK(ae.encoding.numel() == 10);
  CHECK(ae.latent_dim == 10);

  const Tensor restored = decode(ae, ae.encoding, /*add_residual=*/true);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    CHECK(std::abs(restored[i] - x[i]) <= 1e-12);
  }
  // Encoding is the deterministic posterior mean.
  CHECK(ae.encoding.data() == vae_encode(vae, x).mu.data());
}

TEST_CASE("training rejects invalid configs and empty data") {
  Dataset empty;
  TrainConfig cfg;
  CHECK_THROWS_AS(train_vae(empty, 2, 1.0, cfg), ValidationError);
  Dataset data = repeated_image(2, 4, 1);
  CHECK_THROWS_AS(train_vae(data, 2, -1.0, cfg), ValidationError);
  CHECK_THROWS_AS(train_vae(data, 0, 1.0, cfg), ValidationError);
}
