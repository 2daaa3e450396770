#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fedgan/numerics.hpp"

namespace fedgan {

/// One fully-connected layer: weight is out_dim x in_dim, bias has out_dim
/// entries. The same struct doubles as a gradient / Adam-moment buffer,
/// which is always shaped exactly like the parameters it tracks.
struct LayerParams {
  DenseMatrix weight;
  std::vector<double> bias;
};

/// Parameters of one MLP. Hidden layers use leaky ReLU, the last layer is
/// linear.
struct MLPParams {
  std::vector<LayerParams> layers;
  double leaky_slope = 0.2;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
  std::size_t param_count() const;
};

using ParamGrads = std::vector<LayerParams>;

ParamGrads zeros_like(const MLPParams& params);
bool same_shapes(const MLPParams& a, const MLPParams& b);

/// Generator + discriminator pair making up one GAN.
struct ModelPair {
  MLPParams generator;
  MLPParams discriminator;
};

struct AdamState {
  ParamGrads first_moment;
  ParamGrads second_moment;
  long step_count = 0;
};

AdamState make_adam_state(const MLPParams& params);

/// Layer sizes for both networks, e.g. gen {8, 64, 64, 2}, disc {2, 64, 64, 1}.
struct ArchSpec {
  std::vector<std::size_t> gen_sizes;
  std::vector<std::size_t> disc_sizes;
  double leaky_slope = 0.2;
};

struct TrainConfig {
  double lr_g = 2e-3;
  double lr_d = 2e-3;
  double adam_beta1 = 0.0;   // momentum off: common for adversarial training
  double adam_beta2 = 0.99;
  double adam_eps = 1e-8;
  std::size_t batch_size = 64;
  std::size_t latent_dim = 8;
  std::size_t local_steps = 200;  // optimizer steps per federated round
  std::uint64_t seed = 0;

  // Desk-scale architecture knobs.
  std::size_t data_dim = 2;
  std::vector<std::size_t> gen_hidden = {64, 64};
  std::vector<std::size_t> disc_hidden = {64, 64};
  double leaky_slope = 0.2;

  ArchSpec arch() const;
};

/// Deterministic model init: weights from a fan-in scaled normal, biases
/// zero. Throws InvalidArchitecture when layer sizes do not chain or the
/// generator output does not match the discriminator input.
ModelPair init_model(const ArchSpec& arch, std::uint64_t seed);

/// Batched forward passes. z is batch x latent_dim, x is batch x data_dim;
/// disc_forward returns batch x 1 logits.
DenseMatrix gen_forward(const MLPParams& g, const DenseMatrix& z);
DenseMatrix disc_forward(const MLPParams& d, const DenseMatrix& x);

/// Gradients of the non-saturating logistic GAN losses:
///   loss_d = mean softplus(-D(real)) + mean softplus(D(G(z)))
///   loss_g = mean softplus(-D(G(z)))
/// grad_d is d(loss_d)/d(theta_d), grad_g is d(loss_g)/d(theta_g), both
/// evaluated at the given parameters.
struct GanGrads {
  ParamGrads grad_g;
  ParamGrads grad_d;
  double loss_g = 0.0;
  double loss_d = 0.0;
};

GanGrads gan_backward(const ModelPair& model, const DenseMatrix& real_batch,
                      const DenseMatrix& z_batch);

/// Bias-corrected Adam step, in place; state.step_count is incremented.
void adam_update(MLPParams& params, const ParamGrads& grads, AdamState& state, double lr,
                 double beta1, double beta2, double eps);

/// Sampling helpers used by local_train. They are part of the frozen
/// training protocol: one mt19937_64 seeded with round_seed drives, per
/// step, sample_rows(real) then sample_gaussian(z) for the discriminator
/// update, then sample_gaussian(z) again for the generator update.
DenseMatrix sample_rows(const DenseMatrix& data, std::size_t n, std::mt19937_64& rng);
DenseMatrix sample_gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

struct LocalTrainResult {
  ModelPair model;
  double mean_loss_g = 0.0;
  double mean_loss_d = 0.0;
};

/// Runs cfg.local_steps alternating discriminator/generator Adam steps
/// starting from `model`. Optimizer state is created fresh for the round;
/// the result is a pure function of (model, dataset, cfg, round_seed).
LocalTrainResult local_train(const ModelPair& model, const DenseMatrix& dataset,
                             const TrainConfig& cfg, std::uint64_t round_seed);

}  // namespace fedgan
