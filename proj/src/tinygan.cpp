#include "fedgan/tinygan.hpp"

#include <cmath>
#include <string>

#include "fedgan/errors.hpp"

namespace fedgan {

namespace {

double softplus(double x) {
  // max(x, 0) + log1p(exp(-|x|)) is overflow-safe on both sides
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// y = x * W^T + b, x is n x in, W is out x in
DenseMatrix linear_forward(const DenseMatrix& w, const std::vector<double>& b,
                           const DenseMatrix& x) {
  const std::size_t n = x.rows;
  const std::size_t out = w.rows;
  const std::size_t in = w.cols;
  DenseMatrix y(n, out);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double* yi = y.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.row(o);
      double s = b[o];
      for (std::size_t k = 0; k < in; ++k) s += xi[k] * wo[k];
      yi[o] = s;
    }
  }
  return y;
}

// dw += delta^T * x, db += column sums of delta
void accumulate_param_grads(const DenseMatrix& delta, const DenseMatrix& x, LayerParams& g) {
  const std::size_t n = delta.rows;
  const std::size_t out = delta.cols;
  const std::size_t in = x.cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double* di = delta.row(i);
    const double* xi = x.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = di[o];
      g.bias[o] += d;
      double* gw = g.weight.row(o);
      for (std::size_t k = 0; k < in; ++k) gw[k] += d * xi[k];
    }
  }
}

// dx = delta * W
DenseMatrix input_grad(const DenseMatrix& delta, const DenseMatrix& w) {
  const std::size_t n = delta.rows;
  const std::size_t out = w.rows;
  const std::size_t in = w.cols;
  DenseMatrix dx(n, in, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* di = delta.row(i);
    double* dxi = dx.row(i);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = di[o];
      const double* wo = w.row(o);
      for (std::size_t k = 0; k < in; ++k) dxi[k] += d * wo[k];
    }
  }
  return dx;
}

struct ForwardTape {
  std::vector<DenseMatrix> acts;  // acts[l] is the input of layer l; acts.back() is the output
  std::vector<DenseMatrix> pre;   // pre[l] is the pre-activation of layer l
};

DenseMatrix mlp_forward(const MLPParams& p, const DenseMatrix& x, ForwardTape* tape) {
  if (p.layers.empty()) throw InvalidArchitecture("mlp_forward: model has no layers");
  if (x.cols != p.input_dim()) {
    throw ShapeError("mlp_forward: input width " + std::to_string(x.cols) +
                     " does not match layer input " + std::to_string(p.input_dim()));
  }
  DenseMatrix cur = x;
  if (tape) {
    tape->acts.clear();
    tape->pre.clear();
  }
  const std::size_t last = p.layers.size() - 1;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (tape) tape->acts.push_back(cur);
    DenseMatrix pre = linear_forward(p.layers[l].weight, p.layers[l].bias, cur);
    if (l < last) {
      if (tape) tape->pre.push_back(pre);
      for (double& v : pre.entries)
        if (v <= 0.0) v *= p.leaky_slope;
      cur = std::move(pre);
    } else {
      if (tape) tape->pre.push_back(pre);
      cur = std::move(pre);
    }
  }
  if (tape) tape->acts.push_back(cur);
  return cur;
}

// Walks the tape backwards from delta = dL/d(output). Parameter gradients
// are accumulated into *grads when given; returns dL/d(input) when
// want_input is set.
DenseMatrix mlp_backward(const MLPParams& p, const ForwardTape& tape, DenseMatrix delta,
                         ParamGrads* grads, bool want_input) {
  const std::size_t last = p.layers.size() - 1;
  for (std::size_t l = last + 1; l-- > 0;) {
    if (l < last) {
      // delta arrives w.r.t. the post-activation output of layer l
      const DenseMatrix& pre = tape.pre[l];
      for (std::size_t i = 0; i < delta.entries.size(); ++i)
        if (pre.entries[i] <= 0.0) delta.entries[i] *= p.leaky_slope;
    }
    if (grads) accumulate_param_grads(delta, tape.acts[l], (*grads)[l]);
    if (l > 0 || want_input) delta = input_grad(delta, p.layers[l].weight);
  }
  return delta;
}

// d/ds of mean softplus(sign * s) as an n x 1 column: sign * sigmoid(sign * s) / n
DenseMatrix softplus_mean_grad(const DenseMatrix& logits, double sign) {
  const double n = static_cast<double>(logits.rows);
  DenseMatrix g(logits.rows, 1);
  for (std::size_t i = 0; i < logits.rows; ++i)
    g(i, 0) = sign * sigmoid(sign * logits(i, 0)) / n;
  return g;
}

double mean_softplus(const DenseMatrix& logits, double sign) {
  double s = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) s += softplus(sign * logits(i, 0));
  return s / static_cast<double>(logits.rows);
}

void check_finite_or_throw(const DenseMatrix& m, const char* what) {
  if (!all_finite(m)) {
    throw NumericalFailure(std::string("gan_backward: non-finite values in ") + what);
  }
}

// Discriminator-phase gradients only: loss_d and grad_d.
std::pair<ParamGrads, double> disc_phase(const ModelPair& model, const DenseMatrix& real,
                                         const DenseMatrix& z) {
  const DenseMatrix fake = mlp_forward(model.generator, z, nullptr);
  check_finite_or_throw(fake, "generator output");
  ForwardTape tape_real, tape_fake;
  const DenseMatrix s_real = mlp_forward(model.discriminator, real, &tape_real);
  const DenseMatrix s_fake = mlp_forward(model.discriminator, fake, &tape_fake);
  check_finite_or_throw(s_real, "real logits");
  check_finite_or_throw(s_fake, "fake logits");

  const double loss_d = mean_softplus(s_real, -1.0) + mean_softplus(s_fake, 1.0);

  ParamGrads grad_d = zeros_like(model.discriminator);
  mlp_backward(model.discriminator, tape_real, softplus_mean_grad(s_real, -1.0), &grad_d,
               false);
  mlp_backward(model.discriminator, tape_fake, softplus_mean_grad(s_fake, 1.0), &grad_d,
               false);
  return {std::move(grad_d), loss_d};
}

// Generator-phase gradients only: loss_g and grad_g.
std::pair<ParamGrads, double> gen_phase(const ModelPair& model, const DenseMatrix& z) {
  ForwardTape tape_g, tape_d;
  const DenseMatrix fake = mlp_forward(model.generator, z, &tape_g);
  check_finite_or_throw(fake, "generator output");
  const DenseMatrix s_fake = mlp_forward(model.discriminator, fake, &tape_d);
  check_finite_or_throw(s_fake, "fake logits");

  const double loss_g = mean_softplus(s_fake, -1.0);

  const DenseMatrix dfake = mlp_backward(model.discriminator, tape_d,
                                         softplus_mean_grad(s_fake, -1.0), nullptr, true);
  ParamGrads grad_g = zeros_like(model.generator);
  mlp_backward(model.generator, tape_g, dfake, &grad_g, false);
  return {std::move(grad_g), loss_g};
}

void validate_layer_chain(const std::vector<std::size_t>& sizes, const char* net) {
  if (sizes.size() < 2) {
    throw InvalidArchitecture(std::string("init_model: ") + net +
                              " needs at least an input and an output size");
  }
  for (std::size_t s : sizes) {
    if (s == 0)
      throw InvalidArchitecture(std::string("init_model: ") + net + " has a zero-width layer");
  }
}

}  // namespace

std::size_t MLPParams::param_count() const {
  std::size_t n = 0;
  for (const LayerParams& l : layers) n += l.weight.entries.size() + l.bias.size();
  return n;
}

ParamGrads zeros_like(const MLPParams& params) {
  ParamGrads g;
  g.reserve(params.layers.size());
  for (const LayerParams& l : params.layers) {
    LayerParams z;
    z.weight = DenseMatrix(l.weight.rows, l.weight.cols, 0.0);
    z.bias.assign(l.bias.size(), 0.0);
    g.push_back(std::move(z));
  }
  return g;
}

bool same_shapes(const MLPParams& a, const MLPParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (!a.layers[l].weight.same_shape(b.layers[l].weight)) return false;
    if (a.layers[l].bias.size() != b.layers[l].bias.size()) return false;
  }
  return true;
}

AdamState make_adam_state(const MLPParams& params) {
  AdamState s;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  s.step_count = 0;
  return s;
}

ArchSpec TrainConfig::arch() const {
  ArchSpec a;
  a.gen_sizes.push_back(latent_dim);
  a.gen_sizes.insert(a.gen_sizes.end(), gen_hidden.begin(), gen_hidden.end());
  a.gen_sizes.push_back(data_dim);
  a.disc_sizes.push_back(data_dim);
  a.disc_sizes.insert(a.disc_sizes.end(), disc_hidden.begin(), disc_hidden.end());
  a.disc_sizes.push_back(1);
  a.leaky_slope = leaky_slope;
  return a;
}

ModelPair init_model(const ArchSpec& arch, std::uint64_t seed) {
  validate_layer_chain(arch.gen_sizes, "generator");
  validate_layer_chain(arch.disc_sizes, "discriminator");
  if (arch.gen_sizes.back() != arch.disc_sizes.front()) {
    throw InvalidArchitecture("init_model: generator output dim " +
                              std::to_string(arch.gen_sizes.back()) +
                              " does not match discriminator input dim " +
                              std::to_string(arch.disc_sizes.front()));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto build = [&](const std::vector<std::size_t>& sizes) {
    MLPParams p;
    p.leaky_slope = arch.leaky_slope;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      LayerParams layer;
      layer.weight = DenseMatrix(out, in);
      const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
      for (double& w : layer.weight.entries) w = std_dev * normal(rng);
      layer.bias.assign(out, 0.0);
      p.layers.push_back(std::move(layer));
    }
    return p;
  };

  ModelPair model;
  model.generator = build(arch.gen_sizes);
  model.discriminator = build(arch.disc_sizes);
  return model;
}

DenseMatrix gen_forward(const MLPParams& g, const DenseMatrix& z) {
  return mlp_forward(g, z, nullptr);
}

DenseMatrix disc_forward(const MLPParams& d, const DenseMatrix& x) {
  return mlp_forward(d, x, nullptr);
}

GanGrads gan_backward(const ModelPair& model, const DenseMatrix& real_batch,
                      const DenseMatrix& z_batch) {
  if (real_batch.rows != z_batch.rows) {
    throw ShapeError("gan_backward: real batch has " + std::to_string(real_batch.rows) +
                     " rows but z batch has " + std::to_string(z_batch.rows));
  }
  if (real_batch.rows == 0) throw ShapeError("gan_backward: empty batch");

  GanGrads out;
  auto [grad_d, loss_d] = disc_phase(model, real_batch, z_batch);
  auto [grad_g, loss_g] = gen_phase(model, z_batch);
  out.grad_d = std::move(grad_d);
  out.grad_g = std::move(grad_g);
  out.loss_d = loss_d;
  out.loss_g = loss_g;
  return out;
}

void adam_update(MLPParams& params, const ParamGrads& grads, AdamState& state, double lr,
                 double beta1, double beta2, double eps) {
  if (grads.size() != params.layers.size() || state.first_moment.size() != params.layers.size() ||
      state.second_moment.size() != params.layers.size()) {
    throw ShapeError("adam_update: gradient/state layer count mismatch");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));

  auto step = [&](double& p, double g, double& m, double& v) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    p -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
  };

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    LayerParams& layer = params.layers[l];
    const LayerParams& g = grads[l];
    LayerParams& m = state.first_moment[l];
    LayerParams& v = state.second_moment[l];
    if (!layer.weight.same_shape(g.weight) || layer.bias.size() != g.bias.size()) {
      throw ShapeError("adam_update: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!layer.weight.same_shape(m.weight) || layer.bias.size() != m.bias.size() ||
        !layer.weight.same_shape(v.weight) || layer.bias.size() != v.bias.size()) {
      throw ShapeError("adam_update: optimizer state shape mismatch at layer " +
                       std::to_string(l));
    }
    for (std::size_t i = 0; i < layer.weight.entries.size(); ++i)
      step(layer.weight.entries[i], g.weight.entries[i], m.weight.entries[i],
           v.weight.entries[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
      step(layer.bias[i], g.bias[i], m.bias[i], v.bias[i]);
  }
}

DenseMatrix sample_rows(const DenseMatrix& data, std::size_t n, std::mt19937_64& rng) {
  if (data.rows == 0) throw EmptyDataset("sample_rows: dataset is empty");
  std::uniform_int_distribution<std::size_t> pick(0, data.rows - 1);
  DenseMatrix out(n, data.cols);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = pick(rng);
    for (std::size_t j = 0; j < data.cols; ++j) out(i, j) = data(r, j);
  }
  return out;
}

DenseMatrix sample_gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix out(rows, cols);
  for (double& v : out.entries) v = normal(rng);
  return out;
}

LocalTrainResult local_train(const ModelPair& model, const DenseMatrix& dataset,
                             const TrainConfig& cfg, std::uint64_t round_seed) {
  if (dataset.rows == 0) throw EmptyDataset("local_train: dataset is empty");
  if (cfg.local_steps < 1) throw InvalidSpec("local_train: local_steps must be >= 1");
  if (cfg.batch_size < 1) throw InvalidSpec("local_train: batch_size must be >= 1");
  if (dataset.cols != model.generator.output_dim()) {
    throw ShapeError("local_train: dataset width " + std::to_string(dataset.cols) +
                     " does not match generator output " +
                     std::to_string(model.generator.output_dim()));
  }

  LocalTrainResult result;
  result.model = model;
  AdamState state_g = make_adam_state(result.model.generator);
  AdamState state_d = make_adam_state(result.model.discriminator);

  std::mt19937_64 rng(round_seed);
  double sum_loss_d = 0.0;
  double sum_loss_g = 0.0;

  for (std::size_t step = 0; step < cfg.local_steps; ++step) {
    const DenseMatrix real = sample_rows(dataset, cfg.batch_size, rng);
    const DenseMatrix z_d = sample_gaussian(cfg.batch_size, cfg.latent_dim, rng);
    auto [grad_d, loss_d] = disc_phase(result.model, real, z_d);
    adam_update(result.model.discriminator, grad_d, state_d, cfg.lr_d, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps);
    sum_loss_d += loss_d;

    const DenseMatrix z_g = sample_gaussian(cfg.batch_size, cfg.latent_dim, rng);
    auto [grad_g, loss_g] = gen_phase(result.model, z_g);
    adam_update(result.model.generator, grad_g, state_g, cfg.lr_g, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps);
    sum_loss_g += loss_g;
  }

  result.mean_loss_d = sum_loss_d / static_cast<double>(cfg.local_steps);
  result.mean_loss_g = sum_loss_g / static_cast<double>(cfg.local_steps);
  return result;
}

}  // namespace fedgan
