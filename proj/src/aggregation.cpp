#include "fedgan/aggregation.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "fedgan/errors.hpp"

namespace fedgan {
namespace {

void validate_updates(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) {
    throw NoUpdates("no client updates to aggregate");
  }
  for (const ClientUpdate& update : updates) {
    if (update.dataset_size == 0) {
      throw InvalidInput("client " + std::to_string(update.client_id) +
                         ": dataset_size must be >= 1");
    }
    if (!same_shapes(update.model.generator, updates.front().model.generator) ||
        !same_shapes(update.model.discriminator, updates.front().model.discriminator)) {
      throw ShapeError("client " + std::to_string(update.client_id) +
                       ": model shapes differ across updates");
    }
  }
}

// Both FedAvg and FedCAR funnel through this accumulation so that equal
// normalized weights produce bit-identical results regardless of strategy.
MLPParams weighted_mlp_sum(const std::vector<const MLPParams*>& parts,
                           const std::vector<double>& weights) {
  MLPParams out = *parts.front();
  for (LayerParams& layer : out.layers) {
    std::fill(layer.weight.entries.begin(), layer.weight.entries.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double w = weights[i];
    const MLPParams& p = *parts[i];
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
      LayerParams& dst = out.layers[l];
      const LayerParams& src = p.layers[l];
      for (std::size_t k = 0; k < dst.weight.entries.size(); ++k) {
        dst.weight.entries[k] += w * src.weight.entries[k];
      }
      for (std::size_t k = 0; k < dst.bias.size(); ++k) {
        dst.bias[k] += w * src.bias[k];
      }
    }
  }
  return out;
}

std::vector<double> size_weights(const std::vector<ClientUpdate>& updates) {
  double total = 0.0;
  for (const ClientUpdate& update : updates) {
    total += static_cast<double>(update.dataset_size);
  }
  std::vector<double> weights;
  weights.reserve(updates.size());
  for (const ClientUpdate& update : updates) {
    weights.push_back(static_cast<double>(update.dataset_size) / total);
  }
  return weights;
}

std::vector<const MLPParams*> generators_of(const std::vector<ClientUpdate>& updates) {
  std::vector<const MLPParams*> parts;
  parts.reserve(updates.size());
  for (const ClientUpdate& update : updates) parts.push_back(&update.model.generator);
  return parts;
}

std::vector<const MLPParams*> discriminators_of(const std::vector<ClientUpdate>& updates) {
  std::vector<const MLPParams*> parts;
  parts.reserve(updates.size());
  for (const ClientUpdate& update : updates) parts.push_back(&update.model.discriminator);
  return parts;
}

}  // namespace

ServerOptState make_server_opt_state(const ParamsCodec& codec, double server_lr, double beta1,
                                     double beta2, double eps, ServerOptKind kind) {
  ServerOptState state;
  state.kind = kind;
  state.first_moment.assign(codec.total_param_count(), 0.0);
  state.second_moment.assign(codec.total_param_count(), 0.0);
  state.step_count = 0;
  state.server_lr = server_lr;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.eps = eps;
  return state;
}

ModelPair fedavg(const std::vector<ClientUpdate>& updates) {
  validate_updates(updates);
  const std::vector<double> weights = size_weights(updates);
  ModelPair out;
  out.generator = weighted_mlp_sum(generators_of(updates), weights);
  out.discriminator = weighted_mlp_sum(discriminators_of(updates), weights);
  return out;
}

std::pair<ModelPair, ServerOptState> fedopt_round(const ModelPair& global,
                                                  const std::vector<ClientUpdate>& updates,
                                                  ServerOptState state) {
  validate_updates(updates);
  const ParamsCodec codec = ParamsCodec::from_model(global);
  for (const ClientUpdate& update : updates) {
    if (!codec.matches(update.model)) {
      throw ShapeError("client " + std::to_string(update.client_id) +
                       ": model shape differs from the global model");
    }
  }
  if (state.first_moment.size() != codec.total_param_count() ||
      state.second_moment.size() != codec.total_param_count()) {
    throw ShapeError("server optimizer state does not match the model size");
  }

  const std::vector<double> flat_global = concat_params(global.generator, global.discriminator, codec);
  std::vector<double> delta(flat_global.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(updates.size());
  for (const ClientUpdate& update : updates) {
    const std::vector<double> flat =
        concat_params(update.model.generator, update.model.discriminator, codec);
    for (std::size_t k = 0; k < delta.size(); ++k) {
      delta[k] += (flat[k] - flat_global[k]) * inv_n;
    }
  }

  state.step_count += 1;
  std::vector<double> next(flat_global.size());
  if (state.kind == ServerOptKind::kAdam) {
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t k = 0; k < next.size(); ++k) {
      const double g = -delta[k];  // pseudo-gradient
      state.first_moment[k] = state.beta1 * state.first_moment[k] + (1.0 - state.beta1) * g;
      state.second_moment[k] = state.beta2 * state.second_moment[k] + (1.0 - state.beta2) * g * g;
      const double m_hat = state.first_moment[k] / bc1;
      const double v_hat = state.second_moment[k] / bc2;
      next[k] = flat_global[k] - state.server_lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  } else {
    for (std::size_t k = 0; k < next.size(); ++k) {
      next[k] = flat_global[k] + state.server_lr * delta[k];
    }
  }
  return {split_params(next, codec), std::move(state)};
}

WeightVector weights_from_fid(const FidMatrix& fid) {
  if (fid.n == 0) {
    throw InvalidInput("empty FID matrix");
  }
  WeightVector w;
  w.raw_totals = client_total_fid(fid);
  w.raw_alphas.reserve(fid.n);
  double sum = 0.0;
  for (double total : w.raw_totals) {
    const double alpha = 1.0 / std::max(total, kFidFloor);
    w.raw_alphas.push_back(alpha);
    sum += alpha;
  }
  w.alphas.reserve(fid.n);
  for (double alpha : w.raw_alphas) {
    w.alphas.push_back(alpha / sum);
  }
  return w;
}

WeightVector fedcar_weights(const std::vector<DenseMatrix>& fake_sets) {
  return weights_from_fid(pairwise_fid(fake_sets));
}

ModelPair fedcar_aggregate(const std::vector<ClientUpdate>& updates, const WeightVector& weights,
                           bool alpha_weighted_disc) {
  validate_updates(updates);
  if (weights.alphas.size() != updates.size()) {
    throw ShapeError("weight vector length " + std::to_string(weights.alphas.size()) +
                     " does not match " + std::to_string(updates.size()) + " updates");
  }
  double sum = 0.0;
  for (double alpha : weights.alphas) sum += alpha;
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InvalidInput("alphas must sum to 1");
  }
  ModelPair out;
  out.generator = weighted_mlp_sum(generators_of(updates), weights.alphas);
  out.discriminator = weighted_mlp_sum(
      discriminators_of(updates), alpha_weighted_disc ? weights.alphas : size_weights(updates));
  return out;
}

namespace {

class FedAvgAggregator final : public Aggregator {
 public:
  std::string name() const override { return "fedavg"; }
  AggregateOutcome run(const ModelPair&, const std::vector<ClientUpdate>& updates,
                       const std::vector<DenseMatrix>&) override {
    AggregateOutcome out;
    out.model = fedavg(updates);
    return out;
  }
};

class FedOptAggregator final : public Aggregator {
 public:
  FedOptAggregator(std::string name, ServerOptKind kind, const AggregatorOptions& opts)
      : name_(std::move(name)), kind_(kind), opts_(opts) {}

  std::string name() const override { return name_; }

  AggregateOutcome run(const ModelPair& global, const std::vector<ClientUpdate>& updates,
                       const std::vector<DenseMatrix>&) override {
    if (!state_) {
      state_ = make_server_opt_state(ParamsCodec::from_model(global), opts_.server_lr,
                                     opts_.server_beta1, opts_.server_beta2, opts_.server_eps,
                                     kind_);
    }
    auto [model, state] = fedopt_round(global, updates, std::move(*state_));
    state_ = std::move(state);
    AggregateOutcome out;
    out.model = std::move(model);
    return out;
  }

 private:
  std::string name_;
  ServerOptKind kind_;
  AggregatorOptions opts_;
  std::optional<ServerOptState> state_;
};

class FedCarAggregator final : public Aggregator {
 public:
  explicit FedCarAggregator(const AggregatorOptions& opts) : opts_(opts) {}

  std::string name() const override { return "fedcar"; }
  bool wants_fake_sets() const override { return true; }

  AggregateOutcome run(const ModelPair&, const std::vector<ClientUpdate>& updates,
                       const std::vector<DenseMatrix>& fake_sets) override {
    if (fake_sets.size() != updates.size()) {
      throw InvalidInput("fedcar needs one fake set per client update");
    }
    AggregateOutcome out;
    out.fid = pairwise_fid(fake_sets);
    out.has_fid = true;
    out.weights = weights_from_fid(out.fid);
    out.has_weights = true;
    out.model = fedcar_aggregate(updates, out.weights, opts_.fedcar_alpha_weighted_disc);
    return out;
  }

 private:
  AggregatorOptions opts_;
};

}  // namespace

std::unique_ptr<Aggregator> make_aggregator(const std::string& name,
                                            const AggregatorOptions& opts) {
  if (name == "fedavg") return std::make_unique<FedAvgAggregator>();
  if (name == "fedadam") {
    return std::make_unique<FedOptAggregator>("fedadam", ServerOptKind::kAdam, opts);
  }
  if (name == "fedsgd") {
    return std::make_unique<FedOptAggregator>("fedsgd", ServerOptKind::kSgd, opts);
  }
  if (name == "fedcar") return std::make_unique<FedCarAggregator>(opts);
  throw InvalidSpec("unknown aggregator: " + name);
}

}  // namespace fedgan
