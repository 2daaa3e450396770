#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fedgan/codec.hpp"
#include "fedgan/frechet.hpp"
#include "fedgan/tinygan.hpp"

namespace fedgan {

struct ClientUpdate {
  int client_id = 0;
  ModelPair model;
  std::size_t dataset_size = 0;  // d_i
};

/// Per-client aggregation coefficients. alphas are normalized (sum 1);
/// raw_totals holds each client's summed pairwise FID F_n and raw_alphas the
/// un-normalized inverses 1/max(F_n, floor).
struct WeightVector {
  std::vector<double> alphas;
  std::vector<double> raw_totals;
  std::vector<double> raw_alphas;
};

enum class ServerOptKind { kAdam, kSgd };

struct ServerOptState {
  ServerOptKind kind = ServerOptKind::kAdam;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
  double server_lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

ServerOptState make_server_opt_state(const ParamsCodec& codec, double server_lr = 1e-2,
                                     double beta1 = 0.9, double beta2 = 0.99, double eps = 1e-8,
                                     ServerOptKind kind = ServerOptKind::kAdam);

/// Dataset-size weighted parameter average, applied independently to the
/// generator and the discriminator.
ModelPair fedavg(const std::vector<ClientUpdate>& updates);

/// One server-optimizer round: client deltas against the broadcast global are
/// averaged (unweighted), negated into a pseudo-gradient, and fed to the
/// server optimizer over the concatenated parameter vector.
std::pair<ModelPair, ServerOptState> fedopt_round(const ModelPair& global,
                                                  const std::vector<ClientUpdate>& updates,
                                                  ServerOptState state);

/// F_n floor before inversion, guarding near-identical client generators.
inline constexpr double kFidFloor = 1e-6;

WeightVector weights_from_fid(const FidMatrix& fid);

/// Full FedCAR weighting: pairwise FID over the server-generated fake sets,
/// per-client totals, inverted and normalized.
WeightVector fedcar_weights(const std::vector<DenseMatrix>& fake_sets);

/// Generator aggregated with the normalized alphas; discriminator by
/// size-weighted averaging unless alpha_weighted_disc is set.
ModelPair fedcar_aggregate(const std::vector<ClientUpdate>& updates, const WeightVector& weights,
                           bool alpha_weighted_disc = false);

struct AggregatorOptions {
  double server_lr = 1e-2;
  double server_beta1 = 0.9;
  double server_beta2 = 0.99;
  double server_eps = 1e-8;
  bool fedcar_alpha_weighted_disc = false;
};

/// What a strategy produced for one round, including the weight diagnostics
/// FedCAR logs per round.
struct AggregateOutcome {
  ModelPair model;
  bool has_weights = false;
  WeightVector weights;
  bool has_fid = false;
  FidMatrix fid;
};

class Aggregator {
 public:
  virtual ~Aggregator() = default;
  virtual std::string name() const = 0;
  // True when the orchestrator must sample fakes from each client generator
  // before calling run().
  virtual bool wants_fake_sets() const { return false; }
  virtual AggregateOutcome run(const ModelPair& global, const std::vector<ClientUpdate>& updates,
                               const std::vector<DenseMatrix>& fake_sets) = 0;
};

/// name: "fedavg" | "fedadam" | "fedcar" ("fedsgd" also accepted as a plain
/// server-SGD baseline).
std::unique_ptr<Aggregator> make_aggregator(const std::string& name,
                                            const AggregatorOptions& opts = {});

}  // namespace fedgan
