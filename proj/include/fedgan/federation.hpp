#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fedgan/aggregation.hpp"
#include "fedgan/codec.hpp"
#include "fedgan/frechet.hpp"
#include "fedgan/scenarios.hpp"
#include "fedgan/tinygan.hpp"

namespace fedgan {

struct FederationConfig {
  std::size_t num_rounds_max = 60;
  std::size_t server_fake_count = 512;
  std::size_t eval_fake_count = 2048;
  double convergence_tol = 0.02;
  std::size_t convergence_window = 5;
  std::string aggregator = "fedcar";
  std::uint64_t master_seed = 1;
  TrainConfig train;
  ScenarioConfig scenario;
  AggregatorOptions agg_options;
};

void validate_federation_config(const FederationConfig& cfg);

/// Per-round log entry. fake_sets is kept in memory so weights can be
/// re-derived from exactly what the server sampled; it is never serialized.
struct RoundRecord {
  std::size_t round = 0;
  bool has_fid = false;
  FidMatrix fid;
  bool has_weights = false;
  std::vector<double> totals;   // F_n
  std::vector<double> alphas;   // normalized
  std::vector<double> loss_g;   // per client mean over the round
  std::vector<double> loss_d;
  std::vector<double> eval_fd;  // global model vs each client's real data
  double wall_time_sec = 0.0;   // console diagnostics only, not serialized
  std::vector<DenseMatrix> fake_sets;
};

struct FederationState {
  FederationConfig cfg;
  Scenario scenario;
  ModelPair global;
  std::unique_ptr<Aggregator> aggregator;
  std::vector<RoundRecord> history;
};

FederationState init_federation(const FederationConfig& cfg);
FederationState init_federation(const FederationConfig& cfg, Scenario scenario);

/// One full round: broadcast, local training on every client (optionally in
/// parallel, see FEDGAN_THREADS), server-side fake sampling when the
/// strategy asks for it, aggregation, evaluation. Appends to state.history
/// and returns a copy of the record.
RoundRecord run_round(FederationState& state, std::size_t round_index);

/// True iff history has at least `window` records and, for every client,
/// every consecutive relative change of the eval FD within the last
/// `window` records is below tol.
bool has_converged(const std::vector<RoundRecord>& history, double tol, std::size_t window);

/// FD between eval_fake_count generator samples and each client's dataset.
std::vector<double> evaluate_global(const ModelPair& global, const Scenario& scenario,
                                    std::size_t eval_fake_count, std::uint64_t seed);

struct ExperimentResult {
  std::vector<RoundRecord> history;
  ModelPair final_model;
  std::vector<double> final_eval;
  double final_avg = 0.0;
  bool converged = false;
  std::size_t rounds_run = 0;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

ExperimentResult run_experiment(const FederationConfig& cfg, const RoundCallback& on_round = {});
/// Same, but on an externally built scenario (paired comparisons).
ExperimentResult run_experiment_with_scenario(const FederationConfig& cfg, Scenario scenario,
                                              const RoundCallback& on_round = {});

/// Table-1-style reference rows. "individual": every client trains alone on
/// its own data, eval_fd[i] is client i's own model against its own data.
/// "centralized": one model on the pooled data, evaluated per client.
/// Both follow the federated round protocol (local_steps per round, fresh
/// Adam per round, same convergence rule) minus the aggregation.
struct BaselineResult {
  std::vector<double> eval_fd;
  double avg = 0.0;
  std::size_t rounds_run = 0;
};

BaselineResult run_individual_baseline(const FederationConfig& cfg, const Scenario& scenario);
BaselineResult run_centralized_baseline(const FederationConfig& cfg, const Scenario& scenario);

/// Versioned checkpoint: codec descriptor + flat parameters, little-endian.
void save_checkpoint(const std::string& path, const ModelPair& model, std::uint64_t round_index);
struct Checkpoint {
  ModelPair model;
  std::uint64_t round_index = 0;
};
Checkpoint load_checkpoint(const std::string& path);

/// JSON-lines serialization of RoundRecords (wall time and fake sets are
/// intentionally omitted so reruns are byte-identical).
std::string round_record_to_json(const RoundRecord& record);
void write_history_jsonl(const std::vector<RoundRecord>& history, const std::string& path);

}  // namespace fedgan
