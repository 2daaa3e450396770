#include "fedgan/federation.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "fedgan/errors.hpp"
#include "fedgan/rng.hpp"

namespace fedgan {
namespace {

constexpr char kCheckpointMagic[4] = {'F', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t thread_budget(std::size_t num_clients) {
  std::size_t threads = 1;
  if (const char* env = std::getenv("FEDGAN_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) threads = static_cast<std::size_t>(parsed);
  } else {
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw > 0) threads = hw;
  }
  return std::min(threads, num_clients);
}

// Runs fn(0..n-1), possibly on worker threads. Results and errors land in
// per-client slots, so scheduling cannot affect anything observable.
void for_each_client(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = thread_budget(n);
  std::vector<std::exception_ptr> errors(n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw Error("client " + std::to_string(i) + ": " + e.what());
      }
    }
  }
}

bool deltas_small(const std::vector<double>& series, double tol, std::size_t window) {
  if (series.size() < window) return false;
  for (std::size_t k = series.size() - window; k + 1 < series.size(); ++k) {
    const double denom = std::max(std::abs(series[k]), 1e-12);
    if (!(std::abs(series[k + 1] - series[k]) / denom < tol)) return false;
  }
  return true;
}

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  write_bytes(out, buf, 4);
}

void write_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  write_bytes(out, buf, 8);
}

void write_f64(std::ofstream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

void read_bytes(std::ifstream& in, void* data, std::size_t n, const std::string& what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CodecError("checkpoint truncated while reading " + what);
  }
}

std::uint32_t read_u32(std::ifstream& in, const std::string& what) {
  unsigned char buf[4];
  read_bytes(in, buf, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::ifstream& in, const std::string& what) {
  unsigned char buf[8];
  read_bytes(in, buf, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double read_f64(std::ifstream& in, const std::string& what) {
  return std::bit_cast<double>(read_u64(in, what));
}

}  // namespace

void validate_federation_config(const FederationConfig& cfg) {
  if (cfg.num_rounds_max < 1) throw InvalidSpec("num_rounds_max must be >= 1");
  if (cfg.server_fake_count < 2) throw InvalidSpec("server_fake_count must be >= 2");
  if (cfg.eval_fake_count < 2) throw InvalidSpec("eval_fake_count must be >= 2");
  if (!(cfg.convergence_tol > 0.0)) throw InvalidSpec("convergence_tol must be > 0");
  if (cfg.convergence_window < 1) throw InvalidSpec("convergence_window must be >= 1");
  if (cfg.aggregator != "fedavg" && cfg.aggregator != "fedadam" && cfg.aggregator != "fedcar" &&
      cfg.aggregator != "fedsgd") {
    throw InvalidSpec("unknown aggregator: " + cfg.aggregator);
  }
  const TrainConfig& t = cfg.train;
  if (!(t.lr_g > 0.0) || !(t.lr_d > 0.0)) throw InvalidSpec("learning rates must be > 0");
  if (t.adam_beta1 < 0.0 || t.adam_beta1 >= 1.0 || t.adam_beta2 < 0.0 || t.adam_beta2 >= 1.0) {
    throw InvalidSpec("adam betas must be in [0, 1)");
  }
  if (!(t.adam_eps > 0.0)) throw InvalidSpec("adam_eps must be > 0");
  if (t.batch_size < 1) throw InvalidSpec("batch_size must be >= 1");
  if (t.latent_dim < 1) throw InvalidSpec("latent_dim must be >= 1");
  if (t.local_steps < 1) throw InvalidSpec("local_steps must be >= 1");
  if (t.data_dim != 2) throw InvalidSpec("data_dim must be 2 (planar scenarios)");
  if (t.gen_hidden.empty() || t.disc_hidden.empty()) {
    throw InvalidSpec("hidden layer lists must be non-empty");
  }
  for (std::size_t w : t.gen_hidden) {
    if (w < 1) throw InvalidSpec("gen_hidden widths must be >= 1");
  }
  for (std::size_t w : t.disc_hidden) {
    if (w < 1) throw InvalidSpec("disc_hidden widths must be >= 1");
  }
}

FederationState init_federation(const FederationConfig& cfg) {
  return init_federation(cfg, build_scenario(cfg.scenario));
}

FederationState init_federation(const FederationConfig& cfg, Scenario scenario) {
  validate_federation_config(cfg);
  if (scenario.specs.empty()) throw InvalidSpec("scenario has no clients");
  FederationState state;
  state.cfg = cfg;
  state.scenario = std::move(scenario);
  state.global = init_model(cfg.train.arch(),
                            mix_seed(cfg.master_seed, SeedStream::kStreamModelInit));
  state.aggregator = make_aggregator(cfg.aggregator, cfg.agg_options);
  return state;
}

RoundRecord run_round(FederationState& state, std::size_t round_index) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = state.scenario.specs.size();
  const FederationConfig& cfg = state.cfg;

  std::vector<ClientUpdate> updates(n);
  std::vector<double> loss_g(n, 0.0);
  std::vector<double> loss_d(n, 0.0);
  for_each_client(n, [&](std::size_t i) {
    const std::uint64_t seed = mix_seed(cfg.master_seed, SeedStream::kStreamClientTrain,
                                        round_index, static_cast<std::uint64_t>(i));
    LocalTrainResult result = local_train(state.global, state.scenario.datasets[i], cfg.train, seed);
    updates[i].client_id = state.scenario.specs[i].client_id;
    updates[i].model = std::move(result.model);
    updates[i].dataset_size = state.scenario.specs[i].size;
    loss_g[i] = result.mean_loss_g;
    loss_d[i] = result.mean_loss_d;
  });

  RoundRecord record;
  record.round = round_index;
  record.loss_g = std::move(loss_g);
  record.loss_d = std::move(loss_d);

  if (n == 1) {
    // Every strategy degenerates to plain local training with one client.
    state.global = updates[0].model;
  } else {
    std::vector<DenseMatrix> fake_sets;
    if (state.aggregator->wants_fake_sets()) {
      fake_sets.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(mix_seed(cfg.master_seed, SeedStream::kStreamServerFake, round_index,
                                     static_cast<std::uint64_t>(i)));
        const DenseMatrix z =
            sample_gaussian(cfg.server_fake_count, updates[i].model.generator.input_dim(), rng);
        fake_sets.push_back(gen_forward(updates[i].model.generator, z));
      }
    }
    AggregateOutcome outcome = state.aggregator->run(state.global, updates, fake_sets);
    state.global = std::move(outcome.model);
    if (outcome.has_fid) {
      record.fid = std::move(outcome.fid);
      record.has_fid = true;
    }
    if (outcome.has_weights) {
      record.alphas = std::move(outcome.weights.alphas);
      record.totals = std::move(outcome.weights.raw_totals);
      record.has_weights = true;
    }
    record.fake_sets = std::move(fake_sets);
  }

  record.eval_fd = evaluate_global(state.global, state.scenario, cfg.eval_fake_count,
                                   mix_seed(cfg.master_seed, SeedStream::kStreamEval));
  record.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  state.history.push_back(record);
  return record;
}

bool has_converged(const std::vector<RoundRecord>& history, double tol, std::size_t window) {
  if (window < 1) throw InvalidSpec("convergence window must be >= 1");
  if (history.empty() || history.size() < window) return false;
  const std::size_t clients = history.back().eval_fd.size();
  for (std::size_t c = 0; c < clients; ++c) {
    std::vector<double> series;
    series.reserve(history.size());
    for (const RoundRecord& r : history) {
      if (r.eval_fd.size() != clients) {
        throw ShapeError("inconsistent eval_fd lengths across rounds");
      }
      series.push_back(r.eval_fd[c]);
    }
    if (!deltas_small(series, tol, window)) return false;
  }
  return true;
}

std::vector<double> evaluate_global(const ModelPair& global, const Scenario& scenario,
                                    std::size_t eval_fake_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DenseMatrix z = sample_gaussian(eval_fake_count, global.generator.input_dim(), rng);
  const DenseMatrix fakes = gen_forward(global.generator, z);
  const GaussianStats fake_stats = fit_gaussian(fakes);
  std::vector<double> out;
  out.reserve(scenario.datasets.size());
  for (const DenseMatrix& data : scenario.datasets) {
    out.push_back(frechet_distance(fake_stats, fit_gaussian(data)));
  }
  return out;
}

namespace {

ExperimentResult run_loop(FederationState state, const RoundCallback& on_round) {
  ExperimentResult result;
  for (std::size_t r = 0; r < state.cfg.num_rounds_max; ++r) {
    const RoundRecord record = run_round(state, r);
    if (on_round) on_round(record);
    result.rounds_run = r + 1;
    if (has_converged(state.history, state.cfg.convergence_tol, state.cfg.convergence_window)) {
      result.converged = true;
      break;
    }
  }
  result.final_eval = state.history.back().eval_fd;
  double sum = 0.0;
  for (double fd : result.final_eval) sum += fd;
  result.final_avg = sum / static_cast<double>(result.final_eval.size());
  result.final_model = std::move(state.global);
  result.history = std::move(state.history);
  return result;
}

}  // namespace

ExperimentResult run_experiment(const FederationConfig& cfg, const RoundCallback& on_round) {
  return run_loop(init_federation(cfg), on_round);
}

ExperimentResult run_experiment_with_scenario(const FederationConfig& cfg, Scenario scenario,
                                              const RoundCallback& on_round) {
  return run_loop(init_federation(cfg, std::move(scenario)), on_round);
}

BaselineResult run_individual_baseline(const FederationConfig& cfg, const Scenario& scenario) {
  validate_federation_config(cfg);
  const std::size_t n = scenario.specs.size();
  const std::uint64_t eval_seed = mix_seed(cfg.master_seed, SeedStream::kStreamEval);
  BaselineResult result;
  result.eval_fd.assign(n, 0.0);
  std::vector<std::size_t> rounds(n, 0);
  for_each_client(n, [&](std::size_t i) {
    ModelPair model = init_model(cfg.train.arch(), mix_seed(cfg.master_seed,
                                                            SeedStream::kStreamIndividual,
                                                            static_cast<std::uint64_t>(i)));
    const GaussianStats data_stats = fit_gaussian(scenario.datasets[i]);
    std::vector<double> series;
    for (std::size_t r = 0; r < cfg.num_rounds_max; ++r) {
      model = local_train(model, scenario.datasets[i], cfg.train,
                          mix_seed(cfg.master_seed, SeedStream::kStreamIndividual,
                                   static_cast<std::uint64_t>(i), r))
                  .model;
      std::mt19937_64 rng(eval_seed);
      const DenseMatrix z = sample_gaussian(cfg.eval_fake_count, model.generator.input_dim(), rng);
      series.push_back(frechet_distance(fit_gaussian(gen_forward(model.generator, z)), data_stats));
      rounds[i] = r + 1;
      if (deltas_small(series, cfg.convergence_tol, cfg.convergence_window)) break;
    }
    result.eval_fd[i] = series.back();
  });
  double sum = 0.0;
  for (double fd : result.eval_fd) sum += fd;
  result.avg = sum / static_cast<double>(n);
  result.rounds_run = *std::max_element(rounds.begin(), rounds.end());
  return result;
}

BaselineResult run_centralized_baseline(const FederationConfig& cfg, const Scenario& scenario) {
  validate_federation_config(cfg);
  std::size_t total_rows = 0;
  for (const DenseMatrix& data : scenario.datasets) total_rows += data.rows;
  DenseMatrix pooled(total_rows, 2);
  std::size_t at = 0;
  for (const DenseMatrix& data : scenario.datasets) {
    std::copy(data.entries.begin(), data.entries.end(), pooled.entries.begin() + at);
    at += data.entries.size();
  }

  ModelPair model = init_model(cfg.train.arch(),
                               mix_seed(cfg.master_seed, SeedStream::kStreamCentralized));
  const std::uint64_t eval_seed = mix_seed(cfg.master_seed, SeedStream::kStreamEval);
  std::vector<RoundRecord> history;
  BaselineResult result;
  for (std::size_t r = 0; r < cfg.num_rounds_max; ++r) {
    model = local_train(model, pooled, cfg.train,
                        mix_seed(cfg.master_seed, SeedStream::kStreamCentralized, r))
                .model;
    RoundRecord record;
    record.round = r;
    record.eval_fd = evaluate_global(model, scenario, cfg.eval_fake_count, eval_seed);
    history.push_back(std::move(record));
    result.rounds_run = r + 1;
    if (has_converged(history, cfg.convergence_tol, cfg.convergence_window)) break;
  }
  result.eval_fd = history.back().eval_fd;
  double sum = 0.0;
  for (double fd : result.eval_fd) sum += fd;
  result.avg = sum / static_cast<double>(result.eval_fd.size());
  return result;
}

void save_checkpoint(const std::string& path, const ModelPair& model,
                     std::uint64_t round_index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const ParamsCodec codec = ParamsCodec::from_model(model);
  write_bytes(out, kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u64(out, round_index);
  write_u64(out, codec.gen_layer_count);
  write_u64(out, codec.disc_layer_count);
  write_f64(out, codec.gen_leaky_slope);
  write_f64(out, codec.disc_leaky_slope);
  for (const auto& [rows, cols] : codec.gen_shapes) {
    write_u64(out, rows);
    write_u64(out, cols);
  }
  for (const auto& [rows, cols] : codec.disc_shapes) {
    write_u64(out, rows);
    write_u64(out, cols);
  }
  const std::vector<double> flat = concat_params(model.generator, model.discriminator, codec);
  write_u64(out, flat.size());
  for (double v : flat) write_f64(out, v);
  if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw CodecError("bad checkpoint magic in " + path);
  }
  const std::uint32_t version = read_u32(in, "version");
  if (version != kCheckpointVersion) {
    throw CodecError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.round_index = read_u64(in, "round index");
  ParamsCodec codec;
  codec.gen_layer_count = read_u64(in, "generator layer count");
  codec.disc_layer_count = read_u64(in, "discriminator layer count");
  codec.gen_leaky_slope = read_f64(in, "generator slope");
  codec.disc_leaky_slope = read_f64(in, "discriminator slope");
  for (std::size_t l = 0; l < codec.gen_layer_count; ++l) {
    const std::uint64_t rows = read_u64(in, "shape");
    const std::uint64_t cols = read_u64(in, "shape");
    codec.gen_shapes.emplace_back(rows, cols);
  }
  for (std::size_t l = 0; l < codec.disc_layer_count; ++l) {
    const std::uint64_t rows = read_u64(in, "shape");
    const std::uint64_t cols = read_u64(in, "shape");
    codec.disc_shapes.emplace_back(rows, cols);
  }
  const std::uint64_t flat_len = read_u64(in, "parameter count");
  if (flat_len != codec.total_param_count()) {
    throw CodecError("checkpoint parameter count does not match its shape table");
  }
  std::vector<double> flat(flat_len);
  for (std::uint64_t k = 0; k < flat_len; ++k) flat[k] = read_f64(in, "parameters");
  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0) throw CodecError("trailing bytes in checkpoint " + path);
  ckpt.model = split_params(flat, codec);
  return ckpt;
}

std::string round_record_to_json(const RoundRecord& record) {
  nlohmann::ordered_json j;
  j["round"] = record.round;
  j["loss_g"] = record.loss_g;
  j["loss_d"] = record.loss_d;
  j["eval_fd"] = record.eval_fd;
  if (record.has_weights) {
    j["totals"] = record.totals;
    j["alphas"] = record.alphas;
  }
  if (record.has_fid) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < record.fid.n; ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t k = 0; k < record.fid.n; ++k) row.push_back(record.fid.values(i, k));
      rows.push_back(std::move(row));
    }
    j["fid"] = std::move(rows);
  }
  return j.dump();
}

void write_history_jsonl(const std::vector<RoundRecord>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const RoundRecord& record : history) {
    out << round_record_to_json(record) << "\n";
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace fedgan
