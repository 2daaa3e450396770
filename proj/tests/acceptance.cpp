// Acceptance gate: nine end-to-end criteria, one PASS/FAIL line each.
// Exit code 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedgan/aggregation.hpp"
#include "fedgan/codec.hpp"
#include "fedgan/config.hpp"
#include "fedgan/federation.hpp"
#include "fedgan/frechet.hpp"
#include "fedgan/numerics.hpp"
#include "fedgan/rng.hpp"
#include "fedgan/runner.hpp"
#include "fedgan/scenarios.hpp"
#include "fedgan/tinygan.hpp"

namespace fs = std::filesystem;
using namespace fedgan;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
};

class Gate {
 public:
  void report(int id, const std::string& name, const Verdict& v) {
    const std::string line = std::string(v.pass ? "PASS" : "FAIL") + "  [" +
                             std::to_string(id) + "/9] " + name +
                             (v.detail.str().empty() ? "" : " — " + v.detail.str());
    std::cout << line << "\n" << std::flush;
    lines_.push_back(line);
    if (!v.pass) failures_++;
  }
  int finish() const {
    std::cout << "\n";
    for (const std::string& line : lines_) std::cout << line << "\n";
    if (failures_ == 0) {
      std::cout << "ACCEPTANCE: all 9 criteria passed\n";
      return 0;
    }
    std::cout << "ACCEPTANCE: " << failures_ << " criterion(s) FAILED\n";
    return 1;
  }

 private:
  std::vector<std::string> lines_;
  int failures_ = 0;
};

GaussianStats gaussian(std::vector<double> mean, std::vector<double> diag) {
  GaussianStats g;
  g.mean = std::move(mean);
  g.covariance = DenseMatrix(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) g.covariance(i, i) = diag[i];
  g.sample_count = 2;
  return g;
}

std::vector<double> flatten_grads(const std::vector<LayerParams>& grads) {
  std::vector<double> out;
  for (const LayerParams& layer : grads) {
    out.insert(out.end(), layer.weight.entries.begin(), layer.weight.entries.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

ModelPair scalar_model(double g, double d) {
  ModelPair m;
  LayerParams lg;
  lg.weight = DenseMatrix(1, 1);
  lg.weight(0, 0) = g;
  lg.bias = {0.0};
  m.generator.layers = {lg};
  LayerParams ld;
  ld.weight = DenseMatrix(1, 1);
  ld.weight(0, 0) = d;
  ld.bias = {0.0};
  m.discriminator.layers = {ld};
  return m;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// One (aggregator, seed) run at the full default scale on a shared scenario.
struct Cell {
  ExperimentResult result;
  double seconds = 0.0;
};

FederationConfig default_config(const std::string& aggregator, std::uint64_t seed,
                                ScenarioKind kind) {
  FederationConfig cfg;
  cfg.aggregator = aggregator;
  cfg.master_seed = seed;
  cfg.scenario.kind = kind;
  cfg.scenario.seed = seed;
  return cfg;
}

Cell run_cell(const std::string& aggregator, std::uint64_t seed, ScenarioKind kind,
              const Scenario& scenario) {
  const FederationConfig cfg = default_config(aggregator, seed, kind);
  Cell cell;
  const double t0 = now_seconds();
  cell.result = run_experiment_with_scenario(cfg, scenario);
  cell.seconds = now_seconds() - t0;
  std::cout << "  [" << to_string(kind) << " seed " << seed << "] " << aggregator
            << ": avg_fd=" << cell.result.final_avg << " rounds=" << cell.result.rounds_run
            << " (" << cell.seconds << "s)\n"
            << std::flush;
  return cell;
}

}  // namespace

int main() {
  Gate gate;
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  const std::size_t kSmallClient = ScenarioConfig{}.small_client_index;

  // ---- Criterion 1: numeric kernels ------------------------------------
  {
    Verdict v;
    const double t0 = now_seconds();
    try {
      const double fd1 = frechet_distance(gaussian({0.0}, {1.0}), gaussian({3.0}, {1.0}));
      if (std::abs(fd1 - 9.0) > 1e-8) {
        v.pass = false;
        v.detail << "1-D case: got " << fd1 << " want 9; ";
      }
      const double fd2 =
          frechet_distance(gaussian({0.0, 0.0}, {1.0, 1.0}), gaussian({1.0, 0.0}, {4.0, 9.0}));
      // |mu|^2 = 1; Tr terms: (1+4-2*2) + (1+9-2*3) = 1 + 4.
      if (std::abs(fd2 - 6.0) > 1e-8) {
        v.pass = false;
        v.detail << "2-D diagonal case: got " << fd2 << " want 6; ";
      }
      const double fd0 = frechet_distance(gaussian({0.5, -1.0}, {2.0, 3.0}),
                                          gaussian({0.5, -1.0}, {2.0, 3.0}));
      if (fd0 > 1e-9) {
        v.pass = false;
        v.detail << "identical case: got " << fd0 << "; ";
      }

      std::mt19937_64 rng(7);
      std::normal_distribution<double> normal;
      double worst_sqrt = 0.0;
      double worst_eig = 0.0;
      for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 5);
        DenseMatrix b(n, n);
        for (double& x : b.entries) x = normal(rng);
        const DenseMatrix a = matmul(b, transpose(b));  // PSD
        const DenseMatrix root = psd_sqrt(a);
        const DenseMatrix back = matmul(root, root);
        for (std::size_t k = 0; k < a.entries.size(); ++k) {
          worst_sqrt = std::max(worst_sqrt, std::abs(back.entries[k] - a.entries[k]));
        }
        const SymEigResult eig = sym_eig(a);
        DenseMatrix lv = eig.eigenvectors;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) lv(i, j) *= eig.eigenvalues[j];
        }
        const DenseMatrix recon = matmul(lv, transpose(eig.eigenvectors));
        for (std::size_t k = 0; k < a.entries.size(); ++k) {
          worst_eig = std::max(worst_eig, std::abs(recon.entries[k] - a.entries[k]));
        }
      }
      if (worst_sqrt > 1e-7) {
        v.pass = false;
        v.detail << "psd_sqrt multiply-back error " << worst_sqrt << "; ";
      }
      if (worst_eig > 1e-8) {
        v.pass = false;
        v.detail << "sym_eig reconstruction error " << worst_eig << "; ";
      }
      const double elapsed = now_seconds() - t0;
      if (elapsed >= 1.0) {
        v.pass = false;
        v.detail << "took " << elapsed << "s (budget 1s); ";
      }
      if (v.pass) {
        v.detail << "analytic FD cases within 1e-8, sqrt err " << worst_sqrt << ", eig err "
                 << worst_eig << ", " << elapsed << "s";
      }
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    gate.report(1, "numeric kernels (Frechet analytic cases, psd_sqrt, sym_eig)", v);
  }

  // ---- Criterion 2: gradient oracle ------------------------------------
  {
    Verdict v;
    try {
      TrainConfig t;
      t.latent_dim = 4;
      t.gen_hidden = {8, 6};   // 3-layer generator
      t.disc_hidden = {8, 8};  // 3-layer discriminator
      const ModelPair model = init_model(t.arch(), 17);
      const ParamsCodec codec = ParamsCodec::from_model(model);

      std::mt19937_64 rng(21);
      const DenseMatrix real = sample_gaussian(16, 2, rng);
      const DenseMatrix z = sample_gaussian(16, 4, rng);

      const GanGrads grads = gan_backward(model, real, z);
      std::vector<double> analytic = flatten_grads(grads.grad_g);
      const std::vector<double> disc_part = flatten_grads(grads.grad_d);
      analytic.insert(analytic.end(), disc_part.begin(), disc_part.end());

      const std::vector<double> flat = concat_params(model.generator, model.discriminator, codec);
      const std::size_t gen_n = codec.gen_param_count();
      const double eps = 1e-5;
      std::size_t checked = 0;
      double worst = 0.0;
      for (std::size_t k = 0; k < flat.size(); ++k) {
        std::vector<double> plus = flat;
        std::vector<double> minus = flat;
        plus[k] += eps;
        minus[k] -= eps;
        const ModelPair mp = split_params(plus, codec);
        const ModelPair mm = split_params(minus, codec);
        const GanGrads gp = gan_backward(mp, real, z);
        const GanGrads gm = gan_backward(mm, real, z);
        const double numeric = k < gen_n ? (gp.loss_g - gm.loss_g) / (2 * eps)
                                         : (gp.loss_d - gm.loss_d) / (2 * eps);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-7});
        if (denom <= 1e-7) continue;
        worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
        ++checked;
      }
      if (checked < 200) {
        v.pass = false;
        v.detail << "only " << checked << " coordinates checked (need >= 200); ";
      }
      if (worst >= 1e-4) {
        v.pass = false;
        v.detail << "worst relative error " << worst << " (limit 1e-4); ";
      }
      if (v.pass) v.detail << checked << " coordinates, worst relative error " << worst;
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    gate.report(2, "gradient oracle (backward vs central finite differences)", v);
  }

  // ---- Criterion 3: aggregator oracles ----------------------------------
  {
    Verdict v;
    try {
      // Size-weighted mean, exact: weights 1/4 and 3/4 are exact binary.
      const std::vector<ClientUpdate> updates = {{0, scalar_model(2.0, -4.0), 1},
                                                 {1, scalar_model(10.0, 4.0), 3}};
      const ModelPair avg = fedavg(updates);
      if (avg.generator.layers[0].weight(0, 0) != 8.0 ||
          avg.discriminator.layers[0].weight(0, 0) != 2.0) {
        v.pass = false;
        v.detail << "fedavg hand case mismatch; ";
      }

      // Server-Adam first step from theta=0 with both clients at theta=3:
      // pseudo-gradient -3, bias-corrected step +lr*3/(3+eps).
      const ModelPair global = scalar_model(0.0, 0.0);
      const ParamsCodec codec = ParamsCodec::from_model(global);
      const ServerOptState state = make_server_opt_state(codec);
      const std::vector<ClientUpdate> threes = {{0, scalar_model(3.0, 3.0), 5},
                                                {1, scalar_model(3.0, 3.0), 5}};
      const ModelPair stepped = fedopt_round(global, threes, state).first;
      const double want = state.server_lr * 3.0 / (3.0 + state.eps);
      const double got = stepped.generator.layers[0].weight(0, 0);
      if (std::abs(got - want) > 1e-10) {
        v.pass = false;
        v.detail << "fedopt first step got " << got << " want " << want << "; ";
      }

      // Pairwise distances (1,2,3) -> totals (3,4,5) -> (20/47,15/47,12/47).
      FidMatrix fid;
      fid.n = 3;
      fid.values = DenseMatrix(3, 3);
      fid.values(0, 1) = fid.values(1, 0) = 1.0;
      fid.values(0, 2) = fid.values(2, 0) = 2.0;
      fid.values(1, 2) = fid.values(2, 1) = 3.0;
      const WeightVector w = weights_from_fid(fid);
      const double expected[3] = {20.0 / 47.0, 15.0 / 47.0, 12.0 / 47.0};
      for (int i = 0; i < 3; ++i) {
        if (std::abs(w.alphas[i] - expected[i]) > 1e-12) {
          v.pass = false;
          v.detail << "alpha[" << i << "]=" << w.alphas[i] << " want " << expected[i] << "; ";
        }
      }

      // Two equal-sized clients: FedCAR == FedAvg bit for bit.
      TrainConfig t;
      t.latent_dim = 4;
      t.gen_hidden = {8};
      t.disc_hidden = {8};
      const ModelPair ma = init_model(t.arch(), 100);
      const ModelPair mb = init_model(t.arch(), 200);
      const std::vector<ClientUpdate> pair = {{0, ma, 64}, {1, mb, 64}};
      std::mt19937_64 rng(5);
      std::vector<DenseMatrix> fakes;
      fakes.push_back(gen_forward(ma.generator, sample_gaussian(64, 4, rng)));
      fakes.push_back(gen_forward(mb.generator, sample_gaussian(64, 4, rng)));
      const ModelPair via_car = fedcar_aggregate(pair, fedcar_weights(fakes));
      const ModelPair via_avg = fedavg(pair);
      const ParamsCodec pc = ParamsCodec::from_model(ma);
      if (concat_params(via_car.generator, via_car.discriminator, pc) != concat_params(via_avg.generator, via_avg.discriminator, pc)) {
        v.pass = false;
        v.detail << "N=2 FedCAR differs from equal-weight FedAvg; ";
      }
      if (v.pass) v.detail << "hand cases, first Adam step, 20/47 fixture, N=2 bitwise equality";
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    gate.report(3, "aggregator oracles (FedAvg, FedAdam step, FedCAR weights)", v);
  }

  // ---- Shared full-scale runs for criteria 4-7 --------------------------
  std::cout << "\nrunning full-scale paired cells (defaults: 3 clients, 2048 rows, "
            << "200 local steps, round cap 60)...\n"
            << std::flush;

  std::vector<double> mild_fedcar_avg, mild_fedavg_avg;
  std::vector<double> severe_fedcar_avg, severe_fedavg_avg;
  std::vector<double> severe_small_fedcar, severe_small_individual;
  std::vector<const ExperimentResult*> all_runs;
  std::vector<ExperimentResult> keep;  // stable storage for all_runs pointers
  keep.reserve(seeds.size() * 4);
  std::vector<std::vector<RoundRecord>> fedcar_histories;
  double worst_cell_seconds = 0.0;
  std::string worst_cell_name = "none";

  for (const std::uint64_t seed : seeds) {
    {
      ScenarioConfig sc = default_config("fedcar", seed, ScenarioKind::kMild).scenario;
      const Scenario scenario = build_scenario(sc);
      Cell car = run_cell("fedcar", seed, ScenarioKind::kMild, scenario);
      Cell avg = run_cell("fedavg", seed, ScenarioKind::kMild, scenario);
      mild_fedcar_avg.push_back(car.result.final_avg);
      mild_fedavg_avg.push_back(avg.result.final_avg);
      for (const Cell* c : {&car, &avg}) {
        if (c->seconds > worst_cell_seconds) {
          worst_cell_seconds = c->seconds;
          worst_cell_name = "mild seed " + std::to_string(seed);
        }
      }
      fedcar_histories.push_back(car.result.history);
      keep.push_back(std::move(car.result));
      keep.push_back(std::move(avg.result));
    }
    {
      ScenarioConfig sc = default_config("fedcar", seed, ScenarioKind::kSevere).scenario;
      const Scenario scenario = build_scenario(sc);
      Cell car = run_cell("fedcar", seed, ScenarioKind::kSevere, scenario);
      Cell avg = run_cell("fedavg", seed, ScenarioKind::kSevere, scenario);
      severe_fedcar_avg.push_back(car.result.final_avg);
      severe_fedavg_avg.push_back(avg.result.final_avg);
      severe_small_fedcar.push_back(car.result.final_eval[kSmallClient]);

      const double t0 = now_seconds();
      const BaselineResult indiv =
          run_individual_baseline(default_config("fedcar", seed, ScenarioKind::kSevere), scenario);
      std::cout << "  [severe seed " << seed << "] individual: small-client fd="
                << indiv.eval_fd[kSmallClient] << " (" << (now_seconds() - t0) << "s)\n"
                << std::flush;
      severe_small_individual.push_back(indiv.eval_fd[kSmallClient]);

      fedcar_histories.push_back(car.result.history);
      keep.push_back(std::move(car.result));
      keep.push_back(std::move(avg.result));
    }
  }
  for (const ExperimentResult& r : keep) all_runs.push_back(&r);

  // ---- Criterion 4: weight invariants on every logged FedCAR round ------
  {
    Verdict v;
    std::size_t rounds_checked = 0;
    for (const std::vector<RoundRecord>& history : fedcar_histories) {
      for (const RoundRecord& record : history) {
        if (!record.has_weights || !record.has_fid) {
          v.pass = false;
          v.detail << "round " << record.round << " missing weights/fid; ";
          continue;
        }
        double sum = 0.0;
        for (double a : record.alphas) sum += a;
        if (std::abs(sum - 1.0) > 1e-9) {
          v.pass = false;
          v.detail << "round " << record.round << " alpha sum " << sum << "; ";
        }
        const std::size_t n = record.alphas.size();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            if (record.fid.values(i, j) != record.fid.values(j, i) ||
                (i == j && record.fid.values(i, j) != 0.0)) {
              v.pass = false;
              v.detail << "round " << record.round << " fid matrix malformed; ";
            }
            // Ordering of alphas must invert the ordering of totals.
            if (i < j) {
              const double df = record.totals[i] - record.totals[j];
              const double da = record.alphas[i] - record.alphas[j];
              const bool ok = (df == 0.0 && da == 0.0) || (df < 0.0 && da > 0.0) ||
                              (df > 0.0 && da < 0.0);
              if (!ok) {
                v.pass = false;
                v.detail << "round " << record.round << " ordering violated (F " << record.totals[i]
                         << " vs " << record.totals[j] << ", alpha " << record.alphas[i] << " vs "
                         << record.alphas[j] << "); ";
              }
            }
          }
        }
        ++rounds_checked;
      }
    }
    if (rounds_checked == 0) {
      v.pass = false;
      v.detail << "no FedCAR rounds were logged; ";
    }
    if (v.pass) {
      v.detail << rounds_checked
               << " logged rounds: alpha sums within 1e-9, inverse ordering, symmetric "
                  "zero-diagonal distance matrices";
    }
    gate.report(4, "FedCAR weight invariants on every logged round", v);
  }

  // ---- Criterion 5: mild directional claim -------------------------------
  {
    Verdict v;
    const double med_car = median(mild_fedcar_avg);
    const double med_avg = median(mild_fedavg_avg);
    if (!(med_car <= med_avg * 1.05)) {
      v.pass = false;
      v.detail << "median FedCAR " << med_car << " > 1.05 x median FedAvg " << med_avg << "; ";
    }
    if (worst_cell_seconds >= 900.0) {
      v.pass = false;
      v.detail << "slowest cell " << worst_cell_seconds << "s (" << worst_cell_name
               << ") over the 15-minute budget; ";
    }
    if (v.pass) {
      v.detail << seeds.size() << " paired seeds: median FedCAR " << med_car << " vs FedAvg "
               << med_avg << "; slowest cell " << worst_cell_seconds << "s";
    }
    gate.report(5, "mild scenario: median FedCAR avg FD <= 1.05 x FedAvg", v);
  }

  // ---- Criterion 6: severe directional claims ----------------------------
  {
    Verdict v;
    const double med_car = median(severe_fedcar_avg);
    const double med_avg = median(severe_fedavg_avg);
    if (!(med_car <= med_avg * 1.05)) {
      v.pass = false;
      v.detail << "(a) median FedCAR " << med_car << " > 1.05 x median FedAvg " << med_avg << "; ";
    }
    std::size_t wins = 0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (severe_small_fedcar[i] < severe_small_individual[i]) ++wins;
    }
    if (wins < 4) {
      v.pass = false;
      v.detail << "(b) small client beats individual training in only " << wins << "/"
               << seeds.size() << " seeds; ";
    }
    if (v.pass) {
      v.detail << "median FedCAR " << med_car << " vs FedAvg " << med_avg
               << "; small client beats individual training in " << wins << "/" << seeds.size()
               << " seeds";
    }
    gate.report(6, "severe scenario: FedCAR holds up and rescues the small client", v);
  }

  // ---- Criterion 7: alpha balance over a completed mild run --------------
  {
    Verdict v;
    const std::vector<RoundRecord>& history = fedcar_histories.front();  // mild, seed 1
    std::vector<double> mean_alpha(3, 0.0);
    for (const RoundRecord& record : history) {
      for (std::size_t i = 0; i < 3; ++i) mean_alpha[i] += record.alphas[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
      mean_alpha[i] /= static_cast<double>(history.size());
      if (std::abs(mean_alpha[i] - 1.0 / 3.0) > 0.05) {
        v.pass = false;
        v.detail << "client " << i << " mean alpha " << mean_alpha[i]
                 << " outside 1/3 +- 0.05; ";
      }
    }
    if (v.pass) {
      v.detail << "mean alphas (" << mean_alpha[0] << ", " << mean_alpha[1] << ", "
               << mean_alpha[2] << ") over " << history.size() << " rounds";
    }
    gate.report(7, "alpha balance: per-client mean alpha within 1/3 +- 0.05 (mild)", v);
  }

  // ---- Criterion 8: determinism and codec --------------------------------
  {
    Verdict v;
    try {
      // Byte-identical artifacts from two identical end-to-end runs.
      const fs::path dir = fs::temp_directory_path() / "fedgan_acceptance";
      fs::remove_all(dir);
      fs::create_directories(dir);
      nlohmann::json doc;
      doc["federation"] = {{"num_rounds_max", 8}, {"aggregator", "fedcar"}, {"master_seed", 13},
                           {"server_fake_count", 256}, {"eval_fake_count", 512}};
      doc["train"] = {{"local_steps", 50}};
      doc["scenario"] = {{"kind", "mild"}, {"base_size", 512}, {"seed", 13}};
      {
        std::ofstream out(dir / "config.json");
        out << doc.dump(2) << "\n";
      }
      std::cout << "  rerunning one pipeline twice for byte comparison...\n" << std::flush;
      if (cmd_run((dir / "config.json").string(), (dir / "a").string(), std::nullopt) != 0 ||
          cmd_run((dir / "config.json").string(), (dir / "b").string(), std::nullopt) != 0) {
        v.pass = false;
        v.detail << "pipeline run failed; ";
      } else {
        for (const char* name : {"manifest.json", "scenario.jsonl", "rounds.jsonl",
                                 "alpha_trace.csv", "eval.csv", "summary.json", "checkpoint.bin"}) {
          if (slurp(dir / "a" / name) != slurp(dir / "b" / name)) {
            v.pass = false;
            v.detail << name << " differs between reruns; ";
          }
        }
      }

      // Exact concat/split round-trips over 1,000 random models.
      std::mt19937_64 rng(99);
      std::size_t trips = 0;
      for (int k = 0; k < 1000; ++k) {
        TrainConfig t;
        t.latent_dim = 1 + static_cast<std::size_t>(rng() % 4);
        const std::size_t depth = 1 + static_cast<std::size_t>(rng() % 2);
        t.gen_hidden.clear();
        t.disc_hidden.clear();
        for (std::size_t l = 0; l < depth; ++l) {
          t.gen_hidden.push_back(1 + static_cast<std::size_t>(rng() % 8));
          t.disc_hidden.push_back(1 + static_cast<std::size_t>(rng() % 8));
        }
        const ModelPair model = init_model(t.arch(), rng());
        const ParamsCodec codec = ParamsCodec::from_model(model);
        const std::vector<double> flat = concat_params(model.generator, model.discriminator, codec);
        const ModelPair back = split_params(flat, codec);
        if (concat_params(back.generator, back.discriminator, codec) != flat) {
          v.pass = false;
          v.detail << "codec round-trip " << k << " not exact; ";
          break;
        }
        ++trips;
      }
      if (v.pass) v.detail << "7 artifacts byte-identical; " << trips << " exact codec round-trips";
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    gate.report(8, "determinism (byte-identical rerun) and codec round-trip", v);
  }

  // ---- Criterion 9: convergence rule -------------------------------------
  {
    Verdict v;
    try {
      const auto fixture = [](std::vector<double> series) {
        std::vector<RoundRecord> h;
        for (double x : series) {
          RoundRecord r;
          r.eval_fd = {x};
          h.push_back(r);
        }
        return h;
      };
      if (!has_converged(fixture({5.0, 5.0, 5.0}), 0.01, 3)) {
        v.pass = false;
        v.detail << "constant series should converge; ";
      }
      if (has_converged(fixture({5.0, 5.0}), 0.01, 3)) {
        v.pass = false;
        v.detail << "short history should not converge; ";
      }
      if (!has_converged(fixture({10.0, 9.0, 9.05, 9.02}), 0.01, 3)) {
        v.pass = false;
        v.detail << "(10,9,9.05,9.02) with tol 0.01 window 3 should converge; ";
      }
      if (has_converged(fixture({10.0, 9.0, 9.05, 9.02}), 0.003, 3)) {
        v.pass = false;
        v.detail << "(10,9,9.05,9.02) with tol 0.003 should not converge; ";
      }

      // Every recorded experiment stopped at or before the round cap.
      std::size_t experiments = 0;
      for (const ExperimentResult* r : all_runs) {
        if (r->rounds_run > 60 || r->history.size() != r->rounds_run) {
          v.pass = false;
          v.detail << "an experiment overran its cap; ";
        }
        ++experiments;
      }

      // A cap smaller than the window forces termination by the cap alone.
      FederationConfig cfg = default_config("fedavg", 3, ScenarioKind::kMild);
      cfg.num_rounds_max = 2;
      cfg.scenario.base_size = 64;
      cfg.train.local_steps = 5;
      cfg.train.batch_size = 16;
      cfg.train.gen_hidden = {8, 8};
      cfg.train.disc_hidden = {8, 8};
      cfg.train.latent_dim = 4;
      cfg.server_fake_count = 64;
      cfg.eval_fake_count = 128;
      const ExperimentResult capped = run_experiment(cfg);
      if (capped.rounds_run != 2 || capped.converged) {
        v.pass = false;
        v.detail << "cap-2 run reported rounds=" << capped.rounds_run << " converged="
                 << capped.converged << "; ";
      }
      if (v.pass) {
        v.detail << "hand fixtures exact; " << experiments
                 << " experiments all terminated within the round cap";
      }
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    gate.report(9, "convergence rule fixtures and guaranteed termination", v);
  }

  return gate.finish();
}
