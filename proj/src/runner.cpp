#include "fedgan/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fedgan/config.hpp"
#include "fedgan/errors.hpp"
#include "fedgan/federation.hpp"

namespace fedgan {
namespace {

namespace fs = std::filesystem;

// Shortest round-trip decimal form, the same one the JSON artifacts use.
std::string fmt(double v) { return nlohmann::json(v).dump(); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct CompareRow {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<double> eval_fd;
  double avg = 0.0;
};

std::string csv_row(const CompareRow& row) {
  std::string line = row.label + "," + std::to_string(row.seed);
  for (double fd : row.eval_fd) line += "," + fmt(fd);
  line += "," + fmt(row.avg) + "\n";
  return line;
}

}  // namespace

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed_override) {
  try {
    FederationConfig cfg = load_config_file(config_path);
    if (seed_override) {
      cfg.master_seed = *seed_override;
      cfg.scenario.seed = *seed_override;
    }
    validate_federation_config(cfg);

    const fs::path dir(out_dir);
    fs::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["version"] = kVersionString;
    manifest["master_seed"] = cfg.master_seed;
    manifest["config"] = config_to_json(cfg);
    manifest["artifacts"] = {{"scenario", "scenario.jsonl"},
                             {"rounds", "rounds.jsonl"},
                             {"alpha_trace", "alpha_trace.csv"},
                             {"eval", "eval.csv"},
                             {"summary", "summary.json"},
                             {"checkpoint", "checkpoint.bin"}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    Scenario scenario = build_scenario(cfg.scenario);
    write_scenario_dump(scenario, (dir / "scenario.jsonl").string());

    std::ofstream rounds_out = open_out(dir / "rounds.jsonl");
    const RoundCallback on_round = [&](const RoundRecord& record) {
      rounds_out << round_record_to_json(record) << "\n";
      rounds_out.flush();
      double avg = 0.0;
      for (double fd : record.eval_fd) avg += fd;
      avg /= static_cast<double>(record.eval_fd.size());
      std::cout << "round " << record.round << " avg_fd=" << avg;
      if (record.has_weights) {
        std::cout << " alphas=";
        for (std::size_t i = 0; i < record.alphas.size(); ++i) {
          std::cout << (i ? "," : "") << record.alphas[i];
        }
      }
      std::cout << " (" << record.wall_time_sec << "s)\n";
    };

    const ExperimentResult result = run_experiment_with_scenario(cfg, scenario, on_round);
    if (!rounds_out) throw IoError("failed writing rounds.jsonl");
    rounds_out.close();

    std::string alpha_csv = "round,client_id,alpha,total_fid\n";
    std::string eval_csv = "round,client_id,eval_fd\n";
    for (const RoundRecord& record : result.history) {
      if (record.has_weights) {
        for (std::size_t i = 0; i < record.alphas.size(); ++i) {
          alpha_csv += std::to_string(record.round) + "," +
                       std::to_string(scenario.specs[i].client_id) + "," + fmt(record.alphas[i]) +
                       "," + fmt(record.totals[i]) + "\n";
        }
      }
      for (std::size_t i = 0; i < record.eval_fd.size(); ++i) {
        eval_csv += std::to_string(record.round) + "," +
                    std::to_string(scenario.specs[i].client_id) + "," + fmt(record.eval_fd[i]) +
                    "\n";
      }
    }
    write_text(dir / "alpha_trace.csv", alpha_csv);
    write_text(dir / "eval.csv", eval_csv);

    nlohmann::ordered_json summary;
    summary["aggregator"] = cfg.aggregator;
    summary["master_seed"] = cfg.master_seed;
    summary["rounds_run"] = result.rounds_run;
    summary["converged"] = result.converged;
    summary["final_eval_fd"] = result.final_eval;
    summary["final_avg_fd"] = result.final_avg;
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    save_checkpoint((dir / "checkpoint.bin").string(), result.final_model, result.rounds_run);

    std::cout << "done: " << result.rounds_run << " rounds, final avg_fd=" << result.final_avg
              << (result.converged ? " (converged)" : " (round cap)") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& aggregators,
                const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
  try {
    if (aggregators.empty()) throw InvalidSpec("need at least one aggregator");
    if (seeds.empty()) throw InvalidSpec("need at least one seed");
    for (const std::string& name : aggregators) {
      if (name != "fedavg" && name != "fedadam" && name != "fedcar" && name != "fedsgd") {
        throw InvalidSpec("unknown aggregator: " + name);
      }
    }
    FederationConfig base = load_config_file(config_path);
    validate_federation_config(base);

    const fs::path dir(out_dir);
    fs::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["version"] = kVersionString;
    manifest["aggregators"] = aggregators;
    manifest["seeds"] = seeds;
    manifest["config"] = config_to_json(base);
    manifest["artifacts"] = {{"summary", "summary.csv"}, {"median", "median.csv"}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::vector<CompareRow> rows;
    std::size_t num_clients = 0;
    for (const std::uint64_t seed : seeds) {
      FederationConfig cfg = base;
      cfg.master_seed = seed;
      cfg.scenario.seed = seed;
      // One materialized scenario per seed, shared by every strategy and
      // baseline: the comparison is paired.
      const Scenario scenario = build_scenario(cfg.scenario);
      num_clients = scenario.specs.size();

      for (const std::string& name : aggregators) {
        FederationConfig cell = cfg;
        cell.aggregator = name;
        const ExperimentResult result = run_experiment_with_scenario(cell, scenario);
        rows.push_back({name, seed, result.final_eval, result.final_avg});
        std::cout << "[seed " << seed << "] " << name << " avg_fd=" << result.final_avg << " ("
                  << result.rounds_run << " rounds)\n";
      }
      const BaselineResult individual = run_individual_baseline(cfg, scenario);
      rows.push_back({"individual", seed, individual.eval_fd, individual.avg});
      std::cout << "[seed " << seed << "] individual avg_fd=" << individual.avg << "\n";
      const BaselineResult centralized = run_centralized_baseline(cfg, scenario);
      rows.push_back({"centralized", seed, centralized.eval_fd, centralized.avg});
      std::cout << "[seed " << seed << "] centralized avg_fd=" << centralized.avg << "\n";
    }

    std::string header = "aggregator,seed";
    for (std::size_t i = 0; i < num_clients; ++i) header += ",fd_client_" + std::to_string(i);
    header += ",avg_fd\n";
    std::string summary_csv = header;
    for (const CompareRow& row : rows) summary_csv += csv_row(row);
    write_text(dir / "summary.csv", summary_csv);

    std::vector<std::string> labels = aggregators;
    labels.emplace_back("individual");
    labels.emplace_back("centralized");
    std::string median_csv = "aggregator";
    for (std::size_t i = 0; i < num_clients; ++i) {
      median_csv += ",fd_client_" + std::to_string(i) + "_median";
    }
    median_csv += ",avg_fd_median\n";
    for (const std::string& label : labels) {
      median_csv += label;
      for (std::size_t i = 0; i < num_clients; ++i) {
        std::vector<double> values;
        for (const CompareRow& row : rows) {
          if (row.label == label) values.push_back(row.eval_fd[i]);
        }
        median_csv += "," + fmt(median(values));
      }
      std::vector<double> avgs;
      for (const CompareRow& row : rows) {
        if (row.label == label) avgs.push_back(row.avg);
      }
      median_csv += "," + fmt(median(avgs)) + "\n";
    }
    write_text(dir / "median.csv", median_csv);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_validate(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot open config file: " << config_path << "\n";
    return 1;
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: config parse error in " << config_path << ": " << e.what() << "\n";
    return 1;
  }
  FederationConfig cfg;
  const std::vector<std::string> issues = check_config(doc, &cfg);
  if (!issues.empty()) {
    for (const std::string& issue : issues) std::cerr << issue << "\n";
    return 1;
  }
  std::cout << config_to_json(cfg).dump(2) << "\n";
  return 0;
}

}  // namespace fedgan
