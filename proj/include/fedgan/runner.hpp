#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fedgan {

inline constexpr const char* kVersionString = "fedgan 0.1.0";

/// `run`: one experiment. Writes manifest.json (before round 0),
/// scenario.jsonl, rounds.jsonl (streamed), alpha_trace.csv, eval.csv,
/// summary.json and checkpoint.bin into out_dir. Returns a process exit
/// status; errors are printed, not thrown.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed_override);

/// `compare`: a (aggregator x seed) grid plus the individual and centralized
/// reference rows, every cell under a given seed sharing the same
/// materialized datasets. Writes manifest.json, summary.csv and median.csv.
int cmd_compare(const std::string& config_path, const std::vector<std::string>& aggregators,
                const std::vector<std::uint64_t>& seeds, const std::string& out_dir);

/// `validate`: full config validation; prints every violation, or echoes the
/// resolved config on success.
int cmd_validate(const std::string& config_path);

}  // namespace fedgan
