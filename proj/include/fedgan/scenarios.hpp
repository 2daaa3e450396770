#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fedgan/numerics.hpp"

namespace fedgan {

/// 2-D Gaussian mixture standing in for one institution's data distribution.
struct MixtureComponent {
  std::array<double, 2> mean{};
  DenseMatrix covariance{2, 2};  // symmetric PSD
  double weight = 0.0;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
};

struct ClientDatasetSpec {
  int client_id = 0;
  MixtureSpec mixture;
  std::size_t size = 0;
};

enum class ScenarioKind { kMild, kSevere, kCustom };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kMild;
  std::size_t num_clients = 3;
  std::size_t base_size = 2048;
  double severe_ratio = 0.1;  // small client's share of base_size
  std::size_t small_client_index = 1;
  std::uint64_t seed = 2024;
  // Only used when kind == kCustom: explicit per-client mixtures and sizes.
  std::vector<ClientDatasetSpec> custom_clients;
};

struct Scenario {
  std::vector<ClientDatasetSpec> specs;
  std::vector<DenseMatrix> datasets;  // one n_i x 2 matrix per client
};

void validate_mixture(const MixtureSpec& spec);

/// Deterministic mixture sampling: per sample one uniform draw picks the
/// component by weight, then a 2-D standard normal is pushed through the
/// symmetric square root of its covariance.
DenseMatrix sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);

/// The default per-client mixture geometry: three narrow modes on a shared
/// ring, with the whole layout translated per client so the institutions
/// overlap in structure but stay distinct. The narrow modes make the task
/// hard to learn from a small sample alone, which is the regime the severe
/// scenario's shrunken client probes.
MixtureSpec default_client_mixture(std::size_t client_index, std::size_t num_clients);

Scenario build_mild(const ScenarioConfig& cfg);
Scenario build_severe(const ScenarioConfig& cfg);
Scenario build_scenario(const ScenarioConfig& cfg);

/// One JSON record per client (id, size, mixture parameters), for
/// reproducibility audits.
void write_scenario_dump(const Scenario& scenario, const std::string& path);

}  // namespace fedgan
