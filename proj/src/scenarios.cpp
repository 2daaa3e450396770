#include "fedgan/scenarios.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <utility>

#include <json.hpp>

#include "fedgan/errors.hpp"
#include "fedgan/rng.hpp"

namespace fedgan {
namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

// Geometry of the default institutions. Every client draws from three
// narrow, well-separated modes on a shared ring; only the center of the
// layout is translated per client, so the institutions agree on where the
// modes are but differ in how the neighbourhood around them is shifted.
// The narrow modes are deliberate: covering three distant needles is a
// genuinely hard task for a small GAN, and a client with only a few hundred
// rows tends to lose modes when it trains alone — the failure mode the
// severe scenario is designed to exhibit — while the federation, averaging
// three clients every round, holds the full support far more reliably.
constexpr double kRingRadius = 2.0;
constexpr double kCenterOffset = 0.6;
constexpr double kSigmaMajor = 0.12;
constexpr double kSigmaMinor = 0.07;

DenseMatrix rotated_covariance(double angle, double sigma_major, double sigma_minor) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double a = sigma_major * sigma_major;
  const double b = sigma_minor * sigma_minor;
  DenseMatrix cov(2, 2);
  cov(0, 0) = a * c * c + b * s * s;
  cov(0, 1) = (a - b) * c * s;
  cov(1, 0) = cov(0, 1);
  cov(1, 1) = a * s * s + b * c * c;
  return cov;
}

Scenario materialize(const ScenarioConfig& cfg, std::vector<ClientDatasetSpec> specs) {
  Scenario scenario;
  scenario.specs = std::move(specs);
  scenario.datasets.reserve(scenario.specs.size());
  for (const ClientDatasetSpec& spec : scenario.specs) {
    validate_mixture(spec.mixture);
    if (spec.size == 0) {
      throw InvalidSpec("client " + std::to_string(spec.client_id) +
                        ": dataset size must be positive");
    }
    scenario.datasets.push_back(sample_mixture(
        spec.mixture, spec.size,
        mix_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::kStreamScenario),
                 static_cast<std::uint64_t>(spec.client_id))));
  }
  return scenario;
}

void check_common(const ScenarioConfig& cfg) {
  if (cfg.num_clients < 2) {
    throw InvalidSpec("scenario needs at least 2 clients");
  }
  if (cfg.base_size == 0) {
    throw InvalidSpec("base_size must be positive");
  }
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kMild:
      return "mild";
    case ScenarioKind::kSevere:
      return "severe";
    case ScenarioKind::kCustom:
      return "custom";
  }
  throw InvalidSpec("unknown scenario kind");
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "mild") return ScenarioKind::kMild;
  if (s == "severe") return ScenarioKind::kSevere;
  if (s == "custom") return ScenarioKind::kCustom;
  throw InvalidSpec("unknown scenario kind: " + s);
}

void validate_mixture(const MixtureSpec& spec) {
  if (spec.components.empty()) {
    throw InvalidSpec("mixture has no components");
  }
  double weight_sum = 0.0;
  for (const MixtureComponent& comp : spec.components) {
    if (!(comp.weight > 0.0) || !std::isfinite(comp.weight)) {
      throw InvalidSpec("mixture weights must be positive");
    }
    weight_sum += comp.weight;
    const DenseMatrix& cov = comp.covariance;
    if (cov.rows != 2 || cov.cols != 2) {
      throw InvalidSpec("mixture covariance must be 2x2");
    }
    if (!all_finite(cov) || !std::isfinite(comp.mean[0]) || !std::isfinite(comp.mean[1])) {
      throw InvalidSpec("mixture parameters must be finite");
    }
    const double scale = std::max(1.0, max_abs(cov));
    if (std::abs(cov(0, 1) - cov(1, 0)) > 1e-9 * scale) {
      throw InvalidSpec("mixture covariance must be symmetric");
    }
    // Smallest eigenvalue of a symmetric 2x2, in closed form.
    const double half_trace = 0.5 * (cov(0, 0) + cov(1, 1));
    const double half_gap = 0.5 * (cov(0, 0) - cov(1, 1));
    const double eig_min = half_trace - std::sqrt(half_gap * half_gap + cov(0, 1) * cov(0, 1));
    if (eig_min < -1e-8) {
      throw InvalidSpec("mixture covariance must be positive semi-definite");
    }
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw InvalidSpec("mixture weights must sum to 1");
  }
}

DenseMatrix sample_mixture(const MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  validate_mixture(spec);
  if (n == 0) {
    throw InvalidSpec("sample count must be positive");
  }
  std::vector<DenseMatrix> factors;
  factors.reserve(spec.components.size());
  for (const MixtureComponent& comp : spec.components) {
    factors.push_back(psd_sqrt(comp.covariance));
  }
  std::vector<double> cumulative;
  cumulative.reserve(spec.components.size());
  double acc = 0.0;
  for (const MixtureComponent& comp : spec.components) {
    acc += comp.weight;
    cumulative.push_back(acc);
  }
  cumulative.back() = 1.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix out(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unif(rng);
    std::size_t k = 0;
    while (k + 1 < cumulative.size() && u > cumulative[k]) {
      ++k;
    }
    const double z0 = normal(rng);
    const double z1 = normal(rng);
    const DenseMatrix& b = factors[k];
    const MixtureComponent& comp = spec.components[k];
    out(i, 0) = comp.mean[0] + b(0, 0) * z0 + b(0, 1) * z1;
    out(i, 1) = comp.mean[1] + b(1, 0) * z0 + b(1, 1) * z1;
  }
  return out;
}

MixtureSpec default_client_mixture(std::size_t client_index, std::size_t num_clients) {
  if (num_clients == 0 || client_index >= num_clients) {
    throw InvalidSpec("client index out of range");
  }
  const double n = static_cast<double>(num_clients);
  const double i = static_cast<double>(client_index);
  const double center_angle = kTwoPi * i / n;
  // All clients share the ring orientation (same mode directions, like
  // institutions imaging the same anatomy); heterogeneity comes from the
  // translated centers, which shift every mode without moving the layout
  // apart. The pooled data therefore covers each client's support, which is
  // what lets a federated model serve a client whose own sample is tiny.
  const double cx = kCenterOffset * std::cos(center_angle);
  const double cy = kCenterOffset * std::sin(center_angle);

  MixtureSpec spec;
  for (int k = 0; k < 3; ++k) {
    const double ang = kTwoPi * static_cast<double>(k) / 3.0;
    MixtureComponent comp;
    comp.mean[0] = cx + kRingRadius * std::cos(ang);
    comp.mean[1] = cy + kRingRadius * std::sin(ang);
    comp.covariance = rotated_covariance(ang + kTwoPi / 4.0, kSigmaMajor, kSigmaMinor);
    comp.weight = 1.0 / 3.0;
    spec.components.push_back(comp);
  }
  return spec;
}

Scenario build_mild(const ScenarioConfig& cfg) {
  check_common(cfg);
  std::vector<ClientDatasetSpec> specs;
  for (std::size_t i = 0; i < cfg.num_clients; ++i) {
    ClientDatasetSpec spec;
    spec.client_id = static_cast<int>(i);
    spec.mixture = default_client_mixture(i, cfg.num_clients);
    spec.size = cfg.base_size;
    specs.push_back(std::move(spec));
  }
  return materialize(cfg, std::move(specs));
}

Scenario build_severe(const ScenarioConfig& cfg) {
  check_common(cfg);
  if (!(cfg.severe_ratio > 0.0) || cfg.severe_ratio > 1.0) {
    throw InvalidSpec("severe_ratio must be in (0, 1]");
  }
  if (cfg.small_client_index >= cfg.num_clients) {
    throw InvalidSpec("small_client_index out of range");
  }
  const auto small_size = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.base_size) * cfg.severe_ratio));
  if (small_size == 0) {
    throw InvalidSpec("severe_ratio rounds the small client to zero samples");
  }
  std::vector<ClientDatasetSpec> specs;
  for (std::size_t i = 0; i < cfg.num_clients; ++i) {
    ClientDatasetSpec spec;
    spec.client_id = static_cast<int>(i);
    spec.mixture = default_client_mixture(i, cfg.num_clients);
    spec.size = (i == cfg.small_client_index) ? small_size : cfg.base_size;
    specs.push_back(std::move(spec));
  }
  return materialize(cfg, std::move(specs));
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  switch (cfg.kind) {
    case ScenarioKind::kMild:
      return build_mild(cfg);
    case ScenarioKind::kSevere:
      return build_severe(cfg);
    case ScenarioKind::kCustom: {
      if (cfg.custom_clients.empty()) {
        throw InvalidSpec("custom scenario has no clients");
      }
      for (std::size_t i = 0; i < cfg.custom_clients.size(); ++i) {
        if (cfg.custom_clients[i].client_id != static_cast<int>(i)) {
          throw InvalidSpec("custom client ids must be 0..n-1 in order");
        }
      }
      return materialize(cfg, cfg.custom_clients);
    }
  }
  throw InvalidSpec("unknown scenario kind");
}

void write_scenario_dump(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  for (const ClientDatasetSpec& spec : scenario.specs) {
    nlohmann::json record;
    record["client_id"] = spec.client_id;
    record["size"] = spec.size;
    nlohmann::json comps = nlohmann::json::array();
    for (const MixtureComponent& comp : spec.mixture.components) {
      nlohmann::json c;
      c["mean"] = {comp.mean[0], comp.mean[1]};
      c["covariance"] = {{comp.covariance(0, 0), comp.covariance(0, 1)},
                         {comp.covariance(1, 0), comp.covariance(1, 1)}};
      c["weight"] = comp.weight;
      comps.push_back(c);
    }
    record["mixture"] = {{"components", comps}};
    out << record.dump() << "\n";
  }
  if (!out) {
    throw IoError("failed writing " + path);
  }
}

}  // namespace fedgan
