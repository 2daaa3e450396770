#include "fedgan/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fedgan/errors.hpp"

namespace fedgan {
namespace {

using nlohmann::json;

struct Collector {
  std::vector<std::string>& issues;
  void add(const std::string& path, const std::string& what) { issues.push_back(path + ": " + what); }
};

bool get_section(const json& doc, const char* name, const json*& out, Collector& c) {
  if (!doc.contains(name)) return false;
  if (!doc.at(name).is_object()) {
    c.add(name, "must be an object");
    return false;
  }
  out = &doc.at(name);
  return true;
}

void check_unknown(const json& sec, const std::string& prefix,
                   const std::set<std::string>& allowed, Collector& c) {
  for (const auto& item : sec.items()) {
    if (allowed.find(item.key()) == allowed.end()) {
      c.add(prefix + "." + item.key(), "unknown key");
    }
  }
}

bool get_count(const json& sec, const std::string& prefix, const char* key, std::size_t& out,
               Collector& c) {
  if (!sec.contains(key)) return false;
  const json& v = sec.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
    c.add(prefix + "." + key, "must be a non-negative integer");
    return false;
  }
  out = v.get<std::size_t>();
  return true;
}

bool get_u64(const json& sec, const std::string& prefix, const char* key, std::uint64_t& out,
             Collector& c) {
  if (!sec.contains(key)) return false;
  const json& v = sec.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    c.add(prefix + "." + key, "must be a non-negative integer");
    return false;
  }
  out = v.get<std::uint64_t>();
  return true;
}

bool get_real(const json& sec, const std::string& prefix, const char* key, double& out,
              Collector& c) {
  if (!sec.contains(key)) return false;
  const json& v = sec.at(key);
  if (!v.is_number()) {
    c.add(prefix + "." + key, "must be a number");
    return false;
  }
  out = v.get<double>();
  return true;
}

bool get_text(const json& sec, const std::string& prefix, const char* key, std::string& out,
              Collector& c) {
  if (!sec.contains(key)) return false;
  const json& v = sec.at(key);
  if (!v.is_string()) {
    c.add(prefix + "." + key, "must be a string");
    return false;
  }
  out = v.get<std::string>();
  return true;
}

bool get_flag(const json& sec, const std::string& prefix, const char* key, bool& out,
              Collector& c) {
  if (!sec.contains(key)) return false;
  const json& v = sec.at(key);
  if (!v.is_boolean()) {
    c.add(prefix + "." + key, "must be a boolean");
    return false;
  }
  out = v.get<bool>();
  return true;
}

bool get_widths(const json& sec, const std::string& prefix, const char* key,
                std::vector<std::size_t>& out, Collector& c) {
  if (!sec.contains(key)) return false;
  const json& v = sec.at(key);
  if (!v.is_array() || v.empty()) {
    c.add(prefix + "." + key, "must be a non-empty array of positive integers");
    return false;
  }
  std::vector<std::size_t> widths;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<long long>() < 1) {
      c.add(prefix + "." + key, "must be a non-empty array of positive integers");
      return false;
    }
    widths.push_back(e.get<std::size_t>());
  }
  out = std::move(widths);
  return true;
}

bool parse_vec2(const json& v, std::array<double, 2>& out) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) return false;
  out[0] = v[0].get<double>();
  out[1] = v[1].get<double>();
  return true;
}

void parse_custom_clients(const json& arr, const std::string& prefix,
                          std::vector<ClientDatasetSpec>& out, Collector& c) {
  if (!arr.is_array() || arr.empty()) {
    c.add(prefix, "must be a non-empty array of client objects");
    return;
  }
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string cpath = prefix + "[" + std::to_string(i) + "]";
    const json& cj = arr[i];
    if (!cj.is_object()) {
      c.add(cpath, "must be an object");
      continue;
    }
    check_unknown(cj, cpath, {"size", "components"}, c);
    ClientDatasetSpec spec;
    spec.client_id = static_cast<int>(i);
    if (!cj.contains("size") || !cj.at("size").is_number_integer() ||
        cj.at("size").get<long long>() < 1) {
      c.add(cpath + ".size", "must be an integer >= 1");
    } else {
      spec.size = cj.at("size").get<std::size_t>();
    }
    if (!cj.contains("components") || !cj.at("components").is_array() ||
        cj.at("components").empty()) {
      c.add(cpath + ".components", "must be a non-empty array");
      continue;
    }
    bool components_ok = true;
    for (std::size_t k = 0; k < cj.at("components").size(); ++k) {
      const std::string kpath = cpath + ".components[" + std::to_string(k) + "]";
      const json& kj = cj.at("components")[k];
      if (!kj.is_object()) {
        c.add(kpath, "must be an object");
        components_ok = false;
        continue;
      }
      check_unknown(kj, kpath, {"mean", "covariance", "weight"}, c);
      MixtureComponent comp;
      if (!kj.contains("mean") || !parse_vec2(kj.at("mean"), comp.mean)) {
        c.add(kpath + ".mean", "must be an array of 2 numbers");
        components_ok = false;
      }
      bool cov_ok = kj.contains("covariance") && kj.at("covariance").is_array() &&
                    kj.at("covariance").size() == 2;
      if (cov_ok) {
        for (int r = 0; r < 2; ++r) {
          std::array<double, 2> row{};
          if (!parse_vec2(kj.at("covariance")[r], row)) {
            cov_ok = false;
            break;
          }
          comp.covariance(r, 0) = row[0];
          comp.covariance(r, 1) = row[1];
        }
      }
      if (!cov_ok) {
        c.add(kpath + ".covariance", "must be a 2x2 array of numbers");
        components_ok = false;
      }
      if (!kj.contains("weight") || !kj.at("weight").is_number()) {
        c.add(kpath + ".weight", "must be a number");
        components_ok = false;
      } else {
        comp.weight = kj.at("weight").get<double>();
      }
      spec.mixture.components.push_back(comp);
    }
    if (components_ok) {
      try {
        validate_mixture(spec.mixture);
      } catch (const InvalidSpec& e) {
        c.add(cpath + ".components", e.what());
      }
    }
    out.push_back(std::move(spec));
  }
}

}  // namespace

std::vector<std::string> check_config(const nlohmann::json& doc, FederationConfig* out) {
  std::vector<std::string> issues;
  Collector c{issues};
  FederationConfig cfg;

  if (!doc.is_object()) {
    c.add("config", "top level must be a JSON object");
    return issues;
  }
  check_unknown(doc, "config", {"federation", "train", "scenario"}, c);

  const json* sec = nullptr;
  if (get_section(doc, "federation", sec, c)) {
    const std::string p = "federation";
    check_unknown(*sec, p,
                  {"num_rounds_max", "server_fake_count", "eval_fake_count", "convergence_tol",
                   "convergence_window", "aggregator", "master_seed", "server_lr", "server_beta1",
                   "server_beta2", "server_eps", "fedcar_alpha_weighted_disc"},
                  c);
    get_count(*sec, p, "num_rounds_max", cfg.num_rounds_max, c);
    get_count(*sec, p, "server_fake_count", cfg.server_fake_count, c);
    get_count(*sec, p, "eval_fake_count", cfg.eval_fake_count, c);
    get_real(*sec, p, "convergence_tol", cfg.convergence_tol, c);
    get_count(*sec, p, "convergence_window", cfg.convergence_window, c);
    get_text(*sec, p, "aggregator", cfg.aggregator, c);
    get_u64(*sec, p, "master_seed", cfg.master_seed, c);
    get_real(*sec, p, "server_lr", cfg.agg_options.server_lr, c);
    get_real(*sec, p, "server_beta1", cfg.agg_options.server_beta1, c);
    get_real(*sec, p, "server_beta2", cfg.agg_options.server_beta2, c);
    get_real(*sec, p, "server_eps", cfg.agg_options.server_eps, c);
    get_flag(*sec, p, "fedcar_alpha_weighted_disc", cfg.agg_options.fedcar_alpha_weighted_disc, c);

    if (cfg.num_rounds_max < 1) c.add(p + ".num_rounds_max", "must be >= 1");
    if (cfg.server_fake_count < 2) c.add(p + ".server_fake_count", "must be >= 2");
    if (cfg.eval_fake_count < 2) c.add(p + ".eval_fake_count", "must be >= 2");
    if (!(cfg.convergence_tol > 0.0)) c.add(p + ".convergence_tol", "must be > 0");
    if (cfg.convergence_window < 1) c.add(p + ".convergence_window", "must be >= 1");
    if (cfg.aggregator != "fedavg" && cfg.aggregator != "fedadam" && cfg.aggregator != "fedcar" &&
        cfg.aggregator != "fedsgd") {
      c.add(p + ".aggregator", "must be one of fedavg, fedadam, fedcar, fedsgd");
    }
    if (!(cfg.agg_options.server_lr > 0.0)) c.add(p + ".server_lr", "must be > 0");
    if (cfg.agg_options.server_beta1 < 0.0 || cfg.agg_options.server_beta1 >= 1.0) {
      c.add(p + ".server_beta1", "must be in [0, 1)");
    }
    if (cfg.agg_options.server_beta2 < 0.0 || cfg.agg_options.server_beta2 >= 1.0) {
      c.add(p + ".server_beta2", "must be in [0, 1)");
    }
    if (!(cfg.agg_options.server_eps > 0.0)) c.add(p + ".server_eps", "must be > 0");
  }

  sec = nullptr;
  if (get_section(doc, "train", sec, c)) {
    const std::string p = "train";
    check_unknown(*sec, p,
                  {"lr_g", "lr_d", "adam_beta1", "adam_beta2", "adam_eps", "batch_size",
                   "latent_dim", "local_steps", "data_dim", "gen_hidden", "disc_hidden",
                   "leaky_slope"},
                  c);
    TrainConfig& t = cfg.train;
    get_real(*sec, p, "lr_g", t.lr_g, c);
    get_real(*sec, p, "lr_d", t.lr_d, c);
    get_real(*sec, p, "adam_beta1", t.adam_beta1, c);
    get_real(*sec, p, "adam_beta2", t.adam_beta2, c);
    get_real(*sec, p, "adam_eps", t.adam_eps, c);
    get_count(*sec, p, "batch_size", t.batch_size, c);
    get_count(*sec, p, "latent_dim", t.latent_dim, c);
    get_count(*sec, p, "local_steps", t.local_steps, c);
    get_count(*sec, p, "data_dim", t.data_dim, c);
    get_widths(*sec, p, "gen_hidden", t.gen_hidden, c);
    get_widths(*sec, p, "disc_hidden", t.disc_hidden, c);
    get_real(*sec, p, "leaky_slope", t.leaky_slope, c);

    if (!(t.lr_g > 0.0)) c.add(p + ".lr_g", "must be > 0");
    if (!(t.lr_d > 0.0)) c.add(p + ".lr_d", "must be > 0");
    if (t.adam_beta1 < 0.0 || t.adam_beta1 >= 1.0) c.add(p + ".adam_beta1", "must be in [0, 1)");
    if (t.adam_beta2 < 0.0 || t.adam_beta2 >= 1.0) c.add(p + ".adam_beta2", "must be in [0, 1)");
    if (!(t.adam_eps > 0.0)) c.add(p + ".adam_eps", "must be > 0");
    if (t.batch_size < 1) c.add(p + ".batch_size", "must be >= 1");
    if (t.latent_dim < 1) c.add(p + ".latent_dim", "must be >= 1");
    if (t.local_steps < 1) c.add(p + ".local_steps", "must be >= 1");
    if (t.data_dim != 2) c.add(p + ".data_dim", "must be 2 (planar scenarios)");
    if (t.leaky_slope < 0.0 || t.leaky_slope >= 1.0) c.add(p + ".leaky_slope", "must be in [0, 1)");
  }

  sec = nullptr;
  if (get_section(doc, "scenario", sec, c)) {
    const std::string p = "scenario";
    check_unknown(*sec, p,
                  {"kind", "num_clients", "base_size", "severe_ratio", "small_client_index",
                   "seed", "custom_clients"},
                  c);
    ScenarioConfig& s = cfg.scenario;
    std::string kind_text = to_string(s.kind);
    if (get_text(*sec, p, "kind", kind_text, c)) {
      try {
        s.kind = scenario_kind_from_string(kind_text);
      } catch (const InvalidSpec& e) {
        c.add(p + ".kind", e.what());
      }
    }
    get_count(*sec, p, "num_clients", s.num_clients, c);
    get_count(*sec, p, "base_size", s.base_size, c);
    get_real(*sec, p, "severe_ratio", s.severe_ratio, c);
    get_count(*sec, p, "small_client_index", s.small_client_index, c);
    get_u64(*sec, p, "seed", s.seed, c);
    if (sec->contains("custom_clients")) {
      if (s.kind != ScenarioKind::kCustom) {
        c.add(p + ".custom_clients", "only valid with kind = custom");
      } else {
        parse_custom_clients(sec->at("custom_clients"), p + ".custom_clients", s.custom_clients, c);
      }
    }

    if (s.kind == ScenarioKind::kCustom) {
      if (!sec->contains("custom_clients")) {
        c.add(p + ".custom_clients", "required when kind = custom");
      }
    } else {
      if (s.num_clients < 2) c.add(p + ".num_clients", "must be >= 2");
      if (s.base_size < 1) c.add(p + ".base_size", "must be >= 1");
    }
    if (s.kind == ScenarioKind::kSevere) {
      if (!(s.severe_ratio > 0.0) || s.severe_ratio > 1.0) {
        c.add(p + ".severe_ratio", "must be in (0, 1]");
      } else if (std::llround(static_cast<double>(s.base_size) * s.severe_ratio) < 1) {
        c.add(p + ".severe_ratio", "rounds the small client to zero samples");
      }
      if (s.small_client_index >= s.num_clients) {
        c.add(p + ".small_client_index", "must be < num_clients");
      }
    }
  }

  if (issues.empty() && out != nullptr) {
    *out = cfg;
  }
  return issues;
}

FederationConfig parse_config(const nlohmann::json& doc) {
  FederationConfig cfg;
  const std::vector<std::string> issues = check_config(doc, &cfg);
  if (!issues.empty()) {
    std::string message = "invalid config:";
    for (const std::string& issue : issues) message += "\n  " + issue;
    throw ConfigError(message);
  }
  return cfg;
}

FederationConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json config_to_json(const FederationConfig& cfg) {
  nlohmann::ordered_json j;
  j["federation"] = {{"num_rounds_max", cfg.num_rounds_max},
                     {"server_fake_count", cfg.server_fake_count},
                     {"eval_fake_count", cfg.eval_fake_count},
                     {"convergence_tol", cfg.convergence_tol},
                     {"convergence_window", cfg.convergence_window},
                     {"aggregator", cfg.aggregator},
                     {"master_seed", cfg.master_seed},
                     {"server_lr", cfg.agg_options.server_lr},
                     {"server_beta1", cfg.agg_options.server_beta1},
                     {"server_beta2", cfg.agg_options.server_beta2},
                     {"server_eps", cfg.agg_options.server_eps},
                     {"fedcar_alpha_weighted_disc", cfg.agg_options.fedcar_alpha_weighted_disc}};
  j["train"] = {{"lr_g", cfg.train.lr_g},
                {"lr_d", cfg.train.lr_d},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"batch_size", cfg.train.batch_size},
                {"latent_dim", cfg.train.latent_dim},
                {"local_steps", cfg.train.local_steps},
                {"data_dim", cfg.train.data_dim},
                {"gen_hidden", cfg.train.gen_hidden},
                {"disc_hidden", cfg.train.disc_hidden},
                {"leaky_slope", cfg.train.leaky_slope}};
  nlohmann::ordered_json scenario = {{"kind", to_string(cfg.scenario.kind)},
                                     {"num_clients", cfg.scenario.num_clients},
                                     {"base_size", cfg.scenario.base_size},
                                     {"severe_ratio", cfg.scenario.severe_ratio},
                                     {"small_client_index", cfg.scenario.small_client_index},
                                     {"seed", cfg.scenario.seed}};
  if (cfg.scenario.kind == ScenarioKind::kCustom) {
    nlohmann::ordered_json clients = nlohmann::ordered_json::array();
    for (const ClientDatasetSpec& spec : cfg.scenario.custom_clients) {
      nlohmann::ordered_json comps = nlohmann::ordered_json::array();
      for (const MixtureComponent& comp : spec.mixture.components) {
        comps.push_back({{"mean", {comp.mean[0], comp.mean[1]}},
                         {"covariance",
                          {{comp.covariance(0, 0), comp.covariance(0, 1)},
                           {comp.covariance(1, 0), comp.covariance(1, 1)}}},
                         {"weight", comp.weight}});
      }
      clients.push_back({{"size", spec.size}, {"components", comps}});
    }
    scenario["custom_clients"] = std::move(clients);
  }
  j["scenario"] = std::move(scenario);
  return j;
}

}  // namespace fedgan
