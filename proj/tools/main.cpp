#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedgan/runner.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedgan: federated GAN aggregation simulator"};
  app.set_version_flag("--version", std::string(fedgan::kVersionString));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed_flag = -1;

  CLI::App* run = app.add_subcommand("run", "run one experiment");
  run->add_option("--config", config_path, "config JSON path")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed_flag, "override master and scenario seed");

  std::string aggregators_text = "fedavg,fedadam,fedcar";
  std::string seeds_text = "1";
  CLI::App* compare = app.add_subcommand("compare", "compare aggregators over seeds");
  compare->add_option("--config", config_path, "config JSON path")->required();
  compare->add_option("--aggregators", aggregators_text, "comma-separated strategy names");
  compare->add_option("--seeds", seeds_text, "comma-separated seeds");
  compare->add_option("--out", out_dir, "output directory")->required();

  CLI::App* validate = app.add_subcommand("validate", "validate a config file");
  validate->add_option("--config", config_path, "config JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    std::optional<std::uint64_t> seed;
    if (run->count("--seed") > 0) {
      if (seed_flag < 0) {
        std::fprintf(stderr, "error: --seed must be >= 0\n");
        return 1;
      }
      seed = static_cast<std::uint64_t>(seed_flag);
    }
    return fedgan::cmd_run(config_path, out_dir, seed);
  }
  if (compare->parsed()) {
    std::vector<std::uint64_t> seeds;
    for (const std::string& s : split_commas(seeds_text)) {
      try {
        seeds.push_back(std::stoull(s));
      } catch (const std::exception&) {
        std::fprintf(stderr, "error: bad seed '%s'\n", s.c_str());
        return 1;
      }
    }
    return fedgan::cmd_compare(config_path, split_commas(aggregators_text), seeds, out_dir);
  }
  return fedgan::cmd_validate(config_path);
}
