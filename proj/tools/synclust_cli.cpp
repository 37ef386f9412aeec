// Command-line driver over the C API.
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "synclust/synclust.h"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kOracle = 4, kBudget = 5 };

int exit_code(synclust_status s) {
  switch (s) {
    case SYNCLUST_OK: return kOk;
    case SYNCLUST_ERR_CONFIG: return kConfig;
    case SYNCLUST_ERR_ORACLE_UNAVAILABLE:
    case SYNCLUST_ERR_UNPARSEABLE_REPLY: return kOracle;
    case SYNCLUST_ERR_BUDGET: return kBudget;
    case SYNCLUST_ERR_INVALID_ARGUMENT:
    case SYNCLUST_ERR_INTERNAL: return kOther;
    default: return kData;
  }
}

int report(synclust_status s) {
  if (s != SYNCLUST_OK) {
    std::fprintf(stderr, "synclust: error [%s]: %s\n", synclust_status_name(s), synclust_last_error());
  }
  return exit_code(s);
}

void print_and_free(char* json) {
  if (!json) return;
  std::printf("%s\n", json);
  synclust_string_free(json);
}

struct StageArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  unsigned workers = 0;
  bool resume = false;
};

int run_stage(const char* stage, const StageArgs& args) {
  synclust_config* config = nullptr;
  auto s = args.config_path.empty() ? synclust_config_new(&config)
                                    : synclust_config_load(args.config_path.c_str(), &config);
  if (s != SYNCLUST_OK) return report(s);

  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "synclust: error [config]: --set expects key=value, got '%s'\n", kv.c_str());
      synclust_config_free(config);
      return kConfig;
    }
    s = synclust_config_set(config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (s != SYNCLUST_OK) {
      synclust_config_free(config);
      return report(s);
    }
  }
  if (args.workers > 0) {
    s = synclust_config_set(config, "run.workers", std::to_string(args.workers).c_str());
    if (s != SYNCLUST_OK) {
      synclust_config_free(config);
      return report(s);
    }
  }

  char* summary = nullptr;
  s = synclust_stage_run(config, stage, args.resume ? 1 : 0, &summary);
  synclust_config_free(config);
  print_and_free(summary);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synonym term clustering pipeline"};
  app.set_version_flag("--version", std::string(synclust_version()));
  app.require_subcommand(1);

  StageArgs args;
  std::vector<std::pair<const char*, CLI::App*>> stages;
  for (const char* name : {"ingest", "optimize", "partition", "cluster", "eval"}) {
    auto* sub = app.add_subcommand(name, std::string("Run the ") + name + " stage");
    sub->add_option("-c,--config", args.config_path, "Config file (flat dotted keys)");
    sub->add_option("-s,--set", args.overrides, "Override a config key, key=value")->take_all();
    sub->add_option("-w,--workers", args.workers, "Cap on worker threads");
    if (std::string(name) == "cluster") {
      sub->add_flag("--resume", args.resume, "Reuse completed partition checkpoints");
    }
    stages.emplace_back(name, sub);
  }

  std::size_t concepts = 10;
  std::size_t per_concept = 6;
  std::size_t dim = 32;
  double intra_min = 0.9;
  double inter_max = 0.3;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto* synth = app.add_subcommand("synth", "Write a synthetic labeled corpus");
  synth->add_option("--concepts", concepts)->check(CLI::PositiveNumber);
  synth->add_option("--terms-per-concept", per_concept)->check(CLI::PositiveNumber);
  synth->add_option("--dim", dim)->check(CLI::PositiveNumber);
  synth->add_option("--intra-min", intra_min);
  synth->add_option("--inter-max", inter_max);
  synth->add_option("--seed", seed);
  synth->add_option("-o,--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  for (const auto& [name, sub] : stages) {
    if (sub->parsed()) return run_stage(name, args);
  }
  char* summary = nullptr;
  const auto s =
      synclust_synth_write(concepts, per_concept, dim, intra_min, inter_max, seed, out_dir.c_str(), &summary);
  print_and_free(summary);
  return report(s);
}
