// Command-line front end. Flags are translated into the flat key=value
// configuration the library consumes; precedence is preset < config file <
// individual flags (later lines win).

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "demorec/demorec.h"

namespace {

struct FlagSet {
  std::string config_file;
  std::string preset;
  std::vector<std::pair<std::string, std::string>> kv;  // in flag order
  std::vector<std::string> overrides;                   // raw key=value
};

void add_common(CLI::App* cmd, FlagSet& flags) {
  auto bind = [cmd, &flags](const std::string& flag, const std::string& key,
                            const std::string& help) {
    cmd->add_option_function<std::string>(
        flag,
        [&flags, key](const std::string& v) { flags.kv.emplace_back(key, v); },
        help);
  };
  cmd->add_option("--config", flags.config_file,
                  "key=value config file applied before flags");
  cmd->add_option("--preset", flags.preset, "desk (d=64) or paper (d=256)");
  bind("--data", "data", "dataset path (TSV) or condensed export directory");
  bind("--format", "format", "tsv, synth or condensed");
  bind("--alpha", "alpha", "condensation ratio in (0,1]");
  bind("--lambda", "lambda", "bipartite structure loss weight");
  bind("--beta", "beta", "matching loss weight");
  bind("--tau", "tau", "adjacency binarization threshold");
  bind("--backbone", "backbone", "gcn, sage or gat");
  bind("--matching", "matching", "gradient, trajectory or distribution");
  bind("--dim", "dim", "embedding dimension");
  bind("--k", "k", "recommendation list length");
  bind("--seeds", "seeds", "comma-separated seed list");
  bind("--epochs-condense", "epochs_condense", "Stage One outer epochs");
  bind("--epochs-rec", "epochs_rec", "Stage Two training epochs");
  bind("--lr", "lr_condense", "Stage One outer learning rate");
  bind("--out", "out", "output directory");
  bind("--eval-mode", "eval_mode", "assign or self");
  bind("--baseline", "baseline", "full, ransam or majsam");
  bind("--kind", "baseline", "alias of --baseline");
  bind("--param", "sweep_param", "sweep parameter: alpha, lambda, beta, dim");
  cmd->add_flag_function(
      "--no-bsl",
      [&flags](std::int64_t) { flags.kv.emplace_back("bsl_on", "false"); },
      "disable the bipartite structure loss");
  cmd->add_option("--set", flags.overrides,
                  "extra key=value override, repeatable")
      ->expected(-1);
}

int run(const std::string& name, const FlagSet& flags) {
  std::string config;
  if (!flags.preset.empty()) config += "preset=" + flags.preset + "\n";
  if (!flags.config_file.empty()) {
    std::ifstream in(flags.config_file);
    if (!in.good()) {
      std::fprintf(stderr, "error: cannot read config file '%s'\n",
                   flags.config_file.c_str());
      return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    config += ss.str();
    if (!config.empty() && config.back() != '\n') config += "\n";
  }
  for (const auto& [k, v] : flags.kv) config += k + "=" + v + "\n";
  for (const auto& kv : flags.overrides) config += kv + "\n";

  char* summary = nullptr;
  demorec_status st = demorec_run(name.c_str(), config.c_str(), &summary);
  if (st != DEMOREC_OK) {
    std::fprintf(stderr, "error: %s\n", demorec_last_error());
    demorec_string_free(summary);
    return static_cast<int>(st);
  }
  if (summary) std::printf("%s\n", summary);
  demorec_string_free(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DemoRec: bipartite graph condensation for top-K recommendation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(demorec_version()));

  const char* names[] = {"condense",   "recommend", "pipeline", "baseline",
                         "ablate-bsl", "sweep",     "bench"};
  const char* briefs[] = {
      "Stage One: condense the interaction graph and export it",
      "Stage Two: train the recommender on a given graph",
      "condense + recommend + evaluate per seed, aggregated",
      "full / ransam / majsam comparison runs",
      "paired runs with the structure loss on and off",
      "hyper-parameter grid over alpha, lambda, beta or dim",
      "per-epoch training time on original vs condensed graph"};

  std::vector<FlagSet> flags(std::size(names));
  for (std::size_t i = 0; i < std::size(names); ++i)
    add_common(app.add_subcommand(names[i], briefs[i]), flags[i]);

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < std::size(names); ++i)
    if (app.got_subcommand(names[i])) return run(names[i], flags[i]);
  return 1;
}
