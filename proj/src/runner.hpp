#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common.hpp"
#include "condense.hpp"
#include "graph.hpp"
#include "metrics.hpp"
#include "recommend.hpp"
#include "synth.hpp"

namespace demorec {

// Flat key=value experiment configuration. Every field has a config key of
// the same name; `preset` keys apply immediately in line order so later
// keys win over preset values.
struct ExperimentConfig {
  std::string data;            // path (tsv/condensed) or unused for synth
  std::string format = "tsv";  // tsv | synth | condensed
  std::string out = "out";
  Index k_core = 10;
  double split_ratio = 0.8;
  std::uint64_t split_seed = 42;

  double alpha = 0.8;
  double lambda = 0.3;
  double beta = 0.6;
  double tau = 0.5;
  std::string backbone = "gcn";
  std::string matching = "gradient";
  Index dim = 64;
  Index hidden = 64;
  Index relay_layers = 2;
  int t_inner = 2;
  int theta_samples = 2;
  int epochs_condense = 60;
  double lr_condense = 0.001;
  double lr_inner = 0.1;
  bool bsl_on = true;
  bool straight_through = false;

  Index k = 20;
  int epochs_rec = 100;
  double lr_rec = 0.05;
  double reg = 0.0;
  double neg_exponent = 0.75;
  std::string rec_init = "fresh";  // fresh | condensed (warm start from E')

  std::vector<std::uint64_t> seeds = {1024, 2046, 4096};
  std::string eval_mode = "assign";  // assign | self
  std::string baseline = "full";     // full | ransam | majsam
  std::string sweep_param = "lambda";  // alpha | lambda | beta | dim
  int relay_steps = 60;   // assignment relay pre-training
  double relay_lr = 0.1;

  Index synth_users = 40;
  Index synth_items = 60;
  Index synth_blocks = 4;
  double synth_p_in = 0.3;
  double synth_p_out = 0.02;
  std::uint64_t synth_seed = 7;
  Index synth_min_user_deg = 2;
  Index synth_min_item_deg = 1;

  void validate() const;
};

// Applies one key; unknown keys raise a named validation error.
void apply_kv(ExperimentConfig& cfg, const std::string& key,
              const std::string& value);

// "desk" (d=64, 2 layers) or "paper" (d=256, 3 layers).
void apply_preset(ExperimentConfig& cfg, const std::string& preset);

// Whole config from key=value lines ('#' comments, blank lines ignored),
// starting from defaults.
ExperimentConfig parse_config_text(const std::string& text);

// Deterministic key order; round-trips through parse_config_text.
std::string serialize_config(const ExperimentConfig& cfg);

struct RunResult {
  int status = 0;          // 0 ok; nonzero mirrors Status codes
  std::string summary;     // one-line outcome, also surfaced over the C API
};

// Subcommands: condense | recommend | pipeline | baseline | ablate-bsl |
// sweep | bench. Artifacts land under config.out.
RunResult run_subcommand(const std::string& subcommand,
                         const ExperimentConfig& config);

// Worker cap from DEMOREC_THREADS (default 1, floor 1).
int worker_cap();

}  // namespace demorec
