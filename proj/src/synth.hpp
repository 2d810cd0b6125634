#pragma once

#include "common.hpp"
#include "graph.hpp"

namespace demorec {

// Bipartite stochastic block model: users and items are partitioned into
// `blocks` aligned groups; an edge appears with probability p_in inside a
// matched group pair and p_out across groups. Degrees below the floors are
// topped up with in-block edges so every node survives into training.
struct SyntheticConfig {
  Index n_users = 40;
  Index n_items = 60;
  int blocks = 4;
  double p_in = 0.3;
  double p_out = 0.02;
  std::uint64_t seed = 7;
  Index min_user_degree = 2;
  Index min_item_degree = 1;
};

InteractionLog synth_block_log(const SyntheticConfig& config);

}  // namespace demorec
