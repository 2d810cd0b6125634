#include "synth.hpp"

#include <algorithm>
#include <set>

namespace demorec {

InteractionLog synth_block_log(const SyntheticConfig& config) {
  require(config.n_users >= 1 && config.n_items >= 1, Status::InvalidArgument,
          "synth_block_log: need at least one node per side");
  require(config.blocks >= 1 &&
              config.blocks <= std::min(config.n_users, config.n_items),
          Status::InvalidArgument, "synth_block_log: bad block count");
  require(config.p_in >= 0.0 && config.p_in <= 1.0 && config.p_out >= 0.0 &&
              config.p_out <= 1.0,
          Status::InvalidArgument, "synth_block_log: probabilities in [0,1]");

  auto user_block = [&](Index u) {
    return static_cast<int>(u * config.blocks / config.n_users);
  };
  auto item_block = [&](Index i) {
    return static_cast<int>(i * config.blocks / config.n_items);
  };

  Rng rng = make_rng(config.seed, 3);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::set<std::pair<Index, Index>> edges;
  std::vector<Index> udeg(static_cast<std::size_t>(config.n_users), 0);
  std::vector<Index> ideg(static_cast<std::size_t>(config.n_items), 0);
  for (Index u = 0; u < config.n_users; ++u)
    for (Index i = 0; i < config.n_items; ++i) {
      double p = (user_block(u) == item_block(i)) ? config.p_in : config.p_out;
      if (coin(rng) < p) {
        edges.emplace(u, i);
        ++udeg[static_cast<std::size_t>(u)];
        ++ideg[static_cast<std::size_t>(i)];
      }
    }

  // Degree floors: attach to in-block partners, lowest-degree first.
  auto in_block_items = [&](Index u) {
    std::vector<Index> out;
    for (Index i = 0; i < config.n_items; ++i)
      if (item_block(i) == user_block(u)) out.push_back(i);
    return out;
  };
  for (Index u = 0; u < config.n_users; ++u) {
    if (udeg[static_cast<std::size_t>(u)] >= config.min_user_degree) continue;
    auto cands = in_block_items(u);
    std::shuffle(cands.begin(), cands.end(), rng);
    for (Index i : cands) {
      if (udeg[static_cast<std::size_t>(u)] >= config.min_user_degree) break;
      if (edges.emplace(u, i).second) {
        ++udeg[static_cast<std::size_t>(u)];
        ++ideg[static_cast<std::size_t>(i)];
      }
    }
  }
  for (Index i = 0; i < config.n_items; ++i) {
    if (ideg[static_cast<std::size_t>(i)] >= config.min_item_degree) continue;
    std::vector<Index> cands;
    for (Index u = 0; u < config.n_users; ++u)
      if (user_block(u) == item_block(i)) cands.push_back(u);
    std::shuffle(cands.begin(), cands.end(), rng);
    for (Index u : cands) {
      if (ideg[static_cast<std::size_t>(i)] >= config.min_item_degree) break;
      if (edges.emplace(u, i).second) {
        ++udeg[static_cast<std::size_t>(u)];
        ++ideg[static_cast<std::size_t>(i)];
      }
    }
  }
  require(!edges.empty(), Status::EmptyGraph,
          "synth_block_log: generated no edges");

  InteractionLog log;
  log.num_users = config.n_users;
  log.num_items = config.n_items;
  for (Index u = 0; u < config.n_users; ++u) {
    log.user_names.push_back("u" + std::to_string(u));
    log.user_index.emplace(log.user_names.back(), u);
  }
  for (Index i = 0; i < config.n_items; ++i) {
    log.item_names.push_back("i" + std::to_string(i));
    log.item_index.emplace(log.item_names.back(), i);
  }
  for (const auto& [u, i] : edges) log.interactions.push_back({u, i, 1.0});
  return log;
}

}  // namespace demorec
