#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace demorec {

struct Interaction {
  Index user_id = 0;
  Index item_id = 0;
  double weight = 1.0;
};

// Deduplicated interaction log with dense contiguous ids. External ids are
// kept in first-appearance order so loading is deterministic.
struct InteractionLog {
  std::vector<Interaction> interactions;
  Index num_users = 0;
  Index num_items = 0;
  std::vector<std::string> user_names;  // dense -> external
  std::vector<std::string> item_names;
  std::unordered_map<std::string, Index> user_index;  // external -> dense
  std::unordered_map<std::string, Index> item_index;
};

struct BipartiteGraph {
  Index num_users = 0;
  Index num_items = 0;
  std::vector<std::vector<Index>> user_adj;  // sorted item lists
  std::vector<std::vector<Index>> item_adj;  // sorted user lists
  std::vector<Index> user_deg;
  std::vector<Index> item_deg;
  std::int64_t num_edges = 0;

  static BipartiteGraph from_edges(Index num_users, Index num_items,
                                   const std::vector<std::pair<Index, Index>>& edges);
  static BipartiteGraph from_log(const InteractionLog& log);
  bool has_edge(Index user, Index item) const;
  std::vector<std::pair<Index, Index>> edge_list() const;
};

struct SplitDataset {
  BipartiteGraph train;
  std::vector<std::vector<Index>> test;  // per-user sorted held-out items
  std::uint64_t split_seed = 0;
  double ratio = 0.8;
  Index single_interaction_users = 0;  // fell back to train-only
};

struct GraphStats {
  Index users = 0;
  Index items = 0;
  std::int64_t edges = 0;
  double density_pct = 0.0;
};

// A sampled subgraph remembers how its compact indices map back to the
// original graph so evaluation can run in the original id space.
struct SampledGraph {
  BipartiteGraph graph;
  std::vector<Index> user_map;  // compact -> original
  std::vector<Index> item_map;
  Index dropped_users = 0;  // isolated after inducing edges
  Index dropped_items = 0;
};

InteractionLog load_interactions(const std::string& path);
InteractionLog k_core_filter(const InteractionLog& log, Index k);
SplitDataset split(const InteractionLog& log, double ratio, std::uint64_t seed);
GraphStats stats(const BipartiteGraph& graph);
std::string stats_json(const GraphStats& s);

SampledGraph sample_subgraph_random(const BipartiteGraph& graph,
                                    double keep_ratio, std::uint64_t seed);
SampledGraph sample_subgraph_degree(const BipartiteGraph& graph,
                                    double keep_ratio);

// Draws items with P(v) proportional to deg(v)^exponent via a cumulative
// table. Degree-0 items are unsampleable unless exponent is 0.
class NegativeSampler {
public:
  NegativeSampler(const BipartiteGraph& graph, double exponent);
  Index draw(Rng& rng) const;
  // `exclude` must be sorted ascending; throws when nothing remains.
  Index draw_excluding(Rng& rng, const std::vector<Index>& exclude) const;
  const std::vector<double>& weights() const { return weights_; }

private:
  std::vector<double> weights_;  // per item, >= 0
  std::vector<double> cdf_;
  double total_ = 0.0;
  Index sampleable_ = 0;
};

}  // namespace demorec
