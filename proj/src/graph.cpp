#include "graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace demorec {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool looks_like_header(const std::vector<std::string>& toks) {
  static const std::set<std::string> words = {
      "user",   "user_id", "userid", "item",      "item_id",
      "itemid", "weight",  "rating", "timestamp", "time"};
  for (const auto& t : toks)
    if (words.count(lower(t))) return true;
  return false;
}

bool parse_weight(const std::string& tok, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(tok, &pos);
    return pos == tok.size() && std::isfinite(out);
  } catch (...) {
    return false;
  }
}

}  // namespace

BipartiteGraph BipartiteGraph::from_edges(
    Index num_users, Index num_items,
    const std::vector<std::pair<Index, Index>>& edges) {
  require(num_users >= 0 && num_items >= 0, Status::InvalidArgument,
          "from_edges: negative node counts");
  BipartiteGraph g;
  g.num_users = num_users;
  g.num_items = num_items;
  g.user_adj.assign(static_cast<std::size_t>(num_users), {});
  g.item_adj.assign(static_cast<std::size_t>(num_items), {});
  for (const auto& [u, i] : edges) {
    require(u >= 0 && u < num_users, Status::InvalidArgument,
            "from_edges: user index out of range");
    require(i >= 0 && i < num_items, Status::InvalidArgument,
            "from_edges: item index out of range");
    g.user_adj[static_cast<std::size_t>(u)].push_back(i);
  }
  g.num_edges = 0;
  for (Index u = 0; u < num_users; ++u) {
    auto& lst = g.user_adj[static_cast<std::size_t>(u)];
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
    g.num_edges += static_cast<std::int64_t>(lst.size());
    for (Index i : lst) g.item_adj[static_cast<std::size_t>(i)].push_back(u);
  }
  for (auto& lst : g.item_adj) std::sort(lst.begin(), lst.end());
  g.user_deg.resize(static_cast<std::size_t>(num_users));
  g.item_deg.resize(static_cast<std::size_t>(num_items));
  for (Index u = 0; u < num_users; ++u)
    g.user_deg[static_cast<std::size_t>(u)] =
        static_cast<Index>(g.user_adj[static_cast<std::size_t>(u)].size());
  for (Index i = 0; i < num_items; ++i)
    g.item_deg[static_cast<std::size_t>(i)] =
        static_cast<Index>(g.item_adj[static_cast<std::size_t>(i)].size());
  return g;
}

BipartiteGraph BipartiteGraph::from_log(const InteractionLog& log) {
  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(log.interactions.size());
  for (const auto& it : log.interactions) edges.emplace_back(it.user_id, it.item_id);
  return from_edges(log.num_users, log.num_items, edges);
}

bool BipartiteGraph::has_edge(Index user, Index item) const {
  if (user < 0 || user >= num_users) return false;
  const auto& lst = user_adj[static_cast<std::size_t>(user)];
  return std::binary_search(lst.begin(), lst.end(), item);
}

std::vector<std::pair<Index, Index>> BipartiteGraph::edge_list() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(static_cast<std::size_t>(num_edges));
  for (Index u = 0; u < num_users; ++u)
    for (Index i : user_adj[static_cast<std::size_t>(u)]) out.emplace_back(u, i);
  return out;
}

InteractionLog load_interactions(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Status::IoError, "cannot open '" + path + "'");

  InteractionLog log;
  std::set<std::pair<Index, Index>> seen;
  std::string line;
  std::size_t lineno = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (first_content_line) {
      first_content_line = false;
      if (looks_like_header(toks)) continue;
    }
    require(toks.size() >= 2, Status::ParseError,
            "line " + std::to_string(lineno) + ": expected `user item [weight [timestamp]]`");
    if (toks.size() >= 3) {
      double w = 0.0;
      require(parse_weight(toks[2], w) && w >= 0.0, Status::ParseError,
              "line " + std::to_string(lineno) + ": bad weight '" + toks[2] + "'");
    }
    auto uit = log.user_index.find(toks[0]);
    Index u;
    if (uit == log.user_index.end()) {
      u = log.num_users++;
      log.user_index.emplace(toks[0], u);
      log.user_names.push_back(toks[0]);
    } else {
      u = uit->second;
    }
    auto iit = log.item_index.find(toks[1]);
    Index i;
    if (iit == log.item_index.end()) {
      i = log.num_items++;
      log.item_index.emplace(toks[1], i);
      log.item_names.push_back(toks[1]);
    } else {
      i = iit->second;
    }
    // Implicit feedback: duplicates collapse, ratings/timestamps ignored.
    if (seen.emplace(u, i).second) log.interactions.push_back({u, i, 1.0});
  }
  require(!log.interactions.empty(), Status::EmptyGraph,
          "'" + path + "' contains no interactions");
  return log;
}

InteractionLog k_core_filter(const InteractionLog& log, Index k) {
  require(k >= 1, Status::InvalidArgument, "k_core_filter: k must be >= 1");

  std::vector<std::vector<Index>> user_adj(static_cast<std::size_t>(log.num_users));
  std::vector<std::vector<Index>> item_adj(static_cast<std::size_t>(log.num_items));
  for (const auto& it : log.interactions) {
    user_adj[static_cast<std::size_t>(it.user_id)].push_back(it.item_id);
    item_adj[static_cast<std::size_t>(it.item_id)].push_back(it.user_id);
  }
  std::vector<Index> udeg(static_cast<std::size_t>(log.num_users));
  std::vector<Index> ideg(static_cast<std::size_t>(log.num_items));
  std::vector<char> u_dead(static_cast<std::size_t>(log.num_users), 0);
  std::vector<char> i_dead(static_cast<std::size_t>(log.num_items), 0);
  for (Index u = 0; u < log.num_users; ++u)
    udeg[static_cast<std::size_t>(u)] =
        static_cast<Index>(user_adj[static_cast<std::size_t>(u)].size());
  for (Index i = 0; i < log.num_items; ++i)
    ideg[static_cast<std::size_t>(i)] =
        static_cast<Index>(item_adj[static_cast<std::size_t>(i)].size());

  // Queue-based peel to the fixed point: removing one node only ever lowers
  // neighbour degrees, so each node enters the queue at most once.
  std::deque<std::pair<char, Index>> queue;  // ('u'|'i', index)
  for (Index u = 0; u < log.num_users; ++u)
    if (udeg[static_cast<std::size_t>(u)] < k) {
      u_dead[static_cast<std::size_t>(u)] = 1;
      queue.emplace_back('u', u);
    }
  for (Index i = 0; i < log.num_items; ++i)
    if (ideg[static_cast<std::size_t>(i)] < k) {
      i_dead[static_cast<std::size_t>(i)] = 1;
      queue.emplace_back('i', i);
    }
  while (!queue.empty()) {
    auto [side, idx] = queue.front();
    queue.pop_front();
    if (side == 'u') {
      for (Index i : user_adj[static_cast<std::size_t>(idx)]) {
        if (i_dead[static_cast<std::size_t>(i)]) continue;
        if (--ideg[static_cast<std::size_t>(i)] < k) {
          i_dead[static_cast<std::size_t>(i)] = 1;
          queue.emplace_back('i', i);
        }
      }
    } else {
      for (Index u : item_adj[static_cast<std::size_t>(idx)]) {
        if (u_dead[static_cast<std::size_t>(u)]) continue;
        if (--udeg[static_cast<std::size_t>(u)] < k) {
          u_dead[static_cast<std::size_t>(u)] = 1;
          queue.emplace_back('u', u);
        }
      }
    }
  }

  InteractionLog out;
  for (const auto& it : log.interactions) {
    if (u_dead[static_cast<std::size_t>(it.user_id)] ||
        i_dead[static_cast<std::size_t>(it.item_id)])
      continue;
    const std::string& uname = log.user_names[static_cast<std::size_t>(it.user_id)];
    const std::string& iname = log.item_names[static_cast<std::size_t>(it.item_id)];
    auto uit = out.user_index.find(uname);
    Index u;
    if (uit == out.user_index.end()) {
      u = out.num_users++;
      out.user_index.emplace(uname, u);
      out.user_names.push_back(uname);
    } else {
      u = uit->second;
    }
    auto iit = out.item_index.find(iname);
    Index i;
    if (iit == out.item_index.end()) {
      i = out.num_items++;
      out.item_index.emplace(iname, i);
      out.item_names.push_back(iname);
    } else {
      i = iit->second;
    }
    out.interactions.push_back({u, i, it.weight});
  }
  require(!out.interactions.empty(), Status::EmptyGraph,
          "k_core_filter: no interactions survive k=" + std::to_string(k));
  return out;
}

SplitDataset split(const InteractionLog& log, double ratio, std::uint64_t seed) {
  require(ratio > 0.0 && ratio < 1.0, Status::InvalidArgument,
          "split: ratio must lie in (0,1)");

  std::vector<std::vector<Index>> per_user(static_cast<std::size_t>(log.num_users));
  for (const auto& it : log.interactions)
    per_user[static_cast<std::size_t>(it.user_id)].push_back(it.item_id);

  SplitDataset ds;
  ds.split_seed = seed;
  ds.ratio = ratio;
  ds.test.assign(static_cast<std::size_t>(log.num_users), {});
  std::vector<std::pair<Index, Index>> train_edges;
  for (Index u = 0; u < log.num_users; ++u) {
    auto items = per_user[static_cast<std::size_t>(u)];
    // Per-user stream so the split of one user never depends on another.
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(u));
    std::shuffle(items.begin(), items.end(), rng);
    auto n = static_cast<Index>(items.size());
    // Nudge before flooring: 0.8*10 must give 8 even when the product
    // lands at 7.9999... in binary.
    Index n_train = std::clamp<Index>(
        static_cast<Index>(std::floor(ratio * static_cast<double>(n) + 1e-9)),
        Index{1}, n);
    if (n == 1) ++ds.single_interaction_users;
    for (Index t = 0; t < n_train; ++t)
      train_edges.emplace_back(u, items[static_cast<std::size_t>(t)]);
    auto& test = ds.test[static_cast<std::size_t>(u)];
    test.assign(items.begin() + n_train, items.end());
    std::sort(test.begin(), test.end());
  }
  ds.train = BipartiteGraph::from_edges(log.num_users, log.num_items, train_edges);
  return ds;
}

GraphStats stats(const BipartiteGraph& graph) {
  require(graph.num_users >= 1 && graph.num_items >= 1, Status::EmptyGraph,
          "stats: graph has no nodes");
  GraphStats s;
  s.users = graph.num_users;
  s.items = graph.num_items;
  s.edges = graph.num_edges;
  s.density_pct = 100.0 * static_cast<double>(graph.num_edges) /
                  (static_cast<double>(graph.num_users) *
                   static_cast<double>(graph.num_items));
  return s;
}

std::string stats_json(const GraphStats& s) {
  nlohmann::json j;
  j["users"] = s.users;
  j["items"] = s.items;
  j["edges"] = s.edges;
  j["density_pct"] = s.density_pct;
  return j.dump();
}

namespace {

SampledGraph induce(const BipartiteGraph& graph, std::vector<Index> users,
                    std::vector<Index> items) {
  std::sort(users.begin(), users.end());
  std::sort(items.begin(), items.end());
  std::vector<char> keep_u(static_cast<std::size_t>(graph.num_users), 0);
  std::vector<char> keep_i(static_cast<std::size_t>(graph.num_items), 0);
  for (Index u : users) keep_u[static_cast<std::size_t>(u)] = 1;
  for (Index i : items) keep_i[static_cast<std::size_t>(i)] = 1;

  // Isolated nodes cannot be trained against, so they are pruned and the
  // prune is reported through dropped_* counts.
  std::vector<Index> live_deg_u(static_cast<std::size_t>(graph.num_users), 0);
  std::vector<Index> live_deg_i(static_cast<std::size_t>(graph.num_items), 0);
  for (Index u : users)
    for (Index i : graph.user_adj[static_cast<std::size_t>(u)])
      if (keep_i[static_cast<std::size_t>(i)]) {
        ++live_deg_u[static_cast<std::size_t>(u)];
        ++live_deg_i[static_cast<std::size_t>(i)];
      }

  SampledGraph out;
  std::vector<Index> u_new(static_cast<std::size_t>(graph.num_users), -1);
  std::vector<Index> i_new(static_cast<std::size_t>(graph.num_items), -1);
  for (Index u : users) {
    if (live_deg_u[static_cast<std::size_t>(u)] == 0) {
      ++out.dropped_users;
      continue;
    }
    u_new[static_cast<std::size_t>(u)] = static_cast<Index>(out.user_map.size());
    out.user_map.push_back(u);
  }
  for (Index i : items) {
    if (live_deg_i[static_cast<std::size_t>(i)] == 0) {
      ++out.dropped_items;
      continue;
    }
    i_new[static_cast<std::size_t>(i)] = static_cast<Index>(out.item_map.size());
    out.item_map.push_back(i);
  }
  std::vector<std::pair<Index, Index>> edges;
  for (Index u : out.user_map)
    for (Index i : graph.user_adj[static_cast<std::size_t>(u)])
      if (i_new[static_cast<std::size_t>(i)] >= 0)
        edges.emplace_back(u_new[static_cast<std::size_t>(u)],
                           i_new[static_cast<std::size_t>(i)]);
  out.graph = BipartiteGraph::from_edges(static_cast<Index>(out.user_map.size()),
                                         static_cast<Index>(out.item_map.size()),
                                         edges);
  return out;
}

}  // namespace

SampledGraph sample_subgraph_random(const BipartiteGraph& graph,
                                    double keep_ratio, std::uint64_t seed) {
  require(keep_ratio > 0.0 && keep_ratio <= 1.0, Status::InvalidArgument,
          "sample_subgraph_random: keep_ratio must lie in (0,1]");
  auto pick = [&](Index n, std::uint64_t stream) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    Rng rng = make_rng(seed, stream);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(
        std::floor(keep_ratio * static_cast<double>(n) + 1e-9)));
    return idx;
  };
  return induce(graph, pick(graph.num_users, 1), pick(graph.num_items, 2));
}

SampledGraph sample_subgraph_degree(const BipartiteGraph& graph,
                                    double keep_ratio) {
  require(keep_ratio > 0.0 && keep_ratio <= 1.0, Status::InvalidArgument,
          "sample_subgraph_degree: keep_ratio must lie in (0,1]");
  auto pick = [&](Index n, const std::vector<Index>& deg) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
      return deg[static_cast<std::size_t>(a)] > deg[static_cast<std::size_t>(b)];
    });
    idx.resize(static_cast<std::size_t>(
        std::floor(keep_ratio * static_cast<double>(n) + 1e-9)));
    return idx;
  };
  return induce(graph, pick(graph.num_users, graph.user_deg),
                pick(graph.num_items, graph.item_deg));
}

NegativeSampler::NegativeSampler(const BipartiteGraph& graph, double exponent) {
  require(exponent >= 0.0, Status::InvalidArgument,
          "NegativeSampler: exponent must be >= 0");
  require(graph.num_items >= 1, Status::EmptyGraph,
          "NegativeSampler: graph has no items");
  weights_.resize(static_cast<std::size_t>(graph.num_items));
  cdf_.resize(static_cast<std::size_t>(graph.num_items));
  for (Index i = 0; i < graph.num_items; ++i) {
    double d = static_cast<double>(graph.item_deg[static_cast<std::size_t>(i)]);
    double w = (exponent == 0.0) ? 1.0 : std::pow(d, exponent);
    weights_[static_cast<std::size_t>(i)] = w;
    if (w > 0.0) ++sampleable_;
    total_ += w;
    cdf_[static_cast<std::size_t>(i)] = total_;
  }
  require(total_ > 0.0, Status::EmptyGraph,
          "NegativeSampler: no item has positive sampling weight");
}

Index NegativeSampler::draw(Rng& rng) const {
  std::uniform_real_distribution<double> dist(0.0, total_);
  double r = dist(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), r);
  if (it == cdf_.end()) --it;
  return static_cast<Index>(it - cdf_.begin());
}

Index NegativeSampler::draw_excluding(Rng& rng,
                                      const std::vector<Index>& exclude) const {
  // Rejection is cheap while the exclusion list is small relative to the
  // catalogue; fall back to an explicit complement table if it is not.
  constexpr int kMaxRejects = 64;
  for (int t = 0; t < kMaxRejects; ++t) {
    Index v = draw(rng);
    if (!std::binary_search(exclude.begin(), exclude.end(), v)) return v;
  }
  std::vector<double> comp_cdf;
  std::vector<Index> comp_idx;
  double total = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] <= 0.0) continue;
    if (std::binary_search(exclude.begin(), exclude.end(), static_cast<Index>(i)))
      continue;
    total += weights_[i];
    comp_cdf.push_back(total);
    comp_idx.push_back(static_cast<Index>(i));
  }
  require(total > 0.0, Status::InvalidArgument,
          "draw_excluding: every sampleable item is excluded");
  std::uniform_real_distribution<double> dist(0.0, total);
  double r = dist(rng);
  auto it = std::upper_bound(comp_cdf.begin(), comp_cdf.end(), r);
  if (it == comp_cdf.end()) --it;
  return comp_idx[static_cast<std::size_t>(it - comp_cdf.begin())];
}

}  // namespace demorec
