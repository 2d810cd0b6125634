#include "runner.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>

#include <json.hpp>

#include "condensed.hpp"
#include "relay.hpp"
#include "tape.hpp"

namespace demorec {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string lower(const std::string& s) {
  std::string out;
  for (char c : s)
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Shortest round-trip representation, so CSVs echo configured grid values
// verbatim (0.01 stays "0.01").
std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    require(used == value.size(), Status::ParseError, "");
    return v;
  } catch (...) {
    throw Error(Status::InvalidArgument,
                "config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

long long parse_ll(const std::string& key, const std::string& value) {
  long long v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  require(res.ec == std::errc() && res.ptr == value.data() + value.size(),
          Status::InvalidArgument,
          "config: key '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  require(res.ec == std::errc() && res.ptr == value.data() + value.size(),
          Status::InvalidArgument,
          "config: key '" + key + "' expects an unsigned integer, got '" +
              value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(Status::InvalidArgument,
              "config: key '" + key + "' expects a boolean, got '" + value + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key,
                                           const std::string& value) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(parse_u64(key, tok));
  }
  require(!seeds.empty(), Status::InvalidArgument,
          "config: key '" + key + "' needs at least one seed");
  return seeds;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(seeds[i]);
  }
  return out;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Status::IoError, "cannot write '" + path + "'");
  out << content;
  require(out.good(), Status::IoError, "write failed for '" + path + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  auto in = [](const std::string& v, std::initializer_list<const char*> set) {
    for (const char* s : set)
      if (v == s) return true;
    return false;
  };
  require(in(format, {"tsv", "synth", "condensed"}), Status::InvalidArgument,
          "config: format must be tsv, synth or condensed");
  require(format == "synth" || !data.empty(), Status::InvalidArgument,
          "config: data path is required unless format=synth");
  require(!out.empty(), Status::InvalidArgument, "config: out must be set");
  require(k_core >= 0, Status::InvalidArgument, "config: k_core must be >= 0");
  require(split_ratio > 0.0 && split_ratio < 1.0, Status::InvalidArgument,
          "config: split_ratio must lie in (0,1)");
  require(alpha > 0.0 && alpha <= 1.0, Status::InvalidArgument,
          "config: alpha must lie in (0,1]");
  require(lambda >= 0.0 && beta >= 0.0, Status::InvalidArgument,
          "config: lambda and beta must be >= 0");
  require(tau > 0.0 && tau < 1.0, Status::InvalidArgument,
          "config: tau must lie in (0,1)");
  parse_backbone(backbone);
  parse_strategy(matching);
  require(dim >= 1 && hidden >= 1 && relay_layers >= 1, Status::InvalidArgument,
          "config: dim, hidden and relay_layers must be >= 1");
  require(t_inner >= 1 && theta_samples >= 1, Status::InvalidArgument,
          "config: t_inner and theta_samples must be >= 1");
  require(epochs_condense >= 0 && epochs_rec >= 1, Status::InvalidArgument,
          "config: epoch counts out of range");
  require(lr_condense > 0.0 && lr_inner >= 0.0 && lr_rec > 0.0,
          Status::InvalidArgument, "config: learning rates must be positive");
  require(reg >= 0.0, Status::InvalidArgument, "config: reg must be >= 0");
  require(k >= 1, Status::InvalidArgument, "config: k must be >= 1");
  require(!seeds.empty(), Status::InvalidArgument, "config: seeds is empty");
  require(in(eval_mode, {"assign", "self"}), Status::InvalidArgument,
          "config: eval_mode must be assign or self");
  require(in(baseline, {"full", "ransam", "majsam"}), Status::InvalidArgument,
          "config: baseline must be full, ransam or majsam");
  require(in(rec_init, {"fresh", "condensed"}), Status::InvalidArgument,
          "config: rec_init must be fresh or condensed");
  require(in(sweep_param, {"alpha", "lambda", "beta", "dim"}),
          Status::InvalidArgument,
          "config: sweep_param must be alpha, lambda, beta or dim");
  require(relay_steps >= 1 && relay_lr > 0.0, Status::InvalidArgument,
          "config: relay_steps/relay_lr out of range");
  require(synth_users >= 1 && synth_items >= 1 && synth_blocks >= 1,
          Status::InvalidArgument, "config: synthetic sizes must be >= 1");
  require(synth_p_in >= 0.0 && synth_p_in <= 1.0 && synth_p_out >= 0.0 &&
              synth_p_out <= 1.0,
          Status::InvalidArgument,
          "config: synthetic probabilities must lie in [0,1]");
}

void apply_preset(ExperimentConfig& cfg, const std::string& preset) {
  std::string p = lower(preset);
  if (p == "desk") {
    cfg.dim = 64;
    cfg.hidden = 64;
    cfg.relay_layers = 2;
    return;
  }
  if (p == "paper") {
    cfg.dim = 256;
    cfg.hidden = 256;
    cfg.relay_layers = 3;
    return;
  }
  throw Error(Status::InvalidArgument,
              "config: unknown preset '" + preset + "' (desk or paper)");
}

void apply_kv(ExperimentConfig& cfg, const std::string& key,
              const std::string& value) {
  const std::string& k = key;
  if (k == "data") cfg.data = value;
  else if (k == "format") cfg.format = lower(value);
  else if (k == "out") cfg.out = value;
  else if (k == "preset") apply_preset(cfg, value);
  else if (k == "k_core") cfg.k_core = static_cast<Index>(parse_ll(k, value));
  else if (k == "split_ratio") cfg.split_ratio = parse_double(k, value);
  else if (k == "split_seed") cfg.split_seed = parse_u64(k, value);
  else if (k == "alpha") cfg.alpha = parse_double(k, value);
  else if (k == "lambda") cfg.lambda = parse_double(k, value);
  else if (k == "beta") cfg.beta = parse_double(k, value);
  else if (k == "tau") cfg.tau = parse_double(k, value);
  else if (k == "backbone") cfg.backbone = lower(value);
  else if (k == "matching") cfg.matching = lower(value);
  else if (k == "dim") cfg.dim = static_cast<Index>(parse_ll(k, value));
  else if (k == "hidden") cfg.hidden = static_cast<Index>(parse_ll(k, value));
  else if (k == "relay_layers")
    cfg.relay_layers = static_cast<Index>(parse_ll(k, value));
  else if (k == "t_inner") cfg.t_inner = static_cast<int>(parse_ll(k, value));
  else if (k == "theta_samples")
    cfg.theta_samples = static_cast<int>(parse_ll(k, value));
  else if (k == "epochs_condense")
    cfg.epochs_condense = static_cast<int>(parse_ll(k, value));
  else if (k == "lr_condense") cfg.lr_condense = parse_double(k, value);
  else if (k == "lr_inner") cfg.lr_inner = parse_double(k, value);
  else if (k == "bsl_on") cfg.bsl_on = parse_bool(k, value);
  else if (k == "straight_through") cfg.straight_through = parse_bool(k, value);
  else if (k == "k") cfg.k = static_cast<Index>(parse_ll(k, value));
  else if (k == "epochs_rec") cfg.epochs_rec = static_cast<int>(parse_ll(k, value));
  else if (k == "lr_rec") cfg.lr_rec = parse_double(k, value);
  else if (k == "reg") cfg.reg = parse_double(k, value);
  else if (k == "neg_exponent") cfg.neg_exponent = parse_double(k, value);
  else if (k == "rec_init") cfg.rec_init = lower(value);
  else if (k == "seeds") cfg.seeds = parse_seed_list(k, value);
  else if (k == "eval_mode") cfg.eval_mode = lower(value);
  else if (k == "baseline") cfg.baseline = lower(value);
  else if (k == "sweep_param") cfg.sweep_param = lower(value);
  else if (k == "relay_steps") cfg.relay_steps = static_cast<int>(parse_ll(k, value));
  else if (k == "relay_lr") cfg.relay_lr = parse_double(k, value);
  else if (k == "synth_users")
    cfg.synth_users = static_cast<Index>(parse_ll(k, value));
  else if (k == "synth_items")
    cfg.synth_items = static_cast<Index>(parse_ll(k, value));
  else if (k == "synth_blocks")
    cfg.synth_blocks = static_cast<Index>(parse_ll(k, value));
  else if (k == "synth_p_in") cfg.synth_p_in = parse_double(k, value);
  else if (k == "synth_p_out") cfg.synth_p_out = parse_double(k, value);
  else if (k == "synth_seed") cfg.synth_seed = parse_u64(k, value);
  else if (k == "synth_min_user_deg")
    cfg.synth_min_user_deg = static_cast<Index>(parse_ll(k, value));
  else if (k == "synth_min_item_deg")
    cfg.synth_min_item_deg = static_cast<Index>(parse_ll(k, value));
  else
    throw Error(Status::InvalidArgument, "config: unknown key '" + key + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
  };
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    require(eq != std::string::npos, Status::ParseError,
            "config line " + std::to_string(lineno) + ": expected key=value");
    apply_kv(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

namespace {

std::vector<std::pair<std::string, std::string>> config_pairs(
    const ExperimentConfig& c) {
  return {
      {"data", c.data},
      {"format", c.format},
      {"out", c.out},
      {"k_core", std::to_string(c.k_core)},
      {"split_ratio", fmt(c.split_ratio)},
      {"split_seed", std::to_string(c.split_seed)},
      {"alpha", fmt(c.alpha)},
      {"lambda", fmt(c.lambda)},
      {"beta", fmt(c.beta)},
      {"tau", fmt(c.tau)},
      {"backbone", c.backbone},
      {"matching", c.matching},
      {"dim", std::to_string(c.dim)},
      {"hidden", std::to_string(c.hidden)},
      {"relay_layers", std::to_string(c.relay_layers)},
      {"t_inner", std::to_string(c.t_inner)},
      {"theta_samples", std::to_string(c.theta_samples)},
      {"epochs_condense", std::to_string(c.epochs_condense)},
      {"lr_condense", fmt(c.lr_condense)},
      {"lr_inner", fmt(c.lr_inner)},
      {"bsl_on", c.bsl_on ? "true" : "false"},
      {"straight_through", c.straight_through ? "true" : "false"},
      {"k", std::to_string(c.k)},
      {"epochs_rec", std::to_string(c.epochs_rec)},
      {"lr_rec", fmt(c.lr_rec)},
      {"reg", fmt(c.reg)},
      {"neg_exponent", fmt(c.neg_exponent)},
      {"rec_init", c.rec_init},
      {"seeds", join_seeds(c.seeds)},
      {"eval_mode", c.eval_mode},
      {"baseline", c.baseline},
      {"sweep_param", c.sweep_param},
      {"relay_steps", std::to_string(c.relay_steps)},
      {"relay_lr", fmt(c.relay_lr)},
      {"synth_users", std::to_string(c.synth_users)},
      {"synth_items", std::to_string(c.synth_items)},
      {"synth_blocks", std::to_string(c.synth_blocks)},
      {"synth_p_in", fmt(c.synth_p_in)},
      {"synth_p_out", fmt(c.synth_p_out)},
      {"synth_seed", std::to_string(c.synth_seed)},
      {"synth_min_user_deg", std::to_string(c.synth_min_user_deg)},
      {"synth_min_item_deg", std::to_string(c.synth_min_item_deg)},
  };
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_pairs(cfg)) out += k + "=" + v + "\n";
  return out;
}

int worker_cap() {
  const char* env = std::getenv("DEMOREC_THREADS");
  if (!env) return 1;
  long long v = 0;
  auto res = std::from_chars(env, env + std::strlen(env), v);
  if (res.ec != std::errc() || v < 1) return 1;
  return static_cast<int>(std::min<long long>(v, 64));
}

namespace {

// Runs fn(0..n-1), at most worker_cap() jobs in flight. Results must land
// in per-index slots so ordering never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::size_t cap = static_cast<std::size_t>(worker_cap());
  if (cap <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t next = 0;
  while (next < n) {
    std::size_t batch = std::min(cap, n - next);
    std::vector<std::future<void>> futs;
    futs.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b)
      futs.push_back(std::async(std::launch::async, fn, next + b));
    for (auto& f : futs) f.get();
    next += batch;
  }
}

struct DataBundle {
  InteractionLog log;  // after k-core filtering
  SplitDataset splitd;
};

InteractionLog make_log(const ExperimentConfig& cfg) {
  if (cfg.format == "synth") {
    SyntheticConfig sc;
    sc.n_users = cfg.synth_users;
    sc.n_items = cfg.synth_items;
    sc.blocks = cfg.synth_blocks;
    sc.p_in = cfg.synth_p_in;
    sc.p_out = cfg.synth_p_out;
    sc.seed = cfg.synth_seed;
    sc.min_user_degree = cfg.synth_min_user_deg;
    sc.min_item_degree = cfg.synth_min_item_deg;
    return synth_block_log(sc);
  }
  return load_interactions(cfg.data);
}

DataBundle prepare_data(const ExperimentConfig& cfg) {
  DataBundle d;
  d.log = make_log(cfg);
  if (cfg.k_core > 0) d.log = k_core_filter(d.log, cfg.k_core);
  require(!d.log.interactions.empty(), Status::EmptyGraph,
          "no interactions left after k-core filtering (k=" +
              std::to_string(cfg.k_core) + ")");
  d.splitd = split(d.log, cfg.split_ratio, cfg.split_seed);
  return d;
}

CondensationConfig make_ccfg(const ExperimentConfig& cfg, std::uint64_t seed) {
  CondensationConfig c;
  c.alpha = cfg.alpha;
  c.lambda = cfg.lambda;
  c.beta = cfg.beta;
  c.tau = cfg.tau;
  c.strategy = parse_strategy(cfg.matching);
  c.backbone = parse_backbone(cfg.backbone);
  c.dim = cfg.dim;
  c.hidden = cfg.hidden;
  c.relay_layers = cfg.relay_layers;
  c.t_inner = cfg.t_inner;
  c.theta_samples = cfg.theta_samples;
  c.outer_epochs = cfg.epochs_condense;
  c.lr_outer = cfg.lr_condense;
  c.lr_inner = cfg.lr_inner;
  c.seed = seed;
  c.bsl_on = cfg.bsl_on;
  c.straight_through = cfg.straight_through;
  if (cfg.alpha >= 1.0) {
    // alpha = 1 is the identity condensation: the graph is kept verbatim,
    // which pins the pipeline to the full baseline exactly.
    c.copy_init = true;
    c.outer_epochs = 0;
  }
  return c;
}

struct CondenseOutcome {
  CondenseResult res;
  Matrix soft;  // empty in copy mode
  std::vector<std::pair<Index, Index>> cross;
  std::int64_t intra_edges = 0;
  double intra_mass = 0.0;
  bool bipartite = true;
};

CondenseOutcome run_condense_seed(const ExperimentConfig& cfg,
                                  const BipartiteGraph& train,
                                  std::uint64_t seed, bool bsl_on) {
  CondensationConfig ccfg = make_ccfg(cfg, seed);
  ccfg.bsl_on = bsl_on;
  CondenseOutcome out;
  out.res = condense(ccfg, train);
  if (out.res.graph.copy_of_original) {
    out.cross = out.res.graph.original_edges;
    return out;
  }
  out.soft = soft_adjacency(out.res.graph)->value;
  out.cross = hard_cross_edges(out.soft, cfg.tau, out.res.graph.n_users,
                               out.res.graph.n_items);
  out.intra_edges =
      count_intra_edges(hard_adjacency(out.soft, cfg.tau), out.res.graph.n_users);
  out.intra_mass = intra_soft_mass(out.soft, out.res.graph.n_users);
  out.bipartite = out.intra_edges == 0;
  return out;
}

void export_seed_artifacts(const ExperimentConfig& cfg,
                           const CondenseOutcome& co, std::uint64_t seed,
                           const std::string& seed_dir) {
  fs::create_directories(seed_dir + "/condensed");
  CondensedMeta meta;
  meta.lambda = cfg.lambda;
  meta.beta = cfg.beta;
  meta.seed = seed;
  export_condensed(co.res.graph, meta, seed_dir + "/condensed");
  write_match_report_csv(co.res.report, seed_dir + "/match_report.csv");
}

RecModel stage_two(const ExperimentConfig& cfg, const CondenseOutcome& co,
                   std::uint64_t seed) {
  BipartiteGraph g = BipartiteGraph::from_edges(
      co.res.graph.n_users, co.res.graph.n_items, co.cross);
  require(g.num_edges > 0, Status::EmptyGraph,
          "condensed graph has no cross edges at tau=" + fmt(cfg.tau) +
              "; condense longer or lower tau");
  BprConfig bc;
  bc.dim = cfg.dim;
  bc.lr = cfg.lr_rec;
  bc.epochs = cfg.epochs_rec;
  bc.reg = cfg.reg;
  bc.neg_exponent = cfg.neg_exponent;
  bc.seed = mix_seed(seed, 800);
  bc.trained_on = TrainedOn::Condensed;
  if (cfg.rec_init == "condensed" && !co.res.graph.copy_of_original) {
    const Matrix& eu = co.res.graph.emb_users->value;
    const Matrix& ei = co.res.graph.emb_items->value;
    BprTrainer trainer(g, bc, &eu, &ei);
    for (int e = 0; e < bc.epochs; ++e) trainer.run_epoch();
    return trainer.take_model();
  }
  return bpr_train(g, bc);
}

struct SeedQuality {
  MetricsAtK metrics;
  Index assigned_users = 0;  // distinct representatives actually used
};

SeedQuality eval_assign_mode(const ExperimentConfig& cfg, const DataBundle& data,
                             const CondenseOutcome& co, const RecModel& model,
                             std::uint64_t seed) {
  const BipartiteGraph& train = data.splitd.train;
  Index n = train.num_users, m = train.num_items;
  Matrix h_orig, h_cond;
  if (co.res.graph.copy_of_original) {
    h_orig = Matrix::Zero(n + m, 1);
    h_cond = Matrix::Zero(co.res.graph.total_nodes(), 1);
  } else {
    // The trained relay maps both graphs into one embedding space; nearest
    // neighbours across that space define the representatives.
    Matrix x = make_node_features(n + m, cfg.dim, seed);
    Matrix a = full_adjacency(train);
    RelayDims dims{cfg.dim, cfg.hidden, cfg.relay_layers};
    RelayModel rm =
        train_relay(parse_backbone(cfg.backbone), dims, a, x, cfg.relay_steps,
                    cfg.relay_lr, mix_seed(seed, 900), &h_orig);
    Matrix a_cond = hard_adjacency(co.soft, cfg.tau);
    Matrix z(co.res.graph.total_nodes(), cfg.dim);
    z << co.res.graph.emb_users->value, co.res.graph.emb_items->value;
    h_cond = relay_forward(rm, ad::constant(a_cond), ad::constant(z))->value;
  }
  Assignment as = assign_representatives(train, co.res.graph, h_orig, h_cond);

  std::vector<std::vector<Index>> ranked(static_cast<std::size_t>(n));
  for (Index u = 0; u < n; ++u)
    ranked[static_cast<std::size_t>(u)] =
        recommend_for_original(u, model, as, h_orig, n, m, cfg.k,
                               train.user_adj[static_cast<std::size_t>(u)])
            .items;
  SeedQuality q;
  q.metrics = evaluate(ranked, data.splitd.test, cfg.k);
  std::vector<Index> reps = as.user_map;
  std::sort(reps.begin(), reps.end());
  q.assigned_users =
      static_cast<Index>(std::unique(reps.begin(), reps.end()) - reps.begin());
  return q;
}

MetricsAtK eval_self_mode(const ExperimentConfig& cfg, const CondenseOutcome& co,
                          const RecModel& model) {
  // Train-fit diagnostic: can the recommender rank the condensed graph's
  // own edges highly? No exclusions, relevant = training edges.
  BipartiteGraph g = BipartiteGraph::from_edges(
      co.res.graph.n_users, co.res.graph.n_items, co.cross);
  std::vector<std::vector<Index>> ranked(
      static_cast<std::size_t>(g.num_users));
  for (Index u = 0; u < g.num_users; ++u)
    ranked[static_cast<std::size_t>(u)] = top_k(model, u, cfg.k, {}).items;
  return evaluate(ranked, g.user_adj, cfg.k);
}

MetricsAtK run_baseline_seed(const ExperimentConfig& cfg, const DataBundle& data,
                             const std::string& kind, std::uint64_t seed) {
  const BipartiteGraph& train = data.splitd.train;
  BprConfig bc;
  bc.dim = cfg.dim;
  bc.lr = cfg.lr_rec;
  bc.epochs = cfg.epochs_rec;
  bc.reg = cfg.reg;
  bc.neg_exponent = cfg.neg_exponent;
  bc.seed = mix_seed(seed, 800);

  std::vector<std::vector<Index>> ranked(
      static_cast<std::size_t>(train.num_users));
  if (kind == "full") {
    bc.trained_on = TrainedOn::Original;
    RecModel model = bpr_train(train, bc);
    for (Index u = 0; u < train.num_users; ++u)
      ranked[static_cast<std::size_t>(u)] =
          top_k(model, u, cfg.k, train.user_adj[static_cast<std::size_t>(u)])
              .items;
    return evaluate(ranked, data.splitd.test, cfg.k);
  }

  SampledGraph sg = kind == "ransam"
                        ? sample_subgraph_random(train, cfg.alpha, seed)
                        : sample_subgraph_degree(train, cfg.alpha);
  require(sg.graph.num_edges > 0, Status::EmptyGraph,
          "sampled baseline kept no edges");
  bc.trained_on = TrainedOn::Sampled;
  RecModel model = bpr_train(sg.graph, bc);

  // Evaluation stays in the original id space: users the sampler dropped
  // get empty lists, items it dropped can never be recommended.
  std::vector<Index> user_rev(static_cast<std::size_t>(train.num_users), -1);
  for (std::size_t c = 0; c < sg.user_map.size(); ++c)
    user_rev[static_cast<std::size_t>(sg.user_map[c])] = static_cast<Index>(c);
  for (Index u = 0; u < train.num_users; ++u) {
    Index cu = user_rev[static_cast<std::size_t>(u)];
    if (cu < 0) continue;
    TopK tk = top_k(model, cu, cfg.k,
                    sg.graph.user_adj[static_cast<std::size_t>(cu)]);
    auto& dst = ranked[static_cast<std::size_t>(u)];
    dst.reserve(tk.items.size());
    for (Index ci : tk.items)
      dst.push_back(sg.item_map[static_cast<std::size_t>(ci)]);
  }
  return evaluate(ranked, data.splitd.test, cfg.k);
}

Json metrics_entry(const MetricsAtK& m) {
  Json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["ndcg"] = m.ndcg;
  j["users_evaluated"] = m.users_evaluated;
  return j;
}

Json report_json(const MetricsReport& rep,
                 const std::vector<std::uint64_t>& seeds) {
  Json j;
  j["k"] = rep.k;
  Json per = Json::array();
  for (std::size_t i = 0; i < rep.per_seed.size(); ++i) {
    Json row = metrics_entry(rep.per_seed[i]);
    Json full;
    full["seed"] = seeds[i];
    for (auto& [key, val] : row.items()) full[key] = val;
    per.push_back(full);
  }
  j["per_seed"] = per;
  j["mean"] = {{"precision", rep.precision_mean},
               {"recall", rep.recall_mean},
               {"ndcg", rep.ndcg_mean}};
  j["std"] = {{"precision", rep.precision_std},
              {"recall", rep.recall_std},
              {"ndcg", rep.ndcg_std}};
  j["single_run"] = rep.single_run;
  return j;
}

std::string metrics_csv_header(Index k) {
  std::string ks = std::to_string(k);
  return "method,P@" + ks + ",P@" + ks + "_std,N@" + ks + ",N@" + ks +
         "_std,R@" + ks + ",R@" + ks + "_std\n";
}

std::string metrics_csv_row(const std::string& method,
                            const MetricsReport& rep) {
  return method + "," + fmt(rep.precision_mean) + "," +
         fmt(rep.precision_std) + "," + fmt(rep.ndcg_mean) + "," +
         fmt(rep.ndcg_std) + "," + fmt(rep.recall_mean) + "," +
         fmt(rep.recall_std) + "\n";
}

void write_manifest(const ExperimentConfig& cfg, const std::string& sub) {
  Json j;
  j["version"] = kVersion;
  j["subcommand"] = sub;
  Json c = Json::object();
  for (const auto& [k, v] : config_pairs(cfg)) c[k] = v;
  j["config"] = c;
  write_text(cfg.out + "/manifest.json", j.dump(2) + "\n");
}

Json data_json(const DataBundle& data) {
  GraphStats s = stats(data.splitd.train);
  Index with_test = 0;
  for (const auto& t : data.splitd.test)
    if (!t.empty()) ++with_test;
  Json j;
  j["users"] = s.users;
  j["items"] = s.items;
  j["train_edges"] = s.edges;
  j["train_density_pct"] = s.density_pct;
  j["users_with_test"] = with_test;
  j["single_interaction_users"] = data.splitd.single_interaction_users;
  return j;
}

Json condense_seed_json(const CondenseOutcome& co, std::uint64_t seed) {
  const MatchReport& r = co.res.report;
  Json j;
  j["seed"] = seed;
  j["copy_of_original"] = co.res.graph.copy_of_original;
  j["n_users"] = co.res.graph.n_users;
  j["n_items"] = co.res.graph.n_items;
  j["cross_edges"] = co.cross.size();
  j["intra_edges"] = co.intra_edges;
  j["bipartite"] = co.bipartite;
  j["intra_mass"] = co.intra_mass;
  j["epochs_run"] = r.l_match.size();
  j["l_match_first"] = r.l_match.empty() ? 0.0 : r.l_match.front();
  j["l_match_final"] = r.l_match.empty() ? 0.0 : r.l_match.back();
  j["l_bip_final"] = r.l_bip.empty() ? 0.0 : r.l_bip.back();
  j["diverged"] = r.diverged;
  j["skipped_samples"] = r.skipped_samples;
  return j;
}

std::string seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.out + "/seed_" + std::to_string(seed);
}

RunResult run_condense_cmd(const ExperimentConfig& cfg) {
  DataBundle data = prepare_data(cfg);
  std::size_t ns = cfg.seeds.size();
  std::vector<CondenseOutcome> outs(ns);
  parallel_for(ns, [&](std::size_t i) {
    outs[i] = run_condense_seed(cfg, data.splitd.train, cfg.seeds[i], cfg.bsl_on);
    export_seed_artifacts(cfg, outs[i], cfg.seeds[i], seed_dir(cfg, cfg.seeds[i]));
  });
  fs::copy_file(seed_dir(cfg, cfg.seeds[0]) + "/match_report.csv",
                cfg.out + "/match_report.csv",
                fs::copy_options::overwrite_existing);

  Json j;
  j["subcommand"] = "condense";
  j["data"] = data_json(data);
  Json per = Json::array();
  int bipartite_runs = 0;
  for (std::size_t i = 0; i < ns; ++i) {
    per.push_back(condense_seed_json(outs[i], cfg.seeds[i]));
    if (outs[i].bipartite) ++bipartite_runs;
  }
  j["per_seed"] = per;
  j["bipartite_runs"] = bipartite_runs;
  write_text(cfg.out + "/metrics.json", j.dump(2) + "\n");

  RunResult r;
  r.summary = "condense: " + std::to_string(bipartite_runs) + "/" +
              std::to_string(ns) + " runs bipartite; exports under " + cfg.out;
  return r;
}

RunResult run_pipeline_cmd(const ExperimentConfig& cfg) {
  DataBundle data = prepare_data(cfg);
  std::size_t ns = cfg.seeds.size();
  std::vector<CondenseOutcome> outs(ns);
  std::vector<MetricsAtK> per_seed(ns);
  std::vector<Index> assigned(ns, 0);
  parallel_for(ns, [&](std::size_t i) {
    std::uint64_t seed = cfg.seeds[i];
    outs[i] = run_condense_seed(cfg, data.splitd.train, seed, cfg.bsl_on);
    export_seed_artifacts(cfg, outs[i], seed, seed_dir(cfg, seed));
    RecModel model = stage_two(cfg, outs[i], seed);
    if (cfg.eval_mode == "self") {
      per_seed[i] = eval_self_mode(cfg, outs[i], model);
    } else {
      SeedQuality q = eval_assign_mode(cfg, data, outs[i], model, seed);
      per_seed[i] = q.metrics;
      assigned[i] = q.assigned_users;
    }
  });
  fs::copy_file(seed_dir(cfg, cfg.seeds[0]) + "/match_report.csv",
                cfg.out + "/match_report.csv",
                fs::copy_options::overwrite_existing);

  MetricsReport rep = aggregate(per_seed, cfg.k);
  Json j;
  j["subcommand"] = "pipeline";
  j["method"] = "demorec";
  j["eval_mode"] = cfg.eval_mode;
  j["data"] = data_json(data);
  Json cond = Json::array();
  for (std::size_t i = 0; i < ns; ++i) {
    Json row = condense_seed_json(outs[i], cfg.seeds[i]);
    if (cfg.eval_mode == "assign") row["representatives_used"] = assigned[i];
    cond.push_back(row);
  }
  j["condensation"] = cond;
  Json m = report_json(rep, cfg.seeds);
  for (auto& [key, val] : m.items()) j[key] = val;
  write_text(cfg.out + "/metrics.json", j.dump(2) + "\n");
  write_text(cfg.out + "/metrics.csv",
             metrics_csv_header(cfg.k) + metrics_csv_row("demorec", rep));

  RunResult r;
  r.summary = "pipeline: P@" + std::to_string(cfg.k) + "=" +
              fmt(rep.precision_mean) + " R@" + std::to_string(cfg.k) + "=" +
              fmt(rep.recall_mean) + " N@" + std::to_string(cfg.k) + "=" +
              fmt(rep.ndcg_mean) + " over " + std::to_string(ns) + " seed(s)";
  return r;
}

RunResult run_baseline_cmd(const ExperimentConfig& cfg) {
  DataBundle data = prepare_data(cfg);
  std::size_t ns = cfg.seeds.size();
  std::vector<MetricsAtK> per_seed(ns);
  parallel_for(ns, [&](std::size_t i) {
    per_seed[i] = run_baseline_seed(cfg, data, cfg.baseline, cfg.seeds[i]);
  });
  MetricsReport rep = aggregate(per_seed, cfg.k);
  Json j;
  j["subcommand"] = "baseline";
  j["method"] = cfg.baseline;
  j["data"] = data_json(data);
  Json m = report_json(rep, cfg.seeds);
  for (auto& [key, val] : m.items()) j[key] = val;
  write_text(cfg.out + "/metrics.json", j.dump(2) + "\n");
  write_text(cfg.out + "/metrics.csv",
             metrics_csv_header(cfg.k) + metrics_csv_row(cfg.baseline, rep));
  RunResult r;
  r.summary = "baseline " + cfg.baseline + ": P@" + std::to_string(cfg.k) +
              "=" + fmt(rep.precision_mean) + " R@" + std::to_string(cfg.k) +
              "=" + fmt(rep.recall_mean) + " N@" + std::to_string(cfg.k) + "=" +
              fmt(rep.ndcg_mean);
  return r;
}

RunResult run_recommend_cmd(const ExperimentConfig& cfg) {
  if (cfg.format == "condensed") {
    LoadedCondensed lc = load_condensed(cfg.data);
    BipartiteGraph g = BipartiteGraph::from_edges(
        lc.graph.n_users, lc.graph.n_items, lc.cross_edges);
    require(g.num_edges > 0, Status::EmptyGraph,
            "condensed graph has no cross edges");
    BprConfig bc;
    bc.dim = cfg.dim;
    bc.lr = cfg.lr_rec;
    bc.epochs = cfg.epochs_rec;
    bc.reg = cfg.reg;
    bc.neg_exponent = cfg.neg_exponent;
    bc.seed = mix_seed(cfg.seeds[0], 800);
    bc.trained_on = TrainedOn::Condensed;
    RecModel model = bpr_train(g, bc);
    std::string lines;
    for (Index u = 0; u < g.num_users; ++u) {
      TopK tk = top_k(model, u, cfg.k, {});
      Json row;
      row["user"] = u;
      row["items"] = tk.items;
      row["scores"] = tk.scores;
      lines += row.dump() + "\n";
    }
    write_text(cfg.out + "/recommendations.jsonl", lines);
    RunResult r;
    r.summary = "recommend: wrote top-" + std::to_string(cfg.k) + " lists for " +
                std::to_string(g.num_users) + " condensed users";
    return r;
  }

  DataBundle data = prepare_data(cfg);
  const BipartiteGraph& train = data.splitd.train;
  std::size_t ns = cfg.seeds.size();
  std::vector<MetricsAtK> per_seed(ns);
  std::vector<std::vector<std::vector<Index>>> ranked_by_seed(ns);
  parallel_for(ns, [&](std::size_t i) {
    BprConfig bc;
    bc.dim = cfg.dim;
    bc.lr = cfg.lr_rec;
    bc.epochs = cfg.epochs_rec;
    bc.reg = cfg.reg;
    bc.neg_exponent = cfg.neg_exponent;
    bc.seed = mix_seed(cfg.seeds[i], 800);
    bc.trained_on = TrainedOn::Original;
    RecModel model = bpr_train(train, bc);
    std::vector<std::vector<Index>> ranked(
        static_cast<std::size_t>(train.num_users));
    for (Index u = 0; u < train.num_users; ++u)
      ranked[static_cast<std::size_t>(u)] =
          top_k(model, u, cfg.k, train.user_adj[static_cast<std::size_t>(u)])
              .items;
    per_seed[i] = evaluate(ranked, data.splitd.test, cfg.k);
    ranked_by_seed[i] = std::move(ranked);
  });
  MetricsReport rep = aggregate(per_seed, cfg.k);
  Json j;
  j["subcommand"] = "recommend";
  j["method"] = "bpr";
  j["data"] = data_json(data);
  Json m = report_json(rep, cfg.seeds);
  for (auto& [key, val] : m.items()) j[key] = val;
  write_text(cfg.out + "/metrics.json", j.dump(2) + "\n");
  write_text(cfg.out + "/metrics.csv",
             metrics_csv_header(cfg.k) + metrics_csv_row("bpr", rep));

  std::string lines;
  for (Index u = 0; u < train.num_users; ++u) {
    Json row;
    row["user"] = data.log.user_names[static_cast<std::size_t>(u)];
    Json items = Json::array();
    for (Index i : ranked_by_seed[0][static_cast<std::size_t>(u)])
      items.push_back(data.log.item_names[static_cast<std::size_t>(i)]);
    row["items"] = items;
    lines += row.dump() + "\n";
  }
  write_text(cfg.out + "/recommendations.jsonl", lines);

  RunResult r;
  r.summary = "recommend: P@" + std::to_string(cfg.k) + "=" +
              fmt(rep.precision_mean) + " R@" + std::to_string(cfg.k) + "=" +
              fmt(rep.recall_mean) + " over " + std::to_string(ns) + " seed(s)";
  return r;
}

RunResult run_ablate_cmd(const ExperimentConfig& cfg) {
  require(cfg.alpha < 1.0, Status::InvalidArgument,
          "ablate-bsl requires alpha < 1 (identity mode has no soft adjacency)");
  DataBundle data = prepare_data(cfg);
  std::size_t ns = cfg.seeds.size();
  std::vector<CondenseOutcome> on(ns), off(ns);
  parallel_for(ns, [&](std::size_t i) {
    on[i] = run_condense_seed(cfg, data.splitd.train, cfg.seeds[i], true);
    off[i] = run_condense_seed(cfg, data.splitd.train, cfg.seeds[i], false);
  });

  std::string csv =
      "seed,intra_mass_bsl,intra_mass_nobsl,intra_edges_bsl,intra_edges_nobsl,"
      "bipartite_bsl,bipartite_nobsl,l_match_final_bsl,l_match_final_nobsl\n";
  bool all_strict = true;
  for (std::size_t i = 0; i < ns; ++i) {
    bool strict = off[i].intra_mass > on[i].intra_mass;
    all_strict = all_strict && strict;
    auto lm = [](const CondenseOutcome& c) {
      return c.res.report.l_match.empty() ? 0.0 : c.res.report.l_match.back();
    };
    csv += std::to_string(cfg.seeds[i]) + "," + fmt(on[i].intra_mass) + "," +
           fmt(off[i].intra_mass) + "," + std::to_string(on[i].intra_edges) +
           "," + std::to_string(off[i].intra_edges) + "," +
           (on[i].bipartite ? "1" : "0") + "," + (off[i].bipartite ? "1" : "0") +
           "," + fmt(lm(on[i])) + "," + fmt(lm(off[i])) + "\n";
  }
  write_text(cfg.out + "/ablation.csv", csv);

  Json j;
  j["subcommand"] = "ablate-bsl";
  j["data"] = data_json(data);
  Json per = Json::array();
  for (std::size_t i = 0; i < ns; ++i) {
    Json row;
    row["seed"] = cfg.seeds[i];
    row["bsl"] = condense_seed_json(on[i], cfg.seeds[i]);
    row["no_bsl"] = condense_seed_json(off[i], cfg.seeds[i]);
    row["intra_mass_gap"] = off[i].intra_mass - on[i].intra_mass;
    per.push_back(row);
  }
  j["per_seed"] = per;
  j["no_bsl_strictly_worse_everywhere"] = all_strict;
  write_text(cfg.out + "/metrics.json", j.dump(2) + "\n");

  RunResult r;
  r.summary = std::string("ablate-bsl: no-BSL intra mass strictly higher on ") +
              (all_strict ? "every seed" : "SOME seeds only");
  return r;
}

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  const CondenseOutcome* co = nullptr;  // optional condensation stats
  bool has_quality = false;
  MetricsAtK metrics;
  bool has_full = false;
  double recall_full = 0.0;
};

std::string sweep_csv(const std::string& param,
                      const std::vector<SweepRow>& rows) {
  std::string csv =
      "param,value,seed,bipartite,intra_edges,intra_mass,l_match_final,"
      "precision,recall,ndcg,recall_full,relative_recall\n";
  for (const auto& r : rows) {
    csv += param + "," + r.value + "," + std::to_string(r.seed) + ",";
    if (r.co) {
      double lm = r.co->res.report.l_match.empty()
                      ? 0.0
                      : r.co->res.report.l_match.back();
      csv += std::string(r.co->bipartite ? "1" : "0") + "," +
             std::to_string(r.co->intra_edges) + "," + fmt(r.co->intra_mass) +
             "," + fmt(lm) + ",";
    } else {
      csv += ",,,,";
    }
    if (r.has_quality)
      csv += fmt(r.metrics.precision) + "," + fmt(r.metrics.recall) + "," +
             fmt(r.metrics.ndcg) + ",";
    else
      csv += ",,,";
    if (r.has_full) {
      double rel = r.recall_full > 0.0 ? r.metrics.recall / r.recall_full : 0.0;
      csv += fmt(r.recall_full) + "," + fmt(rel);
    } else {
      csv += ",";
    }
    csv += "\n";
  }
  return csv;
}

RunResult run_sweep_cmd(const ExperimentConfig& cfg) {
  DataBundle data = prepare_data(cfg);
  std::vector<double> grid;
  std::vector<Index> dim_grid;
  if (cfg.sweep_param == "lambda") grid = {0.01, 0.1, 0.3, 0.5, 1.0};
  else if (cfg.sweep_param == "beta") grid = {0.1, 0.3, 0.6, 1.0};
  else if (cfg.sweep_param == "alpha") grid = {0.2, 0.5, 0.8, 1.0};
  else dim_grid = {64, 128, 256, 512};

  std::vector<SweepRow> rows;
  std::vector<CondenseOutcome> store;
  std::size_t ns = cfg.seeds.size();
  store.reserve((grid.size() + dim_grid.size()) * ns);

  if (cfg.sweep_param == "lambda" || cfg.sweep_param == "beta") {
    for (double v : grid) {
      ExperimentConfig c = cfg;
      if (cfg.sweep_param == "lambda") c.lambda = v;
      else c.beta = v;
      std::vector<CondenseOutcome> outs(ns);
      parallel_for(ns, [&](std::size_t i) {
        outs[i] = run_condense_seed(c, data.splitd.train, c.seeds[i], c.bsl_on);
      });
      for (std::size_t i = 0; i < ns; ++i) {
        store.push_back(std::move(outs[i]));
        SweepRow r;
        r.value = fmt(v);
        r.seed = cfg.seeds[i];
        r.co = &store.back();
        rows.push_back(r);
      }
    }
  } else if (cfg.sweep_param == "alpha") {
    std::vector<double> full_recall(ns, 0.0);
    parallel_for(ns, [&](std::size_t i) {
      full_recall[i] = run_baseline_seed(cfg, data, "full", cfg.seeds[i]).recall;
    });
    for (double v : grid) {
      ExperimentConfig c = cfg;
      c.alpha = v;
      std::vector<CondenseOutcome> outs(ns);
      std::vector<MetricsAtK> quality(ns);
      parallel_for(ns, [&](std::size_t i) {
        outs[i] = run_condense_seed(c, data.splitd.train, c.seeds[i], c.bsl_on);
        RecModel model = stage_two(c, outs[i], c.seeds[i]);
        quality[i] = eval_assign_mode(c, data, outs[i], model, c.seeds[i]).metrics;
      });
      for (std::size_t i = 0; i < ns; ++i) {
        store.push_back(std::move(outs[i]));
        SweepRow r;
        r.value = fmt(v);
        r.seed = cfg.seeds[i];
        r.co = &store.back();
        r.has_quality = true;
        r.metrics = quality[i];
        r.has_full = true;
        r.recall_full = full_recall[i];
        rows.push_back(r);
      }
    }
  } else {  // dim
    for (Index v : dim_grid) {
      ExperimentConfig c = cfg;
      c.dim = v;
      c.hidden = v;
      std::vector<CondenseOutcome> outs(ns);
      std::vector<MetricsAtK> quality(ns);
      parallel_for(ns, [&](std::size_t i) {
        outs[i] = run_condense_seed(c, data.splitd.train, c.seeds[i], c.bsl_on);
        RecModel model = stage_two(c, outs[i], c.seeds[i]);
        quality[i] = eval_assign_mode(c, data, outs[i], model, c.seeds[i]).metrics;
      });
      for (std::size_t i = 0; i < ns; ++i) {
        store.push_back(std::move(outs[i]));
        SweepRow r;
        r.value = std::to_string(v);
        r.seed = cfg.seeds[i];
        r.co = &store.back();
        r.has_quality = true;
        r.metrics = quality[i];
        rows.push_back(r);
      }
    }
  }

  write_text(cfg.out + "/sweep.csv", sweep_csv(cfg.sweep_param, rows));
  RunResult r;
  r.summary = "sweep " + cfg.sweep_param + ": " + std::to_string(rows.size()) +
              " rows written to " + cfg.out + "/sweep.csv";
  return r;
}

RunResult run_bench_cmd(const ExperimentConfig& cfg) {
  InteractionLog log = make_log(cfg);
  if (cfg.k_core > 0) log = k_core_filter(log, cfg.k_core);
  require(!log.interactions.empty(), Status::EmptyGraph,
          "no interactions left after k-core filtering");
  BipartiteGraph graph = BipartiteGraph::from_log(log);

  CondenseOutcome co = run_condense_seed(cfg, graph, cfg.seeds[0], cfg.bsl_on);
  BipartiteGraph cg_graph = BipartiteGraph::from_edges(
      co.res.graph.n_users, co.res.graph.n_items, co.cross);
  require(cg_graph.num_edges > 0, Status::EmptyGraph,
          "condensed graph has no cross edges; nothing to benchmark");

  BprConfig bc;
  bc.dim = cfg.dim;
  bc.lr = cfg.lr_rec;
  bc.epochs = cfg.epochs_rec;
  bc.reg = cfg.reg;
  bc.neg_exponent = cfg.neg_exponent;
  bc.seed = mix_seed(cfg.seeds[0], 800);

  bc.trained_on = TrainedOn::Original;
  BprTrainer t_orig(graph, bc);
  double sec_orig = time_epochs_median([&] { t_orig.run_epoch(); });
  bc.trained_on = TrainedOn::Condensed;
  BprTrainer t_cond(cg_graph, bc);
  double sec_cond = time_epochs_median([&] { t_cond.run_epoch(); });

  EfficiencyReport orig;
  orig.epoch_time_seconds = sec_orig;
  orig.edges_original = graph.num_edges;
  orig.peak_bytes_estimate = training_bytes_estimate(
      graph.num_users, graph.num_items, cfg.dim, graph.num_edges);
  EfficiencyReport cond;
  cond.epoch_time_seconds = sec_cond;
  cond.edges_condensed = cg_graph.num_edges;
  cond.peak_bytes_estimate =
      training_bytes_estimate(cg_graph.num_users, cg_graph.num_items, cfg.dim,
                              cg_graph.num_edges);

  double edge_ratio = static_cast<double>(cg_graph.num_edges) /
                      static_cast<double>(graph.num_edges);
  double time_ratio = sec_cond / sec_orig;
  bool within = time_ratio >= edge_ratio / 3.0 && time_ratio <= edge_ratio * 3.0;

  Json j;
  j["original"] = {{"users", graph.num_users},
                   {"items", graph.num_items},
                   {"edges", graph.num_edges},
                   {"epoch_seconds", sec_orig},
                   {"bytes_estimate", orig.peak_bytes_estimate}};
  j["condensed"] = {{"users", cg_graph.num_users},
                    {"items", cg_graph.num_items},
                    {"edges", cg_graph.num_edges},
                    {"epoch_seconds", sec_cond},
                    {"bytes_estimate", cond.peak_bytes_estimate}};
  j["edge_ratio"] = edge_ratio;
  j["time_ratio"] = time_ratio;
  j["time_ratio_within_3x_of_edge_ratio"] = within;
  j["condensed_faster"] = sec_cond < sec_orig;
  write_text(cfg.out + "/efficiency.json", j.dump(2) + "\n");

  RunResult r;
  r.summary = "bench: E'=" + std::to_string(cg_graph.num_edges) + " E=" +
              std::to_string(graph.num_edges) + " time ratio " +
              fmt(time_ratio) + " vs edge ratio " + fmt(edge_ratio);
  return r;
}

}  // namespace

RunResult run_subcommand(const std::string& subcommand,
                         const ExperimentConfig& config) {
  RunResult result;
  try {
    config.validate();
    fs::create_directories(config.out);
    write_manifest(config, subcommand);
    if (subcommand == "condense") result = run_condense_cmd(config);
    else if (subcommand == "recommend") result = run_recommend_cmd(config);
    else if (subcommand == "pipeline") result = run_pipeline_cmd(config);
    else if (subcommand == "baseline") result = run_baseline_cmd(config);
    else if (subcommand == "ablate-bsl") result = run_ablate_cmd(config);
    else if (subcommand == "sweep") result = run_sweep_cmd(config);
    else if (subcommand == "bench") result = run_bench_cmd(config);
    else
      throw Error(Status::InvalidArgument,
                  "unknown subcommand '" + subcommand + "'");
  } catch (const Error& e) {
    result.status = static_cast<int>(e.code());
    result.summary = std::string("error: ") + e.what();
  } catch (const std::exception& e) {
    result.status = static_cast<int>(Status::InternalError);
    result.summary = std::string("error: ") + e.what();
  }
  return result;
}

}  // namespace demorec
