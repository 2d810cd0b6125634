#pragma once

#include <optional>
#include <string>
#include <vector>

#include "common.hpp"
#include "condensed.hpp"
#include "graph.hpp"
#include "relay.hpp"
#include "tape.hpp"

namespace demorec {

enum class MatchStrategy { Gradient, Trajectory, Distribution };
enum class MatchDistance { Cosine, L2 };

MatchStrategy parse_strategy(const std::string& name);
std::string strategy_name(MatchStrategy s);

struct CondensationConfig {
  double alpha = 0.8;
  double lambda = 0.3;
  double beta = 0.6;
  double tau = 0.5;
  MatchStrategy strategy = MatchStrategy::Gradient;
  MatchDistance distance = MatchDistance::Cosine;
  Backbone backbone = Backbone::GCN;
  Index dim = 64;       // embedding/feature dim (relay input dim)
  Index hidden = 64;    // relay hidden dim
  Index relay_layers = 2;
  int t_inner = 2;
  int theta_samples = 2;
  int outer_epochs = 100;
  double lr_outer = 0.001;  // adaptive-moment outer optimizer
  double lr_inner = 0.1;    // plain GD inner relay steps
  std::uint64_t seed = 1024;
  bool bsl_on = true;
  PairMode pair_mode = PairMode::AllPairs;
  bool straight_through = false;
  bool copy_init = false;  // alpha = 1 identity mode, outer_epochs must be 0
  // trajectory matching
  int expert_steps = 40;
  int expert_every = 5;
  int expert_delta = 2;
  int t_student = 4;
  // distribution matching
  bool second_moment = false;

  void validate() const;
};

struct MatchReport {
  std::vector<double> l_match;
  std::vector<double> l_bip;
  std::vector<double> l_cond;
  std::vector<double> intra_mass;
  bool diverged = false;
  int skipped_samples = 0;  // degenerate trajectory segments
};

struct CondenseResult {
  CondensedGraph graph;
  MatchReport report;
};

// Structure-aware gradient distance: one term per parameter tensor. Cosine
// form contributes (1 - cos) per tensor; a zero-norm side counts as maximal
// mismatch (1) unless both sides vanish, which counts 0.
double cosine_distance(const std::vector<Matrix>& a,
                       const std::vector<Matrix>& b);

// Differentiable counterpart: g_cond are graph nodes, g_orig are fixed
// targets.
ad::NodePtr match_distance(const std::vector<ad::NodePtr>& g_cond,
                           const std::vector<Matrix>& g_orig,
                           MatchDistance distance);

// One gradient-matching term at shared parameters theta: distance between
// the relay-loss gradient on (s_cond, z_cond), kept differentiable w.r.t.
// the condensed inputs, and the detached relay-loss gradient on the
// original graph. out_grad_cond receives the condensed-side gradient nodes
// so callers can reuse them for unrolled inner updates.
ad::NodePtr gradient_match_loss(const RelayModel& model,
                                const std::vector<ad::NodePtr>& theta,
                                const ad::NodePtr& a_orig,
                                const ad::NodePtr& x_orig,
                                const ad::NodePtr& s_cond,
                                const ad::NodePtr& z_cond,
                                MatchDistance distance,
                                std::vector<ad::NodePtr>* out_grad_cond = nullptr);

// Group-wise first-moment (optionally second-moment) alignment of relay
// embeddings between the two graphs.
ad::NodePtr distribution_match_loss(const RelayModel& model,
                                    const ad::NodePtr& a_orig,
                                    const ad::NodePtr& x_orig,
                                    Index orig_users,
                                    const ad::NodePtr& s_cond,
                                    const ad::NodePtr& z_cond,
                                    Index cond_users, bool second_moment);

// Expert parameter snapshots from relay training on the original graph,
// recorded every `every` steps (snapshot 0 is the initialization).
std::vector<std::vector<Matrix>> expert_trajectory(const RelayModel& model,
                                                   const ad::NodePtr& a_orig,
                                                   const ad::NodePtr& x_orig,
                                                   int steps, int every,
                                                   double lr);

// Normalized endpoint error of a student unrolled from checkpoint
// `segment` on the condensed graph against expert checkpoint
// `segment + delta`. Throws on a degenerate (stationary) expert segment.
ad::NodePtr trajectory_match_loss(const RelayModel& model,
                                  const std::vector<std::vector<Matrix>>& experts,
                                  std::size_t segment, int delta,
                                  const ad::NodePtr& s_cond,
                                  const ad::NodePtr& z_cond, int t_student,
                                  double lr_student);

CondenseResult condense(const CondensationConfig& config,
                        const BipartiteGraph& graph);

// Monte-Carlo estimate of the gradient-matching loss of `cg` against
// `graph` at fixed probe seeds (values only; cheap diagnostic).
double match_probe(const CondensedGraph& cg, const BipartiteGraph& graph,
                   const CondensationConfig& config,
                   const std::vector<std::uint64_t>& probe_seeds);

void write_match_report_csv(const MatchReport& report, const std::string& path);

}  // namespace demorec
