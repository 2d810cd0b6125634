#pragma once

#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "graph.hpp"
#include "tape.hpp"

namespace demorec {

enum class InitScheme { Gaussian, Zeros };
enum class PairMode { AllPairs, CrossOnly };

// 0/1 masks over the (N'+M')^2 pair grid picking out the user-user and
// item-item blocks (diagonal included in its own block; the soft adjacency
// zeroes the diagonal anyway).
struct BipartiteMasks {
  Matrix m_user;
  Matrix m_item;
};

BipartiteMasks make_masks(Index n_users, Index n_items);

// Learnable condensed graph: embedding tables for both sides plus the
// pairwise transform that generates the adjacency. The node parameters are
// tape leaves so Stage One can differentiate through everything built on
// top of them; their values are mutated in place by the outer optimizer.
struct CondensedGraph {
  ad::NodePtr emb_users;  // N' x d
  ad::NodePtr emb_items;  // M' x d
  ad::NodePtr transform;  // d x d
  double tau = 0.5;
  Index n_users = 0;
  Index n_items = 0;
  Index dim = 0;
  // Set when the graph is a verbatim copy of an original graph (alpha = 1
  // identity mode). The generator cannot reproduce an arbitrary edge set
  // exactly, so the copy keeps the original edges for export/evaluation.
  bool copy_of_original = false;
  std::vector<std::pair<Index, Index>> original_edges;

  Index total_nodes() const { return n_users + n_items; }
  std::vector<ad::NodePtr> params() const {
    return {emb_users, emb_items, transform};
  }
};

CondensedGraph init_condensed(Index n_users, Index n_items, Index dim,
                              std::uint64_t seed, InitScheme scheme);

// alpha = 1 identity mode: embeddings come from the given per-node feature
// rows and the edge set is pinned to the original graph.
CondensedGraph init_copy(const BipartiteGraph& graph, const Matrix& user_feat,
                         const Matrix& item_feat, double tau);

// S_ij = sigmoid(z_i^T W z_j) over ordered pairs of Z = [emb_users;
// emb_items], diagonal fixed to 0. CrossOnly additionally zeroes the
// intra-group blocks.
ad::NodePtr soft_adjacency(const CondensedGraph& cg,
                           PairMode mode = PairMode::AllPairs);

// Straight-through view: forward value is the binarized adjacency, backward
// behaves like the soft one.
ad::NodePtr straight_through_adjacency(const ad::NodePtr& soft, double tau);

// Binary symmetric (OR) adjacency with zero diagonal; entry 1 iff S >= tau.
Matrix hard_adjacency(const Matrix& soft, double tau);

// Cross-group edges of the hard adjacency as (user, item) pairs in
// condensed-local indices.
std::vector<std::pair<Index, Index>> hard_cross_edges(const Matrix& soft,
                                                      double tau,
                                                      Index n_users,
                                                      Index n_items);
std::int64_t count_intra_edges(const Matrix& hard, Index n_users);

// Bipartite structure loss lambda * (||S.M_U||_F^2 + ||S.M_I||_F^2), its
// plain-value form, its analytic gradient in S, and the Laplacian variant
// used as a diagnostic.
ad::NodePtr bsl(const ad::NodePtr& soft, double lambda,
                const BipartiteMasks& masks);
double bsl_value(const Matrix& soft, double lambda, const BipartiteMasks& masks);
Matrix bsl_grad_analytic(const Matrix& soft, double lambda,
                         const BipartiteMasks& masks);
double bsl_laplacian(const CondensedGraph& cg, const Matrix& soft,
                     double lambda);

// Mean soft value over off-diagonal intra-group entries (trajectory probe).
double intra_soft_mass(const Matrix& soft, Index n_users);

struct CondensedMeta {
  double lambda = 0.3;
  double beta = 0.6;
  std::uint64_t seed = 0;
};

void export_condensed(const CondensedGraph& cg, const CondensedMeta& meta,
                      const std::string& dir);

struct LoadedCondensed {
  CondensedGraph graph;
  std::vector<std::pair<Index, Index>> cross_edges;  // (user, item)
  CondensedMeta meta;
};

LoadedCondensed load_condensed(const std::string& dir);

}  // namespace demorec
