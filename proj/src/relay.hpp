#pragma once

#include <string>
#include <vector>

#include "common.hpp"
#include "graph.hpp"
#include "tape.hpp"

namespace demorec {

enum class Backbone { GCN, SAGE, GAT };

Backbone parse_backbone(const std::string& name);
std::string backbone_name(Backbone b);

struct RelayDims {
  Index in_dim = 64;
  Index hidden = 64;
  Index layers = 2;
};

// Proxy GNN. Parameters live in a ParamSet keyed "W<layer>" (+ "a<layer>"
// attention vectors for GAT); all layer widths equal `hidden` except the
// input width of layer 0.
struct RelayModel {
  Backbone backbone = Backbone::GCN;
  RelayDims dims;
  ad::ParamSet params;
  std::uint64_t init_seed = 0;
};

// One draw from the Glorot-uniform initialization family.
RelayModel sample_theta(Backbone backbone, RelayDims dims, std::uint64_t seed);

// Forward pass over a square (soft or binary) adjacency. theta_override, when
// given, substitutes the model's parameters node-for-node (used by unrolled
// inner updates where parameters are graph nodes rather than leaves).
// Attention matrices (GAT) are appended to `attentions` when requested.
ad::NodePtr relay_forward(const RelayModel& model, const ad::NodePtr& adjacency,
                          const ad::NodePtr& features,
                          const std::vector<ad::NodePtr>* theta_override = nullptr,
                          std::vector<ad::NodePtr>* attentions = nullptr);

// Sampled link-prediction loss: -(1/|B|) sum over edges of [log s(h_u.h_i) +
// sum_k log(1 - s(h_u.h_n))]. Node ids are global (users first, then items).
struct LinkBatch {
  std::vector<Index> src;                  // user node ids
  std::vector<Index> dst;                  // item node ids
  std::vector<std::vector<Index>> negatives;  // [k][edge] item node ids
};

LinkBatch build_link_batch(const BipartiteGraph& graph,
                           const NegativeSampler& sampler, int k_neg, Rng& rng);

ad::NodePtr relay_loss(const RelayModel& model, const ad::NodePtr& adjacency,
                       const ad::NodePtr& features, const LinkBatch& batch,
                       const std::vector<ad::NodePtr>* theta_override = nullptr);

// Dense batch-free diagnostic: every off-diagonal pair contributes a BCE
// term against `target`. Mean-normalized over all pairs, so sparse graphs
// drown the edge signal under the non-edge mass; kept as an oracle-friendly
// reference objective, not used for training.
ad::NodePtr dense_link_loss(const ad::NodePtr& embeddings,
                            const ad::NodePtr& target);

// Exact, sampling-free form of the link loss over a bipartite node layout
// (users first, then items): positives are the adjacency's cross edges,
// each balanced against k_neg negatives taken in expectation over the
// degree-based noise distribution. Per ordered cross pair (u, i):
//   (1/2E)*A_ui*softplus(-p_ui) + k_neg*(d_u*d_i/2E^2)*softplus(p_ui)
// summed over both cross blocks, where p = H H^T restricted to cross pairs.
// Positive and negative masses are balanced, so the parameter gradient
// carries the edge structure instead of the global density.
ad::NodePtr balanced_link_loss(const ad::NodePtr& embeddings,
                               const Matrix& adjacency, Index n_users,
                               int k_neg = 1);

// Dense square adjacency over users+items (users first), binary, zero diag.
Matrix full_adjacency(const BipartiteGraph& graph);

// Fixed random Gaussian features (std 1/sqrt(d)), drawn once per experiment
// seed; datasets are id-only so these stand in for node attributes.
Matrix make_node_features(Index n_nodes, Index dim, std::uint64_t seed);

// Pre-training of a relay on a fixed bipartite graph with the balanced link
// loss and an adaptive optimizer, used to produce the original-node
// embeddings consumed by representative assignment. Returns the trained
// model; `out_embeddings` receives the final forward pass.
RelayModel train_relay(Backbone backbone, RelayDims dims, const Matrix& adjacency,
                       const Matrix& features, Index n_users, int steps,
                       double lr, std::uint64_t seed, Matrix* out_embeddings);

}  // namespace demorec
