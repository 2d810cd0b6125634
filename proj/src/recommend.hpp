#pragma once

#include <optional>
#include <vector>

#include "common.hpp"
#include "condensed.hpp"
#include "graph.hpp"

namespace demorec {

enum class TrainedOn { Original, Condensed, Sampled };

struct RecModel {
  Matrix user_emb;  // U x d
  Matrix item_emb;  // I x d
  TrainedOn trained_on = TrainedOn::Original;
  double lr = 0.05;
  int epochs = 0;
  std::vector<double> epoch_loss;  // mean per-triple loss per epoch
};

struct BprConfig {
  Index dim = 64;
  double lr = 0.05;
  int epochs = 100;
  double reg = 0.0;           // L2 weight; loss adds (reg/2)*||params||^2
  double neg_exponent = 0.75;
  std::uint64_t seed = 1024;
  TrainedOn trained_on = TrainedOn::Original;
};

// Pairwise-ranking trainer over sampled (user, positive, negative) triples.
// Kept as an explicit object so callers can drive individual epochs (the
// efficiency probe times them).
class BprTrainer {
public:
  BprTrainer(const BipartiteGraph& graph, const BprConfig& config,
             const Matrix* init_user = nullptr,
             const Matrix* init_item = nullptr);
  double run_epoch();  // one pass over all train edges; mean triple loss
  const RecModel& model() const { return model_; }
  RecModel take_model() { return std::move(model_); }

private:
  BipartiteGraph graph_;
  BprConfig config_;
  NegativeSampler sampler_;
  Rng rng_;
  std::vector<std::pair<Index, Index>> edges_;
  RecModel model_;
};

RecModel bpr_train(const BipartiteGraph& graph, const BprConfig& config);

// Per-triple loss/gradient (softplus form of -ln sigmoid), shared by the
// trainer and the gradient checks.
double bpr_triple_loss(const Eigen::RowVectorXd& eu, const Eigen::RowVectorXd& ei,
                       const Eigen::RowVectorXd& ej, double reg);
void bpr_triple_grad(const Eigen::RowVectorXd& eu, const Eigen::RowVectorXd& ei,
                     const Eigen::RowVectorXd& ej, double reg,
                     Eigen::RowVectorXd* gu, Eigen::RowVectorXd* gi,
                     Eigen::RowVectorXd* gj);

double score(const RecModel& model, Index u, Index i);

struct TopK {
  std::vector<Index> items;
  std::vector<double> scores;
  bool short_list = false;  // fewer than K candidates existed
};

// K highest-scoring items not in `exclude` (sorted ascending), ties broken
// by ascending item index.
TopK top_k(const RecModel& model, Index u, Index k,
           const std::vector<Index>& exclude);

struct Assignment {
  std::vector<Index> user_map;  // original -> condensed
  std::vector<Index> item_map;
  std::vector<double> user_sim;
  std::vector<double> item_sim;
  bool identity = false;
};

// Maps every original node to its most similar condensed node by cosine
// (Euclidean fallback for zero-norm rows). Both tables must come from the
// same relay forward pass (same parameters) so the spaces agree:
// relay_original is (N+M) x h over the original graph, relay_condensed is
// (N'+M') x h over the condensed one, users first in both. Identity when
// the condensed graph is a verbatim copy.
Assignment assign_representatives(const BipartiteGraph& original,
                                  const CondensedGraph& condensed,
                                  const Matrix& relay_original,
                                  const Matrix& relay_condensed);

// Ranks original items for an original user through the representative
// map: primary key is the condensed model score between representatives,
// secondary key is relay-embedding cosine between the original user and
// item (breaks ties among items sharing a representative).
TopK recommend_for_original(Index user, const RecModel& condensed_model,
                            const Assignment& assign,
                            const Matrix& relay_embeddings, Index orig_users,
                            Index orig_items, Index k,
                            const std::vector<Index>& exclude);

}  // namespace demorec
