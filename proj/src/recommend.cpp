#include "recommend.hpp"

#include <algorithm>
#include <cmath>

namespace demorec {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

BprTrainer::BprTrainer(const BipartiteGraph& graph, const BprConfig& config,
                       const Matrix* init_user, const Matrix* init_item)
    : graph_(graph),
      config_(config),
      sampler_(graph, config.neg_exponent),
      rng_(make_rng(config.seed, 21)),
      edges_(graph.edge_list()) {
  require(graph_.num_edges > 0, Status::EmptyGraph,
          "BprTrainer: graph has no edges");
  require(config_.dim >= 1 && config_.lr > 0.0 && config_.epochs >= 0,
          Status::InvalidArgument, "BprTrainer: bad config");
  if (init_user) {
    require(init_item != nullptr, Status::InvalidArgument,
            "BprTrainer: init embeddings must come as a pair");
    require(init_user->rows() == graph_.num_users &&
                init_item->rows() == graph_.num_items &&
                init_user->cols() == config_.dim &&
                init_item->cols() == config_.dim,
            Status::ShapeMismatch, "BprTrainer: init embedding shapes");
    model_.user_emb = *init_user;
    model_.item_emb = *init_item;
  } else {
    Rng ru = make_rng(config.seed, 19);
    Rng ri = make_rng(config.seed, 20);
    model_.user_emb = gaussian_matrix(graph_.num_users, config_.dim, 0.1, ru);
    model_.item_emb = gaussian_matrix(graph_.num_items, config_.dim, 0.1, ri);
  }
  model_.trained_on = config_.trained_on;
  model_.lr = config_.lr;
}

double BprTrainer::run_epoch() {
  std::shuffle(edges_.begin(), edges_.end(), rng_);
  double total = 0.0;
  std::int64_t counted = 0;
  for (const auto& [u, i] : edges_) {
    const auto& positives = graph_.user_adj[static_cast<std::size_t>(u)];
    if (static_cast<Index>(positives.size()) >= graph_.num_items) continue;
    Index j = sampler_.draw_excluding(rng_, positives);

    Eigen::RowVectorXd eu = model_.user_emb.row(u);
    Eigen::RowVectorXd ei = model_.item_emb.row(i);
    Eigen::RowVectorXd ej = model_.item_emb.row(j);
    double x = eu.dot(ei - ej);
    double s = stable_sigmoid(-x);
    total += softplus(-x);
    ++counted;

    model_.user_emb.row(u) +=
        config_.lr * (s * (ei - ej) - config_.reg * eu);
    model_.item_emb.row(i) += config_.lr * (s * eu - config_.reg * ei);
    model_.item_emb.row(j) += config_.lr * (-s * eu - config_.reg * ej);
  }
  double mean = counted ? total / static_cast<double>(counted) : 0.0;
  model_.epoch_loss.push_back(mean);
  ++model_.epochs;
  return mean;
}

RecModel bpr_train(const BipartiteGraph& graph, const BprConfig& config) {
  BprTrainer trainer(graph, config);
  for (int e = 0; e < config.epochs; ++e) trainer.run_epoch();
  return trainer.take_model();
}

double bpr_triple_loss(const Eigen::RowVectorXd& eu,
                       const Eigen::RowVectorXd& ei,
                       const Eigen::RowVectorXd& ej, double reg) {
  double x = eu.dot(ei - ej);
  return softplus(-x) + 0.5 * reg * (eu.squaredNorm() + ei.squaredNorm() +
                                     ej.squaredNorm());
}

void bpr_triple_grad(const Eigen::RowVectorXd& eu, const Eigen::RowVectorXd& ei,
                     const Eigen::RowVectorXd& ej, double reg,
                     Eigen::RowVectorXd* gu, Eigen::RowVectorXd* gi,
                     Eigen::RowVectorXd* gj) {
  double x = eu.dot(ei - ej);
  double s = stable_sigmoid(-x);  // d softplus(-x)/dx = -sigmoid(-x)
  *gu = -s * (ei - ej) + reg * eu;
  *gi = -s * eu + reg * ei;
  *gj = s * eu + reg * ej;
}

double score(const RecModel& model, Index u, Index i) {
  require(u >= 0 && u < model.user_emb.rows(), Status::InvalidArgument,
          "score: user index out of range");
  require(i >= 0 && i < model.item_emb.rows(), Status::InvalidArgument,
          "score: item index out of range");
  return model.user_emb.row(u).dot(model.item_emb.row(i));
}

namespace {

TopK rank_candidates(std::vector<std::pair<double, Index>>& cands,
                     const std::vector<double>* secondary, Index k) {
  // Lexicographic: primary desc, secondary desc (when present), index asc.
  auto cmp = [&](const std::pair<double, Index>& a,
                 const std::pair<double, Index>& b) {
    if (a.first != b.first) return a.first > b.first;
    if (secondary) {
      double sa = (*secondary)[static_cast<std::size_t>(a.second)];
      double sb = (*secondary)[static_cast<std::size_t>(b.second)];
      if (sa != sb) return sa > sb;
    }
    return a.second < b.second;
  };
  TopK out;
  auto kk = static_cast<std::size_t>(k);
  if (cands.size() > kk) {
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(kk),
                      cands.end(), cmp);
    cands.resize(kk);
  } else {
    std::sort(cands.begin(), cands.end(), cmp);
    out.short_list = true;
  }
  for (const auto& [s, idx] : cands) {
    out.items.push_back(idx);
    out.scores.push_back(s);
  }
  return out;
}

}  // namespace

TopK top_k(const RecModel& model, Index u, Index k,
           const std::vector<Index>& exclude) {
  require(k >= 1, Status::InvalidArgument, "top_k: k must be >= 1");
  require(u >= 0 && u < model.user_emb.rows(), Status::InvalidArgument,
          "top_k: user index out of range");
  Eigen::RowVectorXd eu = model.user_emb.row(u);
  std::vector<std::pair<double, Index>> cands;
  cands.reserve(static_cast<std::size_t>(model.item_emb.rows()));
  for (Index i = 0; i < model.item_emb.rows(); ++i) {
    if (std::binary_search(exclude.begin(), exclude.end(), i)) continue;
    cands.emplace_back(eu.dot(model.item_emb.row(i)), i);
  }
  return rank_candidates(cands, nullptr, k);
}

namespace {

// Nearest row of `table` to `query`, cosine first, Euclidean when the query
// (or every candidate) has no direction. Ties resolve to the lowest index.
std::pair<Index, double> nearest_row(const Eigen::RowVectorXd& query,
                                     const Matrix& table) {
  constexpr double kEps = 1e-12;
  double qn = query.norm();
  Index best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  if (qn >= kEps) {
    bool found = false;
    for (Index r = 0; r < table.rows(); ++r) {
      double tn = table.row(r).norm();
      if (tn < kEps) continue;
      double sim = query.dot(table.row(r)) / (qn * tn);
      if (sim > best_sim) {
        best_sim = sim;
        best = r;
        found = true;
      }
    }
    if (found) return {best, best_sim};
  }
  // Euclidean fallback (stored similarity is the negated distance).
  for (Index r = 0; r < table.rows(); ++r) {
    double sim = -(query - table.row(r)).norm();
    if (sim > best_sim) {
      best_sim = sim;
      best = r;
    }
  }
  return {best, best_sim};
}

}  // namespace

Assignment assign_representatives(const BipartiteGraph& original,
                                  const CondensedGraph& condensed,
                                  const Matrix& relay_original,
                                  const Matrix& relay_condensed) {
  require(relay_original.rows() == original.num_users + original.num_items,
          Status::ShapeMismatch,
          "assign_representatives: relay rows vs original nodes");

  Assignment out;
  if (condensed.copy_of_original &&
      condensed.n_users == original.num_users &&
      condensed.n_items == original.num_items) {
    out.identity = true;
    out.user_map.resize(static_cast<std::size_t>(original.num_users));
    out.item_map.resize(static_cast<std::size_t>(original.num_items));
    for (Index u = 0; u < original.num_users; ++u)
      out.user_map[static_cast<std::size_t>(u)] = u;
    for (Index i = 0; i < original.num_items; ++i)
      out.item_map[static_cast<std::size_t>(i)] = i;
    out.user_sim.assign(static_cast<std::size_t>(original.num_users), 1.0);
    out.item_sim.assign(static_cast<std::size_t>(original.num_items), 1.0);
    return out;
  }

  require(relay_condensed.rows() == condensed.total_nodes(),
          Status::ShapeMismatch,
          "assign_representatives: relay rows vs condensed nodes");
  require(relay_original.cols() == relay_condensed.cols(),
          Status::ShapeMismatch,
          "assign_representatives: relay widths differ between sides");

  Matrix cu = relay_condensed.topRows(condensed.n_users);
  Matrix ci = relay_condensed.bottomRows(condensed.n_items);
  for (Index u = 0; u < original.num_users; ++u) {
    auto [idx, sim] = nearest_row(relay_original.row(u), cu);
    out.user_map.push_back(idx);
    out.user_sim.push_back(sim);
  }
  for (Index i = 0; i < original.num_items; ++i) {
    auto [idx, sim] = nearest_row(relay_original.row(original.num_users + i), ci);
    out.item_map.push_back(idx);
    out.item_sim.push_back(sim);
  }
  return out;
}

TopK recommend_for_original(Index user, const RecModel& condensed_model,
                            const Assignment& assign,
                            const Matrix& relay_embeddings, Index orig_users,
                            Index orig_items, Index k,
                            const std::vector<Index>& exclude) {
  require(k >= 1, Status::InvalidArgument, "recommend_for_original: k < 1");
  require(user >= 0 && user < orig_users, Status::InvalidArgument,
          "recommend_for_original: user index out of range");
  require(static_cast<Index>(assign.user_map.size()) == orig_users &&
              static_cast<Index>(assign.item_map.size()) == orig_items,
          Status::ShapeMismatch, "recommend_for_original: partial assignment");

  Index rep_u = assign.user_map[static_cast<std::size_t>(user)];
  Eigen::RowVectorXd eu = condensed_model.user_emb.row(rep_u);

  // Secondary key: relay-embedding cosine between the original user and
  // each original item. Identity assignments never share representatives,
  // so the key is skipped there (keeps ranking identical to plain top_k).
  std::vector<double> secondary(static_cast<std::size_t>(orig_items), 0.0);
  if (!assign.identity) {
    constexpr double kEps = 1e-12;
    Eigen::RowVectorXd hu = relay_embeddings.row(user);
    double hn = hu.norm();
    for (Index i = 0; i < orig_items; ++i) {
      Eigen::RowVectorXd hi = relay_embeddings.row(orig_users + i);
      double in = hi.norm();
      secondary[static_cast<std::size_t>(i)] =
          (hn < kEps || in < kEps) ? 0.0 : hu.dot(hi) / (hn * in);
    }
  }

  std::vector<std::pair<double, Index>> cands;
  cands.reserve(static_cast<std::size_t>(orig_items));
  for (Index i = 0; i < orig_items; ++i) {
    if (std::binary_search(exclude.begin(), exclude.end(), i)) continue;
    Index rep_i = assign.item_map[static_cast<std::size_t>(i)];
    cands.emplace_back(eu.dot(condensed_model.item_emb.row(rep_i)), i);
  }
  return rank_candidates(cands, &secondary, k);
}

}  // namespace demorec
