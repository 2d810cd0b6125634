#include "metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace demorec {

namespace {

Index hits_in_top_k(const std::vector<Index>& ranked,
                    const std::vector<Index>& relevant, Index k) {
  Index hits = 0;
  Index limit = std::min<Index>(k, static_cast<Index>(ranked.size()));
  for (Index r = 0; r < limit; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(),
                           ranked[static_cast<std::size_t>(r)]))
      ++hits;
  return hits;
}

}  // namespace

double precision_at_k(const std::vector<Index>& ranked,
                      const std::vector<Index>& relevant, Index k) {
  require(k >= 1, Status::InvalidArgument, "precision_at_k: k must be >= 1");
  return static_cast<double>(hits_in_top_k(ranked, relevant, k)) /
         static_cast<double>(k);
}

double recall_at_k(const std::vector<Index>& ranked,
                   const std::vector<Index>& relevant, Index k) {
  require(k >= 1, Status::InvalidArgument, "recall_at_k: k must be >= 1");
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hits_in_top_k(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<Index>& ranked,
                 const std::vector<Index>& relevant, Index k) {
  require(k >= 1, Status::InvalidArgument, "ndcg_at_k: k must be >= 1");
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  Index limit = std::min<Index>(k, static_cast<Index>(ranked.size()));
  for (Index r = 0; r < limit; ++r)
    if (std::binary_search(relevant.begin(), relevant.end(),
                           ranked[static_cast<std::size_t>(r)]))
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  double idcg = 0.0;
  Index ideal = std::min<Index>(k, static_cast<Index>(relevant.size()));
  for (Index r = 0; r < ideal; ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

MetricsAtK evaluate(const std::vector<std::vector<Index>>& ranked_per_user,
                    const std::vector<std::vector<Index>>& relevant_per_user,
                    Index k) {
  require(ranked_per_user.size() == relevant_per_user.size(),
          Status::ShapeMismatch, "evaluate: per-user list sizes differ");
  MetricsAtK out;
  for (std::size_t u = 0; u < ranked_per_user.size(); ++u) {
    const auto& relevant = relevant_per_user[u];
    if (relevant.empty()) continue;  // no ground truth, skip from averages
    out.precision += precision_at_k(ranked_per_user[u], relevant, k);
    out.recall += recall_at_k(ranked_per_user[u], relevant, k);
    out.ndcg += ndcg_at_k(ranked_per_user[u], relevant, k);
    ++out.users_evaluated;
  }
  if (out.users_evaluated > 0) {
    double n = static_cast<double>(out.users_evaluated);
    out.precision /= n;
    out.recall /= n;
    out.ndcg /= n;
  }
  return out;
}

MetricsReport aggregate(const std::vector<MetricsAtK>& per_seed, Index k) {
  require(!per_seed.empty(), Status::InvalidArgument,
          "aggregate: no runs supplied");
  MetricsReport rep;
  rep.k = k;
  rep.per_seed = per_seed;
  rep.single_run = per_seed.size() == 1;
  double n = static_cast<double>(per_seed.size());
  auto mean_std = [&](auto field, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& m : per_seed) mean += m.*field;
    mean /= n;
    // Population std; 0 for a single run.
    double var = 0.0;
    for (const auto& m : per_seed) var += (m.*field - mean) * (m.*field - mean);
    sd = std::sqrt(var / n);
  };
  mean_std(&MetricsAtK::precision, rep.precision_mean, rep.precision_std);
  mean_std(&MetricsAtK::recall, rep.recall_mean, rep.recall_std);
  mean_std(&MetricsAtK::ndcg, rep.ndcg_mean, rep.ndcg_std);
  return rep;
}

double time_epochs_median(const std::function<void()>& epoch, int warmup,
                          int samples) {
  require(samples >= 1, Status::InvalidArgument,
          "time_epochs_median: need at least one sample");
  for (int w = 0; w < warmup; ++w) epoch();
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    auto t0 = std::chrono::steady_clock::now();
    epoch();
    auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  double median = times[times.size() / 2];
  // Sub-resolution closures still must report a positive duration.
  return std::max(median, 1e-12);
}

std::int64_t training_bytes_estimate(Index num_users, Index num_items,
                                     Index dim, std::int64_t num_edges) {
  std::int64_t embeddings =
      static_cast<std::int64_t>(num_users + num_items) * dim * 8;
  std::int64_t adjacency = num_edges * 2 * static_cast<std::int64_t>(sizeof(Index));
  std::int64_t sampler = static_cast<std::int64_t>(num_items) * 2 * 8;
  return embeddings + adjacency + sampler;
}

}  // namespace demorec
