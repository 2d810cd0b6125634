#pragma once

#include <functional>
#include <string>
#include <vector>

#include "common.hpp"

namespace demorec {

double precision_at_k(const std::vector<Index>& ranked,
                      const std::vector<Index>& relevant, Index k);
// relevant must be sorted ascending for all three.
double recall_at_k(const std::vector<Index>& ranked,
                   const std::vector<Index>& relevant, Index k);
double ndcg_at_k(const std::vector<Index>& ranked,
                 const std::vector<Index>& relevant, Index k);

struct MetricsAtK {
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  Index users_evaluated = 0;
};

// Unweighted mean over users with nonempty relevant sets.
MetricsAtK evaluate(const std::vector<std::vector<Index>>& ranked_per_user,
                    const std::vector<std::vector<Index>>& relevant_per_user,
                    Index k);

struct MetricsReport {
  Index k = 20;
  std::vector<MetricsAtK> per_seed;
  double precision_mean = 0.0, precision_std = 0.0;
  double recall_mean = 0.0, recall_std = 0.0;
  double ndcg_mean = 0.0, ndcg_std = 0.0;
  bool single_run = false;
};

MetricsReport aggregate(const std::vector<MetricsAtK>& per_seed, Index k);

struct EfficiencyReport {
  double epoch_time_seconds = 0.0;
  std::int64_t peak_bytes_estimate = 0;
  std::int64_t edges_original = 0;
  std::int64_t edges_condensed = 0;
};

// Median wall-clock seconds of `samples` runs after `warmup` unrecorded
// runs.
double time_epochs_median(const std::function<void()>& epoch, int warmup = 2,
                          int samples = 5);

// Analytic allocation estimate for one training run: embedding tables plus
// adjacency storage plus the negative-sampling table.
std::int64_t training_bytes_estimate(Index num_users, Index num_items,
                                     Index dim, std::int64_t num_edges);

}  // namespace demorec
