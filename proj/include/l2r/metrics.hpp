#ifndef L2R_METRICS_HPP_
#define L2R_METRICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "l2r/rng.hpp"

namespace l2r {

enum class TieBreak {
  kByIndex,  // deterministic: equal scores keep ascending doc order
  kRandom,   // randomized tie order, for sensitivity studies
};

struct Ranking {
  std::vector<int> order;    // order[p] = doc index at rank p+1
  std::vector<int> rank_of;  // rank_of[doc] = 1-based rank
};

// Descending sort by score. kRandom requires an rng.
Ranking rank_by_scores(std::span<const double> scores,
                       TieBreak tie = TieBreak::kByIndex, Rng* rng = nullptr);

// Truncated NDCG with gain 2^y - 1 and discount log2(1 + rank). The ideal
// DCG places the labels in descending order at ranks 1..R. Queries with
// no positive label (ideal DCG zero) score 0.
double ndcg_at(const Ranking& ranking, std::span<const int> labels,
               int truncation);

struct ApResult {
  double value = 0.0;
  bool any_relevant = false;  // false when every label binarizes to 0
};

// Average precision with binary relevance y >= 1. Queries with no
// relevant document get value 0 and any_relevant = false so callers can
// decide whether to include them in MAP.
ApResult average_precision(const Ranking& ranking,
                           std::span<const int> labels);

double mean_over_queries(std::span<const double> values);

// Training loss: negative NDCG@R of the ranking induced by predicted
// category labels z (values 1..C, larger means more relevant).
double training_loss(std::span<const int> z, std::span<const int> y,
                     int truncation);

enum class ValMetric { kNdcg1, kNdcg3, kNdcg5, kNdcg10, kMap };

ValMetric parse_val_metric(const std::string& name);  // "NDCG@10", "MAP"
std::string val_metric_name(ValMetric m);

struct MetricsReport {
  static constexpr std::array<int, 4> kCutoffs{1, 3, 5, 10};

  std::array<double, 4> ndcg{};  // means over included queries
  double map = 0.0;
  int included_queries = 0;

  std::vector<std::array<double, 4>> per_query_ndcg;
  std::vector<double> per_query_ap;
  std::vector<std::uint8_t> per_query_relevant;

  double value(ValMetric m) const;
};

}  // namespace l2r

#endif  // L2R_METRICS_HPP_
