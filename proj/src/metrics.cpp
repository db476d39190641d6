#include "l2r/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace l2r {

namespace {

double gain(int label) { return std::exp2(static_cast<double>(label)) - 1.0; }

double discount(int rank) {  // rank is 1-based
  return std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace

Ranking rank_by_scores(std::span<const double> scores, TieBreak tie,
                       Rng* rng) {
  const int n = static_cast<int>(scores.size());
  Ranking r;
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), 0);

  if (tie == TieBreak::kRandom) {
    if (rng == nullptr)
      throw std::invalid_argument("random tie-break requires an rng");
    std::vector<double> priority(n);
    for (auto& p : priority) p = rng->uniform01();
    std::sort(r.order.begin(), r.order.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      if (priority[a] != priority[b]) return priority[a] < priority[b];
      return a < b;
    });
  } else {
    std::sort(r.order.begin(), r.order.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
  }

  r.rank_of.resize(n);
  for (int pos = 0; pos < n; ++pos) r.rank_of[r.order[pos]] = pos + 1;
  return r;
}

double ndcg_at(const Ranking& ranking, std::span<const int> labels,
               int truncation) {
  if (truncation < 1)
    throw std::invalid_argument("ndcg truncation must be >= 1");
  const int n = static_cast<int>(labels.size());
  if (static_cast<int>(ranking.order.size()) != n)
    throw std::invalid_argument("ranking size does not match label count");
  for (int y : labels)
    if (y < 0) throw std::invalid_argument("labels must be non-negative");

  const int depth = std::min(truncation, n);

  std::vector<int> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());
  double idcg = 0.0;
  for (int pos = 0; pos < depth; ++pos)
    idcg += gain(ideal[pos]) / discount(pos + 1);
  if (idcg == 0.0) return 0.0;

  double dcg = 0.0;
  for (int pos = 0; pos < depth; ++pos)
    dcg += gain(labels[ranking.order[pos]]) / discount(pos + 1);
  return dcg / idcg;
}

ApResult average_precision(const Ranking& ranking,
                           std::span<const int> labels) {
  const int n = static_cast<int>(labels.size());
  if (static_cast<int>(ranking.order.size()) != n)
    throw std::invalid_argument("ranking size does not match label count");

  int total_relevant = 0;
  for (int y : labels) total_relevant += (y >= 1);
  if (total_relevant == 0) return {0.0, false};

  double sum = 0.0;
  int hits = 0;
  for (int pos = 0; pos < n; ++pos) {
    if (labels[ranking.order[pos]] >= 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return {sum / static_cast<double>(total_relevant), true};
}

double mean_over_queries(std::span<const double> values) {
  if (values.empty())
    throw std::invalid_argument("mean over an empty set of queries");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double training_loss(std::span<const int> z, std::span<const int> y,
                     int truncation) {
  if (z.size() != y.size())
    throw std::invalid_argument("predicted and true label counts differ");
  std::vector<double> scores(z.size());
  for (std::size_t j = 0; j < z.size(); ++j)
    scores[j] = static_cast<double>(z[j]);
  const Ranking ranking = rank_by_scores(scores);
  const double ndcg = ndcg_at(ranking, y, truncation);
  return ndcg > 0.0 ? -ndcg : 0.0;
}

ValMetric parse_val_metric(const std::string& name) {
  if (name == "NDCG@1") return ValMetric::kNdcg1;
  if (name == "NDCG@3") return ValMetric::kNdcg3;
  if (name == "NDCG@5") return ValMetric::kNdcg5;
  if (name == "NDCG@10") return ValMetric::kNdcg10;
  if (name == "MAP") return ValMetric::kMap;
  throw std::invalid_argument("unknown validation metric: " + name);
}

std::string val_metric_name(ValMetric m) {
  switch (m) {
    case ValMetric::kNdcg1: return "NDCG@1";
    case ValMetric::kNdcg3: return "NDCG@3";
    case ValMetric::kNdcg5: return "NDCG@5";
    case ValMetric::kNdcg10: return "NDCG@10";
    case ValMetric::kMap: return "MAP";
  }
  throw std::invalid_argument("unknown validation metric");
}

double MetricsReport::value(ValMetric m) const {
  switch (m) {
    case ValMetric::kNdcg1: return ndcg[0];
    case ValMetric::kNdcg3: return ndcg[1];
    case ValMetric::kNdcg5: return ndcg[2];
    case ValMetric::kNdcg10: return ndcg[3];
    case ValMetric::kMap: return map;
  }
  throw std::invalid_argument("unknown validation metric");
}

}  // namespace l2r
