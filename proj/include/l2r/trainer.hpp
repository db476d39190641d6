#ifndef L2R_TRAINER_HPP_
#define L2R_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2r/letor.hpp"
#include "l2r/metrics.hpp"
#include "l2r/scoring_net.hpp"

namespace l2r {

struct TrainConfig {
  int levels = 20;             // categorical relevance levels C
  int hidden = 500;            // hidden units
  double learning_rate = 1e-4;
  int epochs = 2000;
  int truncation = 10;         // NDCG depth of the training loss
  int batch_size = 1;          // queries per optimizer step
  std::uint64_t seed = 42;
  ValMetric val_metric = ValMetric::kNdcg10;
  bool normalize = true;       // per-query feature scaling at load time
  int threads = 1;
  bool early_stop = false;     // off: run the full epoch budget
  int patience = 100;
  bool include_zero_relevant = true;  // count no-relevant queries in means
  TieBreak tie_break = TieBreak::kByIndex;

  AdamConfig adam() const { return {learning_rate, 0.9, 0.999, 1e-8}; }
};

std::uint64_t config_hash(const TrainConfig& config);

struct EpochRecord {
  double train_loss = 0.0;  // mean loss over training queries
  std::array<double, 4> val_ndcg{};
  double val_map = 0.0;
  double val_selected = 0.0;  // the metric used for model selection
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 if no epoch ran
  double best_metric = 0.0;
};

struct TrainResult {
  ScoringNet net;   // parameters from the best validation epoch
  AdamState adam;   // optimizer state at that epoch
  TrainReport report;
};

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ARSM gradient of one query's expected loss with respect to the network
// parameters. The Dirichlet stream is keyed by (seed, epoch, query_index),
// so results do not depend on scheduling. Exposed for the trainer's batch
// path and its tests.
ScoringNet query_gradient(const ScoringNet& net, const QueryGroup& query,
                          const TrainConfig& config, int epoch,
                          int query_index, double* loss_out = nullptr);

TrainResult train_fold(const FoldSplit& fold, const TrainConfig& config);

MetricsReport evaluate(const ScoringNet& net, const Dataset& ds,
                       const TrainConfig& config);

struct CvRow {
  std::string name;
  std::array<double, 4> ndcg{};
  double map = 0.0;
};

struct CvResult {
  std::vector<CvRow> folds;
  CvRow mean;
  std::vector<TrainResult> results;  // one per fold, same order
};

// Trains Fold1..Fold<num_folds> under `root`, evaluates each test set, and
// aggregates a mean row. Per-fold seeds derive from (seed, fold_id).
CvResult run_cv(const std::filesystem::path& root, const TrainConfig& config,
                int num_folds = 5);

std::uint64_t fold_seed(std::uint64_t seed, int fold_id);

// TSV table in the reported-metrics layout:
// fold  NDCG@1  NDCG@3  NDCG@5  NDCG@10  MAP
std::string metrics_table_tsv(const std::vector<CvRow>& rows,
                              const CvRow* mean = nullptr);

std::string train_report_json(const TrainReport& report,
                              const TrainConfig& config,
                              const std::string& checkpoint_path = "");

}  // namespace l2r

#endif  // L2R_TRAINER_HPP_
