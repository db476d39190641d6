#include "l2r/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "json.hpp"
#include "l2r/arsm.hpp"
#include "l2r/parallel.hpp"

namespace l2r {

namespace {

void add_block(double* acc, const double* addend, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += addend[i];
}

void accumulate(ScoringNet& acc, const ScoringNet& addend) {
  add_block(acc.w1.data(), addend.w1.data(), acc.w1.size());
  add_block(acc.b1.data(), addend.b1.data(), acc.b1.size());
  add_block(acc.w2.data(), addend.w2.data(), acc.w2.size());
  add_block(acc.b2.data(), addend.b2.data(), acc.b2.size());
}

void scale(ScoringNet& net, double factor) {
  for (std::size_t i = 0; i < net.w1.size(); ++i) net.w1.data()[i] *= factor;
  for (auto& v : net.b1) v *= factor;
  for (std::size_t i = 0; i < net.w2.size(); ++i) net.w2.data()[i] *= factor;
  for (auto& v : net.b2) v *= factor;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::uint64_t config_hash(const TrainConfig& config) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "levels=%d|hidden=%d|lr=%.17g|epochs=%d|trunc=%d|batch=%d|"
                "seed=%llu|val=%s|norm=%d|tie=%d",
                config.levels, config.hidden, config.learning_rate,
                config.epochs, config.truncation, config.batch_size,
                static_cast<unsigned long long>(config.seed),
                val_metric_name(config.val_metric).c_str(),
                config.normalize ? 1 : 0,
                config.tie_break == TieBreak::kRandom ? 1 : 0);
  return fnv1a64(buf, std::strlen(buf));
}

ScoringNet query_gradient(const ScoringNet& net, const QueryGroup& query,
                          const TrainConfig& config, int epoch,
                          int query_index, double* loss_out) {
  if (loss_out != nullptr) *loss_out = 0.0;
  // a query with no positive label has a loss that is constant in z,
  // hence an exactly-zero gradient
  if (!query.has_relevant()) return zeros_like(net);

  ForwardCache cache;
  const Matrix logits = forward(net, query, &cache);

  Rng rng = Rng::from_keys({config.seed, stream::kQueryDraw,
                            static_cast<std::uint64_t>(epoch),
                            static_cast<std::uint64_t>(query_index)});
  const DirichletDraw draw =
      sample_dirichlet_ones(config.levels, query.size(), rng);
  const PseudoActionSet actions = pseudo_actions(draw, logits);

  const std::vector<int> labels = query.labels();
  const LossMatrix loss_matrix =
      build_loss_matrix(actions, [&](const ActionVector& z) {
        return training_loss(z, labels, config.truncation);
      });
  if (loss_out != nullptr) *loss_out = loss_matrix.true_loss();
  if (!std::isfinite(loss_matrix.true_loss()))
    throw TrainError("non-finite loss at epoch " + std::to_string(epoch) +
                     ", query " + query.qid);

  const Matrix logit_grad = arsm_gradient(loss_matrix, draw);
  ScoringNet grads = backward(net, cache, logit_grad);
  if (!grads.all_finite())
    throw TrainError("non-finite gradient at epoch " + std::to_string(epoch) +
                     ", query " + query.qid);
  return grads;
}

TrainResult train_fold(const FoldSplit& fold, const TrainConfig& config) {
  if (fold.train.queries.empty() || fold.validation.queries.empty())
    throw std::invalid_argument("train and validation sets must be non-empty");
  if (fold.train.feature_dim != fold.validation.feature_dim)
    throw std::invalid_argument("train/validation feature dims disagree");
  if (config.levels < 2) throw std::invalid_argument("levels must be >= 2");
  if (config.batch_size < 1 || config.epochs < 0)
    throw std::invalid_argument("bad batch size or epoch count");

  TrainResult result;
  result.net = glorot_init(fold.train.feature_dim, config.hidden,
                           config.levels, config.seed);
  result.adam = make_adam_state(result.net, config.adam());

  ScoringNet best_net = result.net;
  AdamState best_adam = result.adam;
  double best_metric = -1.0;
  int best_epoch = 0;

  const int num_queries = static_cast<int>(fold.train.queries.size());
  std::vector<int> order(num_queries);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng shuffle_rng = Rng::from_keys(
        {config.seed, stream::kShuffle, static_cast<std::uint64_t>(epoch)});
    shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    for (int start = 0; start < num_queries; start += config.batch_size) {
      const int batch = std::min(config.batch_size, num_queries - start);
      std::vector<ScoringNet> grads(batch);
      std::vector<double> losses(batch, 0.0);
      parallel_for(batch, config.threads, [&](int b) {
        const int qi = order[start + b];
        grads[b] = query_gradient(result.net, fold.train.queries[qi], config,
                                  epoch, qi, &losses[b]);
      });

      // fixed-order reduction: parallel and serial runs agree bitwise
      ScoringNet batch_grad = std::move(grads[0]);
      for (int b = 1; b < batch; ++b) accumulate(batch_grad, grads[b]);
      scale(batch_grad, 1.0 / batch);
      for (int b = 0; b < batch; ++b) loss_sum += losses[b];

      // skip degenerate batches entirely: Adam momentum would otherwise
      // move parameters on a provably-zero gradient
      if (!batch_grad.all_zero())
        adam_step(result.net, batch_grad, result.adam);
    }

    const MetricsReport val = evaluate(result.net, fold.validation, config);
    EpochRecord record;
    record.train_loss = loss_sum / num_queries;
    record.val_ndcg = val.ndcg;
    record.val_map = val.map;
    record.val_selected = val.value(config.val_metric);
    result.report.epochs.push_back(record);

    if (record.val_selected > best_metric) {
      best_metric = record.val_selected;
      best_epoch = epoch;
      best_net = result.net;
      best_adam = result.adam;
    }
    if (config.early_stop && epoch - best_epoch >= config.patience) break;
  }

  result.report.best_epoch = best_epoch;
  result.report.best_metric = best_epoch > 0 ? best_metric : 0.0;
  if (best_epoch > 0) {
    result.net = std::move(best_net);
    result.adam = std::move(best_adam);
  }
  return result;
}

MetricsReport evaluate(const ScoringNet& net, const Dataset& ds,
                       const TrainConfig& config) {
  if (ds.feature_dim != net.input_dim())
    throw std::invalid_argument(
        "dataset feature dim " + std::to_string(ds.feature_dim) +
        " does not match network input dim " +
        std::to_string(net.input_dim()));

  const int num_queries = static_cast<int>(ds.queries.size());
  MetricsReport report;
  report.per_query_ndcg.resize(num_queries);
  report.per_query_ap.resize(num_queries);
  report.per_query_relevant.resize(num_queries);

  parallel_for(num_queries, config.threads, [&](int qi) {
    const QueryGroup& query = ds.queries[qi];
    const Matrix logits = forward(net, query);
    std::vector<double> scores(query.size());
    for (int j = 0; j < query.size(); ++j)
      scores[j] = expected_score(softmax_column(logits, j));

    Rng tie_rng = Rng::from_keys({config.seed, stream::kTieBreak,
                                  static_cast<std::uint64_t>(qi)});
    const Ranking ranking =
        rank_by_scores(scores, config.tie_break, &tie_rng);
    const std::vector<int> labels = query.labels();
    for (std::size_t r = 0; r < MetricsReport::kCutoffs.size(); ++r)
      report.per_query_ndcg[qi][r] =
          ndcg_at(ranking, labels, MetricsReport::kCutoffs[r]);
    const ApResult ap = average_precision(ranking, labels);
    report.per_query_ap[qi] = ap.value;
    report.per_query_relevant[qi] = ap.any_relevant ? 1 : 0;
  });

  std::array<double, 4> ndcg_sum{};
  double ap_sum = 0.0;
  int included = 0;
  for (int qi = 0; qi < num_queries; ++qi) {
    if (!report.per_query_relevant[qi] && !config.include_zero_relevant)
      continue;
    ++included;
    for (std::size_t r = 0; r < ndcg_sum.size(); ++r)
      ndcg_sum[r] += report.per_query_ndcg[qi][r];
    ap_sum += report.per_query_ap[qi];
  }
  report.included_queries = included;
  if (included > 0) {
    for (std::size_t r = 0; r < ndcg_sum.size(); ++r)
      report.ndcg[r] = ndcg_sum[r] / included;
    report.map = ap_sum / included;
  }
  return report;
}

std::uint64_t fold_seed(std::uint64_t seed, int fold_id) {
  std::uint64_t keys[2] = {seed, static_cast<std::uint64_t>(fold_id)};
  return fnv1a64(keys, sizeof(keys), stream::kFold ^ 14695981039346656037ull);
}

CvResult run_cv(const std::filesystem::path& root, const TrainConfig& config,
                int num_folds) {
  CvResult cv;
  for (int f = 1; f <= num_folds; ++f) {
    const auto dir = root / ("Fold" + std::to_string(f));
    if (!std::filesystem::exists(dir))
      throw std::runtime_error("missing fold directory: " + dir.string());
    const FoldSplit fold = load_fold(dir, f, config.normalize);

    TrainConfig fold_config = config;
    fold_config.seed = fold_seed(config.seed, f);
    TrainResult result = train_fold(fold, fold_config);
    const MetricsReport test = evaluate(result.net, fold.test, fold_config);

    CvRow row;
    row.name = std::to_string(f);
    row.ndcg = test.ndcg;
    row.map = test.map;
    cv.folds.push_back(row);
    cv.results.push_back(std::move(result));
  }

  cv.mean.name = "mean";
  for (const auto& row : cv.folds) {
    for (std::size_t r = 0; r < row.ndcg.size(); ++r)
      cv.mean.ndcg[r] += row.ndcg[r];
    cv.mean.map += row.map;
  }
  const double count = static_cast<double>(cv.folds.size());
  for (auto& v : cv.mean.ndcg) v /= count;
  cv.mean.map /= count;
  return cv;
}

std::string metrics_table_tsv(const std::vector<CvRow>& rows,
                              const CvRow* mean) {
  std::string out = "fold\tNDCG@1\tNDCG@3\tNDCG@5\tNDCG@10\tMAP\n";
  auto append = [&out](const CvRow& row) {
    out += row.name;
    for (double v : row.ndcg) out += '\t' + format_metric(v);
    out += '\t' + format_metric(row.map) + '\n';
  };
  for (const auto& row : rows) append(row);
  if (mean != nullptr) append(*mean);
  return out;
}

std::string train_report_json(const TrainReport& report,
                              const TrainConfig& config,
                              const std::string& checkpoint_path) {
  nlohmann::ordered_json j;
  j["config"] = {
      {"levels", config.levels},
      {"hidden", config.hidden},
      {"learning_rate", config.learning_rate},
      {"epochs", config.epochs},
      {"truncation", config.truncation},
      {"batch_size", config.batch_size},
      {"seed", config.seed},
      {"val_metric", val_metric_name(config.val_metric)},
      {"normalize", config.normalize},
      {"config_hash", config_hash(config)},
  };
  j["best_epoch"] = report.best_epoch;
  j["best_metric"] = report.best_metric;
  if (!checkpoint_path.empty()) j["checkpoint"] = checkpoint_path;
  nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"train_loss", e.train_loss},
                      {"ndcg@1", e.val_ndcg[0]},
                      {"ndcg@3", e.val_ndcg[1]},
                      {"ndcg@5", e.val_ndcg[2]},
                      {"ndcg@10", e.val_ndcg[3]},
                      {"map", e.val_map}});
  }
  j["epochs"] = std::move(epochs);
  return j.dump(2) + "\n";
}

}  // namespace l2r
