// Command-line surface for the ranking toolkit: training, evaluation,
// prediction, gradient checks, and estimator benchmarking over LETOR-style
// data. Exit codes: 0 success, 1 pipeline or tolerance failure, 2 usage.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "l2r/checkpoint.hpp"
#include "l2r/gradcheck.hpp"
#include "l2r/letor.hpp"
#include "l2r/trainer.hpp"

namespace {

using namespace l2r;

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::fputs(content.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

struct CommonOptions {
  std::string data;
  std::string checkpoint;
  std::string out;
  int fold = 0;
  int folds = 0;
  bool no_normalize = false;
  TrainConfig config;
};

void add_train_config_flags(CLI::App* cmd, CommonOptions& opts,
                            std::string* val_metric) {
  cmd->add_option("--levels", opts.config.levels,
                  "categorical relevance levels C")
      ->capture_default_str();
  cmd->add_option("--hidden", opts.config.hidden, "hidden layer width")
      ->capture_default_str();
  cmd->add_option("--lr", opts.config.learning_rate, "Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--epochs", opts.config.epochs, "training epochs")
      ->capture_default_str();
  cmd->add_option("--trunc", opts.config.truncation,
                  "NDCG truncation of the training loss")
      ->capture_default_str();
  cmd->add_option("--batch", opts.config.batch_size,
                  "queries per optimizer step")
      ->capture_default_str();
  cmd->add_option("--val-metric", *val_metric,
                  "model selection metric (NDCG@1/3/5/10 or MAP)")
      ->capture_default_str();
}

std::filesystem::path fold_dir(const std::string& data, int fold) {
  std::filesystem::path p(data);
  return fold > 0 ? p / ("Fold" + std::to_string(fold)) : p;
}

CvRow row_from_report(const std::string& name, const MetricsReport& report) {
  CvRow row;
  row.name = name;
  row.ndcg = report.ndcg;
  row.map = report.map;
  return row;
}

int cmd_train(const CommonOptions& opts) {
  const TrainConfig& cfg = opts.config;
  const std::string ckpt_path =
      opts.checkpoint.empty() ? "model.ckpt" : opts.checkpoint;

  if (opts.folds > 0) {
    const CvResult cv = run_cv(opts.data, cfg, opts.folds);
    for (std::size_t i = 0; i < cv.results.size(); ++i) {
      CheckpointMeta meta;
      meta.epoch = static_cast<std::uint32_t>(cv.results[i].report.best_epoch);
      meta.config_hash = config_hash(cfg);
      meta.normalized_features = cfg.normalize ? 1 : 0;
      save_checkpoint(ckpt_path + ".fold" + std::to_string(i + 1),
                      cv.results[i].net, cv.results[i].adam, meta);
    }
    write_text(opts.out, metrics_table_tsv(cv.folds, &cv.mean));
    return 0;
  }

  const FoldSplit fold =
      load_fold(fold_dir(opts.data, opts.fold), std::max(opts.fold, 1),
                cfg.normalize);
  for (const auto& w : fold.warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());

  const TrainResult result = train_fold(fold, cfg);

  CheckpointMeta meta;
  meta.epoch = static_cast<std::uint32_t>(result.report.best_epoch);
  meta.config_hash = config_hash(cfg);
  meta.normalized_features = cfg.normalize ? 1 : 0;
  save_checkpoint(ckpt_path, result.net, result.adam, meta);

  const std::string report_path =
      opts.out.empty() ? ckpt_path + ".report.json" : opts.out;
  write_text(report_path, train_report_json(result.report, cfg, ckpt_path));

  std::printf("checkpoint: %s\nbest epoch: %d (%s = %.4f)\n",
              ckpt_path.c_str(), result.report.best_epoch,
              val_metric_name(cfg.val_metric).c_str(),
              result.report.best_metric);
  if (result.report.best_epoch > 0) {
    const EpochRecord& best =
        result.report.epochs[result.report.best_epoch - 1];
    MetricsReport val;
    val.ndcg = best.val_ndcg;
    val.map = best.val_map;
    std::fputs(metrics_table_tsv({row_from_report("vali", val)}).c_str(),
               stdout);
  }
  return 0;
}

Dataset load_eval_dataset(const std::string& path, bool normalize) {
  std::filesystem::path p(path);
  if (std::filesystem::is_directory(p)) p /= "test.txt";
  Dataset ds = load_dataset(p);
  if (normalize) ds = normalize_per_query(std::move(ds));
  return ds;
}

void require_matching_dims(const Checkpoint& ckpt, const Dataset& ds) {
  if (ds.feature_dim != ckpt.net.input_dim())
    throw std::runtime_error(
        "checkpoint input dim " + std::to_string(ckpt.net.input_dim()) +
        " does not match dataset feature dim " +
        std::to_string(ds.feature_dim));
}

int cmd_eval(const CommonOptions& opts) {
  TrainConfig cfg = opts.config;

  if (opts.folds > 0) {
    std::vector<CvRow> rows;
    for (int f = 1; f <= opts.folds; ++f) {
      std::string path = opts.checkpoint + ".fold" + std::to_string(f);
      if (!std::filesystem::exists(path)) path = opts.checkpoint;
      const Checkpoint ckpt = load_checkpoint(path);
      const bool normalize =
          ckpt.meta.normalized_features != 0 && !opts.no_normalize;
      const FoldSplit fold = load_fold(fold_dir(opts.data, f), f, normalize);
      require_matching_dims(ckpt, fold.test);
      rows.push_back(row_from_report(std::to_string(f),
                                     evaluate(ckpt.net, fold.test, cfg)));
    }
    CvRow mean;
    mean.name = "mean";
    for (const auto& row : rows) {
      for (std::size_t r = 0; r < row.ndcg.size(); ++r)
        mean.ndcg[r] += row.ndcg[r];
      mean.map += row.map;
    }
    for (auto& v : mean.ndcg) v /= rows.size();
    mean.map /= rows.size();
    write_text(opts.out, metrics_table_tsv(rows, &mean));
    return 0;
  }

  const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  const bool normalize =
      ckpt.meta.normalized_features != 0 && !opts.no_normalize;
  const Dataset ds =
      load_eval_dataset(fold_dir(opts.data, opts.fold).string(), normalize);
  require_matching_dims(ckpt, ds);
  const MetricsReport report = evaluate(ckpt.net, ds, cfg);
  const std::string name = opts.fold > 0 ? std::to_string(opts.fold) : "1";
  write_text(opts.out, metrics_table_tsv({row_from_report(name, report)}));
  return 0;
}

int cmd_predict(const CommonOptions& opts) {
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  const bool normalize =
      ckpt.meta.normalized_features != 0 && !opts.no_normalize;
  const Dataset ds = load_eval_dataset(opts.data, normalize);
  require_matching_dims(ckpt, ds);

  struct Line {
    int file_order;
    std::string text;
  };
  std::vector<Line> lines;
  lines.reserve(ds.total_documents());
  char buf[128];
  for (const auto& query : ds.queries) {
    const Matrix logits = forward(ckpt.net, query);
    for (int j = 0; j < query.size(); ++j) {
      const double score = expected_score(softmax_column(logits, j));
      std::snprintf(buf, sizeof(buf), "%s\t%d\t%.10g\n", query.qid.c_str(),
                    query.documents[j].doc_index, score);
      lines.push_back({query.documents[j].file_order, buf});
    }
  }
  std::sort(lines.begin(), lines.end(),
            [](const Line& a, const Line& b) {
              return a.file_order < b.file_order;
            });
  std::string out;
  for (const auto& line : lines) out += line.text;
  write_text(opts.out, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"listwise learning-to-rank with categorical relevance labels "
               "trained by ARSM gradient estimation"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  std::string train_val_metric = "NDCG@10";
  auto* train = app.add_subcommand("train", "train a scorer on a LETOR fold");
  train->add_option("--data", train_opts.data,
                    "fold directory (train.txt/vali.txt/test.txt), or the "
                    "dataset root when --fold/--folds is given")
      ->required();
  train->add_option("--fold", train_opts.fold,
                    "fold number under --data (0: --data is the fold dir)")
      ->capture_default_str();
  train->add_option("--folds", train_opts.folds,
                    "cross-validate over Fold1..FoldN and print the table")
      ->capture_default_str();
  add_train_config_flags(train, train_opts, &train_val_metric);
  train->add_option("--seed", train_opts.config.seed, "root random seed")
      ->capture_default_str();
  train->add_option("--threads", train_opts.config.threads,
                    "worker threads (1 = fully serial)")
      ->capture_default_str();
  train->add_option("--checkpoint", train_opts.checkpoint,
                    "output checkpoint path (default model.ckpt)");
  train->add_option("--out", train_opts.out,
                    "report path (default <checkpoint>.report.json; the "
                    "cross-validation table defaults to stdout)");
  train->add_flag("--no-normalize", train_opts.no_normalize,
                  "disable per-query min-max feature scaling");
  train->add_flag("--early-stop", train_opts.config.early_stop,
                  "stop when validation stops improving");
  train->add_option("--patience", train_opts.config.patience,
                    "epochs without improvement before early stop")
      ->capture_default_str();

  CommonOptions eval_opts;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint to load")
      ->required();
  eval->add_option("--data", eval_opts.data,
                   "LETOR file, fold directory, or dataset root with --folds")
      ->required();
  eval->add_option("--fold", eval_opts.fold,
                   "fold number under --data (0: --data is the fold dir or "
                   "file)")
      ->capture_default_str();
  eval->add_option("--folds", eval_opts.folds,
                   "evaluate Fold1..FoldN test sets (+ mean row)")
      ->capture_default_str();
  eval->add_option("--out", eval_opts.out, "TSV output path (default stdout)");
  eval->add_option("--seed", eval_opts.config.seed, "root random seed")
      ->capture_default_str();
  eval->add_option("--threads", eval_opts.config.threads, "worker threads")
      ->capture_default_str();
  eval->add_flag("--no-normalize", eval_opts.no_normalize,
                 "force feature scaling off even if the checkpoint used it");

  CommonOptions predict_opts;
  auto* predict =
      app.add_subcommand("predict", "score documents of a LETOR file");
  predict->add_option("--checkpoint", predict_opts.checkpoint,
                      "checkpoint to load")
      ->required();
  predict->add_option("--data", predict_opts.data, "LETOR input file")
      ->required();
  predict->add_option("--out", predict_opts.out,
                      "output path (default stdout)");
  predict->add_flag("--no-normalize", predict_opts.no_normalize,
                    "force feature scaling off");

  GradcheckOptions gc_opts;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "run the backprop, unbiasedness, and variance checks");
  gradcheck->add_option("--seed", gc_opts.seed, "root random seed")
      ->capture_default_str();
  gradcheck->add_option("--trials", gc_opts.variance_trials,
                        "instances for the variance comparison")
      ->capture_default_str();
  gradcheck->add_option("--draws", gc_opts.unbias_draws,
                        "Dirichlet draws per unbiasedness instance")
      ->capture_default_str();
  gradcheck->add_option("--nets", gc_opts.backprop_nets,
                        "random nets for the finite-difference suite")
      ->capture_default_str();

  int bench_levels = 4;
  int bench_samples = 20000;
  std::uint64_t bench_seed = 42;
  std::string bench_reward = "top";
  std::string bench_out;
  auto* bench = app.add_subcommand(
      "estimator-bench", "compare estimators against exact enumeration");
  bench->add_option("--levels", bench_levels, "categories C")
      ->capture_default_str();
  bench->add_option("--samples", bench_samples, "Monte Carlo draws")
      ->capture_default_str();
  bench->add_option("--seed", bench_seed, "root random seed")
      ->capture_default_str();
  bench->add_option("--reward", bench_reward,
                    "reward table: 'top' (indicator of category C) or "
                    "'random'")
      ->capture_default_str();
  bench->add_option("--out", bench_out, "TSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      train_opts.config.val_metric = parse_val_metric(train_val_metric);
      train_opts.config.normalize = !train_opts.no_normalize;
      return cmd_train(train_opts);
    }
    if (eval->parsed()) return cmd_eval(eval_opts);
    if (predict->parsed()) return cmd_predict(predict_opts);
    if (gradcheck->parsed()) {
      const GradcheckReport report = run_gradcheck(gc_opts);
      std::fputs(report.to_text().c_str(), stdout);
      return report.pass() ? 0 : 1;
    }
    if (bench->parsed()) {
      if (bench_reward != "top" && bench_reward != "random")
        throw std::runtime_error("unknown --reward: " + bench_reward);
      write_text(bench_out,
                 estimator_bench_tsv(bench_levels, bench_samples, bench_seed,
                                     bench_reward == "random"));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
