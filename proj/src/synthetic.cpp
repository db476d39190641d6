#include "l2r/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "l2r/rng.hpp"

namespace l2r {

namespace {

Dataset make_subset(const SyntheticConfig& config, int num_queries,
                    const std::string& qid_prefix,
                    const std::vector<double>& weights, Rng& rng) {
  Dataset ds;
  ds.feature_dim = config.feature_dim;
  ds.num_grades = config.grades;
  for (int q = 0; q < num_queries; ++q) {
    QueryGroup group;
    group.qid = qid_prefix + std::to_string(q + 1);

    const int n = config.docs_per_query;
    std::vector<std::vector<double>> features(n);
    std::vector<double> scores(n);
    for (int j = 0; j < n; ++j) {
      features[j].resize(config.feature_dim);
      double dot = 0.0;
      for (int d = 0; d < config.feature_dim; ++d) {
        features[j][d] = rng.uniform01();
        dot += weights[d] * features[j][d];
      }
      scores[j] = dot;
    }

    // quantile binning: the top slice of w.x gets the top grade
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    std::vector<int> labels(n);
    for (int pos = 0; pos < n; ++pos)
      labels[order[pos]] = config.grades - 1 - pos * config.grades / n;

    for (int j = 0; j < n; ++j) {
      Document doc;
      doc.label = labels[j];
      doc.features = std::move(features[j]);
      doc.doc_index = j;
      group.documents.push_back(std::move(doc));
    }
    ds.queries.push_back(std::move(group));
  }
  return ds;
}

void write_subset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  for (const auto& q : ds.queries)
    for (const auto& doc : q.documents)
      out << serialize_document(doc, q.qid) << '\n';
}

}  // namespace

FoldSplit make_synthetic_fold(const SyntheticConfig& config) {
  Rng wrng = Rng::from_keys({config.seed, stream::kSynthetic, 0});
  std::vector<double> weights(config.feature_dim);
  double norm = 0.0;
  for (auto& w : weights) {
    w = wrng.normal();
    norm += w * w;
  }
  norm = std::sqrt(norm);
  for (auto& w : weights) w /= norm;

  FoldSplit fold;
  fold.fold_id = 1;
  Rng train_rng = Rng::from_keys({config.seed, stream::kSynthetic, 1});
  Rng vali_rng = Rng::from_keys({config.seed, stream::kSynthetic, 2});
  Rng test_rng = Rng::from_keys({config.seed, stream::kSynthetic, 3});
  fold.train =
      make_subset(config, config.train_queries, "train-", weights, train_rng);
  fold.validation = make_subset(config, config.validation_queries, "vali-",
                                weights, vali_rng);
  fold.test =
      make_subset(config, config.test_queries, "test-", weights, test_rng);
  return fold;
}

void write_fold_files(const std::filesystem::path& dir, const FoldSplit& fold) {
  std::filesystem::create_directories(dir);
  write_subset(dir / "train.txt", fold.train);
  write_subset(dir / "vali.txt", fold.validation);
  write_subset(dir / "test.txt", fold.test);
}

}  // namespace l2r
