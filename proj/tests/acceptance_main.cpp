// Acceptance suite. Each criterion prints one PASS/FAIL line; the exit
// code is the number of failures. Criteria marked offline are skipped
// here and noted as such.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "l2r/arsm.hpp"
#include "l2r/checkpoint.hpp"
#include "l2r/metrics.hpp"
#include "l2r/rng.hpp"
#include "l2r/scoring_net.hpp"
#include "l2r/synthetic.hpp"
#include "l2r/trainer.hpp"
#include "oracles.hpp"

using namespace l2r;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& description,
            const std::string& detail) {
  std::printf("criterion %d [%s]: %s (%s)\n", criterion,
              pass ? "PASS" : "FAIL", description.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

struct Welford {
  long long n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double stderr_of_mean() const { return std::sqrt(variance() / n); }
};

Matrix random_logits(int levels, int n, Rng& rng) {
  Matrix m(levels, n);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

std::vector<int> random_labels(int n, int max_grade, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = rng.uniform_int(0, max_grade);
  return y;
}

// 1. Unbiasedness: mean of single-draw ARSM gradients over 2e5 draws
// matches exact enumeration within 3 standard errors, every coordinate,
// on 20 random instances (n=3, C=4, loss = -NDCG@3).
void criterion_unbiasedness() {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kInstances = 20;
  constexpr int kDraws = 200000;
  constexpr int kLevels = 4;
  constexpr int kDocs = 3;
  double worst_z = 0.0;
  int bad_coords = 0;
  for (int instance = 0; instance < kInstances; ++instance) {
    Rng rng = Rng::from_keys({12, 1, static_cast<std::uint64_t>(instance)});
    const Matrix logits = random_logits(kLevels, kDocs, rng);
    const std::vector<int> labels = random_labels(kDocs, 2, rng);
    const LossFn loss = [&](const ActionVector& z) {
      return training_loss(z, labels, 3);
    };
    const Matrix exact = exact_gradient_enumeration(logits, loss);

    std::vector<Welford> stats(logits.size());
    for (int s = 0; s < kDraws; ++s) {
      const DirichletDraw draw = sample_dirichlet_ones(kLevels, kDocs, rng);
      const Matrix g = arsm_gradient(
          build_loss_matrix(pseudo_actions(draw, logits), loss), draw);
      for (std::size_t i = 0; i < g.size(); ++i) stats[i].add(g.data()[i]);
    }
    for (std::size_t i = 0; i < stats.size(); ++i) {
      const double se = stats[i].stderr_of_mean();
      const double diff = std::abs(stats[i].mean - exact.data()[i]);
      if (se > 0.0) {
        worst_z = std::max(worst_z, diff / se);
        if (diff > 3.0 * se) ++bad_coords;
      } else if (diff > 1e-12) {
        ++bad_coords;
      }
    }
  }
  const double elapsed = seconds_since(start);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "max |z| %.2f over %d coords, %d beyond 3 sigma, %.1fs",
                worst_z, kInstances * kLevels * kDocs, bad_coords, elapsed);
  report(1, bad_coords == 0 && elapsed < 120.0,
         "ARSM estimator is unbiased against exact enumeration", detail);
}

// 2. Zero-sum identity per draw: every per-document gradient column sums
// to 0 within 1e-12 for 1e4 random draws.
void criterion_zero_sum() {
  constexpr int kInstances = 20;
  constexpr int kDrawsPer = 500;
  double worst = 0.0;
  for (int instance = 0; instance < kInstances; ++instance) {
    Rng rng = Rng::from_keys({2024, 2, static_cast<std::uint64_t>(instance)});
    const int levels = rng.uniform_int(2, 8);
    const int n = rng.uniform_int(1, 5);
    const Matrix logits = random_logits(levels, n, rng);
    const std::vector<int> labels = random_labels(n, 2, rng);
    const LossFn loss = [&](const ActionVector& z) {
      return training_loss(z, labels, 10);
    };
    for (int s = 0; s < kDrawsPer; ++s) {
      const DirichletDraw draw = sample_dirichlet_ones(levels, n, rng);
      const Matrix g = arsm_gradient(
          build_loss_matrix(pseudo_actions(draw, logits), loss), draw);
      for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        for (int c = 0; c < levels; ++c) sum += g(c, j);
        worst = std::max(worst, std::abs(sum));
      }
    }
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail), "max |column sum| %.3e over 10^4 draws",
                worst);
  report(2, worst <= 1e-12, "gradient columns sum to zero per draw", detail);
}

// 3. Variance reduction: ARSM per-coordinate variance <= plain REINFORCE
// at an equal loss-evaluation budget on >= 90% of coordinates across 50
// random instances.
void criterion_variance() {
  constexpr int kTrials = 50;
  constexpr int kLevels = 4;
  constexpr int kDocs = 3;
  constexpr int kDraws = 1500;
  long long wins = 0, total = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng rng = Rng::from_keys({2024, 3, static_cast<std::uint64_t>(trial)});
    const Matrix logits = random_logits(kLevels, kDocs, rng);
    const std::vector<int> labels = random_labels(kDocs, 2, rng);
    const LossFn loss = [&](const ActionVector& z) {
      return training_loss(z, labels, 3);
    };

    std::vector<Welford> arsm_stats(logits.size());
    long long evals = 0;
    for (int s = 0; s < kDraws; ++s) {
      const DirichletDraw draw = sample_dirichlet_ones(kLevels, kDocs, rng);
      const PseudoActionSet actions = pseudo_actions(draw, logits);
      evals += actions.unique_count();
      const Matrix g =
          arsm_gradient(build_loss_matrix(actions, loss), draw);
      for (std::size_t i = 0; i < g.size(); ++i)
        arsm_stats[i].add(g.data()[i]);
    }

    const int budget =
        std::max(1, static_cast<int>((evals + kDraws / 2) / kDraws));
    std::vector<Welford> reinforce_stats(logits.size());
    for (int s = 0; s < kDraws; ++s) {
      const Matrix g = reinforce_gradient(logits, loss, budget, rng);
      for (std::size_t i = 0; i < g.size(); ++i)
        reinforce_stats[i].add(g.data()[i]);
    }

    for (std::size_t i = 0; i < arsm_stats.size(); ++i) {
      ++total;
      if (arsm_stats[i].variance() <= reinforce_stats[i].variance()) ++wins;
    }
  }
  const double fraction = static_cast<double>(wins) / total;
  char detail[96];
  std::snprintf(detail, sizeof(detail),
                "ARSM wins %.1f%% of %lld coordinates at equal budget",
                100.0 * fraction, total);
  report(3, fraction >= 0.9, "ARSM variance <= REINFORCE variance", detail);
}

// 4. Backprop vs central finite differences (step 1e-5) on 20 random
// nets with P,H,C <= 8: max relative error < 1e-6.
void criterion_backprop() {
  constexpr double kStep = 1e-5;
  double max_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = Rng::from_keys({2024, 4, static_cast<std::uint64_t>(trial)});
    const int input_dim = rng.uniform_int(1, 8);
    const int hidden_dim = rng.uniform_int(1, 8);
    const int levels = rng.uniform_int(1, 8);
    const int n = rng.uniform_int(1, 5);

    ScoringNet net = glorot_init(input_dim, hidden_dim, levels, rng.next());
    for (auto& b : net.b1) b = rng.uniform(-0.5, 0.5);
    for (auto& b : net.b2) b = rng.uniform(-0.5, 0.5);
    Matrix inputs(input_dim, n);
    for (std::size_t i = 0; i < inputs.size(); ++i)
      inputs.data()[i] = rng.uniform(-1.0, 1.0);
    Matrix upstream(levels, n);
    for (std::size_t i = 0; i < upstream.size(); ++i)
      upstream.data()[i] = rng.uniform(-1.0, 1.0);

    ForwardCache cache;
    forward(net, inputs, &cache);
    const ScoringNet grads = backward(net, cache, upstream);

    auto objective = [&]() {
      const Matrix logits = forward(net, inputs);
      double total = 0.0;
      for (int c = 0; c < levels; ++c)
        for (int j = 0; j < n; ++j) total += upstream(c, j) * logits(c, j);
      return total;
    };
    double* blocks[4] = {net.w1.data(), net.b1.data(), net.w2.data(),
                         net.b2.data()};
    const double* grad_blocks[4] = {grads.w1.data(), grads.b1.data(),
                                    grads.w2.data(), grads.b2.data()};
    const std::size_t sizes[4] = {net.w1.size(), net.b1.size(), net.w2.size(),
                                  net.b2.size()};
    for (int blk = 0; blk < 4; ++blk) {
      for (std::size_t i = 0; i < sizes[blk]; ++i) {
        const double saved = blocks[blk][i];
        blocks[blk][i] = saved + kStep;
        const double up = objective();
        blocks[blk][i] = saved - kStep;
        const double down = objective();
        blocks[blk][i] = saved;
        const double fd = (up - down) / (2.0 * kStep);
        const double g = grad_blocks[blk][i];
        max_rel = std::max(max_rel, std::abs(g - fd) / std::max({std::abs(g),
                                                                 std::abs(fd),
                                                                 1.0}));
      }
    }
  }
  char detail[64];
  std::snprintf(detail, sizeof(detail), "max relative error %.3e", max_rel);
  report(4, max_rel < 1e-6, "backward matches central finite differences",
         detail);
}

// 5. Sampling correctness: race frequencies over 1e5 draws pass a
// chi-square goodness-of-fit test against softmax(phi) at the 1% level
// for 10 random phi, C <= 5.
void criterion_sampling() {
  // upper 1% points of chi-square with df = C - 1
  const double critical[4] = {6.634896601, 9.210340372, 11.34486673,
                              13.27670414};
  constexpr int kDraws = 100000;
  double worst_ratio = 0.0;
  bool pass = true;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng = Rng::from_keys({2024, 5, static_cast<std::uint64_t>(trial)});
    const int levels = rng.uniform_int(2, 5);
    std::vector<double> phi(levels);
    for (auto& v : phi) v = rng.uniform(-1.5, 1.5);
    const auto p = softmax(phi);

    std::vector<long long> counts(levels, 0);
    std::vector<double> pi(levels);
    for (int s = 0; s < kDraws; ++s) {
      double sum = 0.0;
      for (int c = 0; c < levels; ++c) {
        pi[c] = rng.exponential();
        sum += pi[c];
      }
      for (int c = 0; c < levels; ++c) pi[c] /= sum;
      counts[race_argmin(pi, phi) - 1]++;
    }
    double chi2 = 0.0;
    for (int c = 0; c < levels; ++c) {
      const double expected = kDraws * p[c];
      const double diff = counts[c] - expected;
      chi2 += diff * diff / expected;
    }
    const double ratio = chi2 / critical[levels - 2];
    worst_ratio = std::max(worst_ratio, ratio);
    if (chi2 >= critical[levels - 2]) pass = false;
  }
  char detail[96];
  std::snprintf(detail, sizeof(detail),
                "worst chi2/critical ratio %.2f over 10 trials", worst_ratio);
  report(5, pass, "race sampling matches softmax (chi-square at 1%)", detail);
}

// 6. Metric oracles: ndcg_at and average_precision match an independent
// brute-force evaluation to 1e-12 on 1000 random cases and reproduce the
// hand-derived values to 6 decimals.
void criterion_metrics() {
  Rng rng = Rng::from_keys({2024, 6});
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(1, 8);
    std::vector<int> labels = random_labels(n, 3, rng);
    std::vector<double> scores(n);
    for (auto& s : scores)
      s = rng.uniform_int(0, 3) == 0 ? 0.5 : rng.uniform(0.0, 1.0);
    const Ranking ranking = rank_by_scores(scores);
    const int truncation = rng.uniform_int(1, 10);
    worst = std::max(worst,
                     std::abs(ndcg_at(ranking, labels, truncation) -
                              oracles::naive_ndcg(labels, scores, truncation)));
    worst = std::max(
        worst, std::abs(average_precision(ranking, labels).value -
                        oracles::naive_average_precision(labels, scores)));
  }

  // hand-derived pins
  const int y[] = {2, 1, 0};
  const double scores[] = {2.0, 1.0, 3.0};  // labels (0,2,1) by rank
  const double ndcg = ndcg_at(rank_by_scores(scores), y, 3);
  const int y_ap[] = {1, 0, 1};
  const double s_ap[] = {3.0, 2.0, 1.0};
  const double ap = average_precision(rank_by_scores(s_ap), y_ap).value;

  const bool pins = std::abs(ndcg - 0.659002) < 5e-7 &&
                    std::abs(ap - 0.833333) < 5e-7;
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "max |diff| %.2e over 1000 cases; NDCG %.6f, AP %.6f", worst,
                ndcg, ap);
  report(6, worst <= 1e-12 && pins,
         "metrics match the brute-force oracle and hand values", detail);
}

// 7. End-to-end synthetic convergence: 50 queries x 20 docs, features in
// R^10, labels from binning w.x into 3 grades; default config reaches
// validation NDCG@10 >= 0.95 within 500 epochs for >= 4 of 5 seeds.
void criterion_convergence() {
  const auto start = std::chrono::steady_clock::now();
  int reached = 0;
  double worst_best = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticConfig data_config;
    data_config.seed = 1000 + seed;
    FoldSplit fold = make_synthetic_fold(data_config);
    fold.train = normalize_per_query(std::move(fold.train));
    fold.validation = normalize_per_query(std::move(fold.validation));
    fold.test = normalize_per_query(std::move(fold.test));

    TrainConfig cfg;  // defaults: C=20, H=500, lr=1e-4, B=1, R=10
    cfg.epochs = 500;
    cfg.seed = seed;

    const TrainResult result = train_fold(fold, cfg);
    worst_best = std::min(worst_best, result.report.best_metric);
    if (result.report.best_metric >= 0.95) ++reached;
  }
  const double elapsed = seconds_since(start);
  char detail[120];
  std::snprintf(detail, sizeof(detail),
                "%d/5 seeds reached 0.95 (lowest best %.4f), %.1fs", reached,
                worst_best, elapsed);
  report(7, reached >= 4 && elapsed < 600.0,
         "default-config training converges on separable data", detail);
}

// 8. Determinism: identical seeds give bit-identical checkpoints, and the
// parallel path reproduces the serial one exactly.
void criterion_determinism() {
  SyntheticConfig data_config;
  data_config.feature_dim = 6;
  data_config.train_queries = 8;
  data_config.validation_queries = 4;
  data_config.test_queries = 4;
  data_config.docs_per_query = 8;
  data_config.seed = 77;
  const FoldSplit fold = make_synthetic_fold(data_config);

  TrainConfig cfg;
  cfg.levels = 10;
  cfg.hidden = 16;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seed = 5;

  const TrainResult a = train_fold(fold, cfg);
  const TrainResult b = train_fold(fold, cfg);
  TrainConfig parallel_cfg = cfg;
  parallel_cfg.threads = 4;
  const TrainResult c = train_fold(fold, parallel_cfg);

  CheckpointMeta meta;
  meta.config_hash = config_hash(cfg);
  const std::string bytes_a = serialize_checkpoint(a.net, a.adam, meta);
  const std::string bytes_b = serialize_checkpoint(b.net, b.adam, meta);
  const std::string bytes_c = serialize_checkpoint(c.net, c.adam, meta);

  const bool serial_identical = bytes_a == bytes_b;
  const bool parallel_identical = bytes_a == bytes_c;
  char detail[96];
  std::snprintf(detail, sizeof(detail),
                "serial repeat %s, 4-thread run %s (checkpoint bytes)",
                serial_identical ? "identical" : "differs",
                parallel_identical ? "identical" : "differs");
  report(8, serial_identical && parallel_identical,
         "seeded runs are bit-identical, parallel == serial", detail);
}

}  // namespace

int main() {
  criterion_unbiasedness();
  criterion_zero_sum();
  criterion_variance();
  criterion_backprop();
  criterion_sampling();
  criterion_metrics();
  criterion_convergence();
  criterion_determinism();
  std::printf(
      "criterion 9 [SKIP]: benchmark-dataset reproduction is an offline "
      "target (requires externally downloaded data and hours of compute)\n");
  if (failures == 0)
    std::printf("acceptance: all desk-scale criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures;
}
