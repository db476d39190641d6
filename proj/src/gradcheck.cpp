#include "l2r/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "l2r/arsm.hpp"
#include "l2r/metrics.hpp"
#include "l2r/rng.hpp"
#include "l2r/scoring_net.hpp"

namespace l2r {

namespace {

constexpr std::uint64_t kBackpropTag = 101;
constexpr std::uint64_t kUnbiasTag = 102;
constexpr std::uint64_t kVarianceTag = 103;
constexpr std::uint64_t kBenchTag = 104;

struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double stderr_of_mean() const {
    return n > 0 ? std::sqrt(variance() / n) : 0.0;
  }
};

double objective(const ScoringNet& net, const Matrix& inputs,
                 const Matrix& weights) {
  const Matrix logits = forward(net, inputs);
  double total = 0.0;
  for (int c = 0; c < logits.rows(); ++c)
    for (int j = 0; j < logits.cols(); ++j)
      total += weights(c, j) * logits(c, j);
  return total;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

struct BlockRef {
  const char* name;
  double* data;
  std::size_t size;
  const double* grad;
};

void backprop_suite(const GradcheckOptions& options, GradcheckReport& report) {
  constexpr double step = 1e-5;
  for (int i = 0; i < options.backprop_nets; ++i) {
    Rng rng = Rng::from_keys({options.seed, kBackpropTag,
                              static_cast<std::uint64_t>(i)});
    const int input_dim = rng.uniform_int(1, 8);
    const int hidden_dim = rng.uniform_int(1, 8);
    const int levels = rng.uniform_int(1, 8);
    const int n = rng.uniform_int(1, 5);

    ScoringNet net = glorot_init(input_dim, hidden_dim, levels, rng.next());
    for (auto& b : net.b1) b = rng.uniform(-0.5, 0.5);
    for (auto& b : net.b2) b = rng.uniform(-0.5, 0.5);

    Matrix inputs(input_dim, n);
    for (std::size_t k = 0; k < inputs.size(); ++k)
      inputs.data()[k] = rng.uniform(-1.0, 1.0);
    Matrix weights(levels, n);
    for (std::size_t k = 0; k < weights.size(); ++k)
      weights.data()[k] = rng.uniform(-1.0, 1.0);

    ForwardCache cache;
    forward(net, inputs, &cache);
    const ScoringNet grads = backward(net, cache, weights);

    BlockRef blocks[4] = {
        {"w1", net.w1.data(), net.w1.size(), grads.w1.data()},
        {"b1", net.b1.data(), net.b1.size(), grads.b1.data()},
        {"w2", net.w2.data(), net.w2.size(), grads.w2.data()},
        {"b2", net.b2.data(), net.b2.size(), grads.b2.data()},
    };
    for (const auto& block : blocks) {
      for (std::size_t k = 0; k < block.size; ++k) {
        const double saved = block.data[k];
        block.data[k] = saved + step;
        const double up = objective(net, inputs, weights);
        block.data[k] = saved - step;
        const double down = objective(net, inputs, weights);
        block.data[k] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double rel = relative_error(block.grad[k], fd);
        if (rel > report.backprop_max_rel) {
          report.backprop_max_rel = rel;
          char buf[128];
          std::snprintf(buf, sizeof(buf),
                        "net %d %s[%zu]: backward=%.12g fd=%.12g", i,
                        block.name, k, block.grad[k], fd);
          report.backprop_worst = buf;
        }
      }
    }
  }
  report.backprop_pass = report.backprop_max_rel < 1e-6;
}

struct Instance {
  Matrix logits;
  std::vector<int> labels;
};

Instance random_instance(Rng& rng, int levels, int n, int max_grade) {
  Instance inst;
  inst.logits = Matrix(levels, n);
  for (std::size_t k = 0; k < inst.logits.size(); ++k)
    inst.logits.data()[k] = rng.uniform(-1.0, 1.0);
  inst.labels.resize(n);
  for (auto& y : inst.labels) y = rng.uniform_int(0, max_grade);
  return inst;
}

void unbias_suite(const GradcheckOptions& options, GradcheckReport& report) {
  constexpr int levels = 4;
  constexpr int n = 3;
  constexpr int truncation = 3;
  for (int i = 0; i < options.unbias_instances; ++i) {
    Rng rng =
        Rng::from_keys({options.seed, kUnbiasTag, static_cast<std::uint64_t>(i)});
    const Instance inst = random_instance(rng, levels, n, 2);
    const LossFn loss = [&](const ActionVector& z) {
      return training_loss(z, inst.labels, truncation);
    };
    const Matrix exact = exact_gradient_enumeration(inst.logits, loss);

    std::vector<Welford> stats(static_cast<std::size_t>(levels) * n);
    for (int s = 0; s < options.unbias_draws; ++s) {
      const DirichletDraw draw = sample_dirichlet_ones(levels, n, rng);
      const PseudoActionSet actions = pseudo_actions(draw, inst.logits);
      const LossMatrix loss_matrix = build_loss_matrix(actions, loss);
      const Matrix g = arsm_gradient(loss_matrix, draw);
      for (std::size_t k = 0; k < g.size(); ++k) stats[k].add(g.data()[k]);
    }

    for (int c = 0; c < levels; ++c) {
      for (int j = 0; j < n; ++j) {
        const auto& w = stats[static_cast<std::size_t>(c) * n + j];
        const double diff = std::abs(w.mean - exact(c, j));
        const double se = w.stderr_of_mean();
        const double z = se > 0.0 ? diff / se : (diff <= 1e-12 ? 0.0 : 1e9);
        if (z > report.unbias_max_z) {
          report.unbias_max_z = z;
          char buf[128];
          std::snprintf(buf, sizeof(buf),
                        "instance %d coord (%d,%d): mean=%.8g exact=%.8g", i,
                        c + 1, j, w.mean, exact(c, j));
          report.unbias_worst = buf;
        }
      }
    }
  }
  report.unbias_pass = report.unbias_max_z < 3.0;
}

void variance_suite(const GradcheckOptions& options, GradcheckReport& report) {
  constexpr int levels = 4;
  constexpr int n = 3;
  constexpr int truncation = 3;
  constexpr int draws = 1000;

  long long wins = 0;
  long long total = 0;
  for (int t = 0; t < options.variance_trials; ++t) {
    Rng rng = Rng::from_keys(
        {options.seed, kVarianceTag, static_cast<std::uint64_t>(t)});
    const Instance inst = random_instance(rng, levels, n, 2);
    const LossFn loss = [&](const ActionVector& z) {
      return training_loss(z, inst.labels, truncation);
    };

    std::vector<Welford> arsm_stats(static_cast<std::size_t>(levels) * n);
    long long loss_evals = 0;
    for (int s = 0; s < draws; ++s) {
      const DirichletDraw draw = sample_dirichlet_ones(levels, n, rng);
      const PseudoActionSet actions = pseudo_actions(draw, inst.logits);
      loss_evals += actions.unique_count();
      const LossMatrix loss_matrix = build_loss_matrix(actions, loss);
      const Matrix g = arsm_gradient(loss_matrix, draw);
      for (std::size_t k = 0; k < g.size(); ++k) arsm_stats[k].add(g.data()[k]);
    }

    // REINFORCE spends the same number of loss evaluations per estimate
    const int budget =
        std::max(1, static_cast<int>((loss_evals + draws / 2) / draws));
    std::vector<Welford> reinforce_stats(static_cast<std::size_t>(levels) * n);
    for (int s = 0; s < draws; ++s) {
      const Matrix g = reinforce_gradient(inst.logits, loss, budget, rng);
      for (std::size_t k = 0; k < g.size(); ++k)
        reinforce_stats[k].add(g.data()[k]);
    }

    for (std::size_t k = 0; k < arsm_stats.size(); ++k) {
      ++total;
      if (arsm_stats[k].variance() <= reinforce_stats[k].variance()) ++wins;
    }
  }
  report.variance_fraction =
      total > 0 ? static_cast<double>(wins) / static_cast<double>(total) : 0.0;
  report.variance_pass = report.variance_fraction >= 0.9;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  backprop_suite(options, report);
  unbias_suite(options, report);
  variance_suite(options, report);
  return report;
}

std::string GradcheckReport::to_text() const {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "backprop: max relative error %.3e (tolerance 1e-6) [%s]\n",
                backprop_max_rel, backprop_pass ? "PASS" : "FAIL");
  out += buf;
  if (!backprop_pass) out += "  worst: " + backprop_worst + "\n";
  std::snprintf(buf, sizeof(buf),
                "unbiasedness: max |z-score| %.3f (tolerance 3) [%s]\n",
                unbias_max_z, unbias_pass ? "PASS" : "FAIL");
  out += buf;
  if (!unbias_pass) out += "  worst: " + unbias_worst + "\n";
  std::snprintf(buf, sizeof(buf),
                "variance: ARSM <= REINFORCE on %.1f%% of coordinates "
                "(threshold 90%%) [%s]\n",
                100.0 * variance_fraction, variance_pass ? "PASS" : "FAIL");
  out += buf;
  out += pass() ? "gradcheck: PASS\n" : "gradcheck: FAIL\n";
  return out;
}

std::string estimator_bench_tsv(int levels, int num_samples,
                                std::uint64_t seed, bool random_reward) {
  if (levels < 2) throw std::invalid_argument("bench needs levels >= 2");
  if (num_samples < 2) throw std::invalid_argument("bench needs samples >= 2");

  Rng setup = Rng::from_keys({seed, kBenchTag, 0});
  std::vector<double> phi(levels);
  for (auto& v : phi) v = setup.uniform(-1.0, 1.0);
  std::vector<double> reward(levels, 0.0);
  if (random_reward)
    for (auto& v : reward) v = setup.uniform01();
  else
    reward[levels - 1] = 1.0;  // indicator of the top category

  Matrix logits(levels, 1);
  for (int c = 0; c < levels; ++c) logits(c, 0) = phi[c];
  const LossFn loss = [&](const ActionVector& z) { return reward[z[0] - 1]; };
  const Matrix exact = exact_gradient_enumeration(logits, loss);

  struct Row {
    const char* name;
    std::vector<Welford> stats;
  };
  std::vector<Row> rows = {{"ar", {}}, {"ars", {}}, {"arsm", {}},
                           {"reinforce", {}}};
  for (auto& row : rows)
    row.stats.resize(static_cast<std::size_t>(levels));

  // every estimator is run in single-draw mode so the per-sample spread is
  // observable; each stream is keyed separately
  Rng ar_rng = Rng::from_keys({seed, kBenchTag, 1});
  Rng ars_rng = Rng::from_keys({seed, kBenchTag, 2});
  Rng arsm_rng = Rng::from_keys({seed, kBenchTag, 3});
  Rng reinforce_rng = Rng::from_keys({seed, kBenchTag, 4});
  for (int s = 0; s < num_samples; ++s) {
    const auto ar = ar_gradient_univariate(phi, reward, 1, ar_rng);
    const auto ars = ars_gradient_univariate(phi, reward, 1, 1, ars_rng);
    const DirichletDraw draw = sample_dirichlet_ones(levels, 1, arsm_rng);
    const PseudoActionSet actions = pseudo_actions(draw, logits);
    const Matrix arsm =
        arsm_gradient(build_loss_matrix(actions, loss), draw);
    const Matrix reinforce = reinforce_gradient(logits, loss, 1, reinforce_rng);
    for (int c = 0; c < levels; ++c) {
      rows[0].stats[c].add(ar[c]);
      rows[1].stats[c].add(ars[c]);
      rows[2].stats[c].add(arsm(c, 0));
      rows[3].stats[c].add(reinforce(c, 0));
    }
  }

  std::string out = "estimator\tcoordinate\tmean\tvariance\texact\tstderr\n";
  char buf[256];
  for (const auto& row : rows) {
    for (int c = 0; c < levels; ++c) {
      const auto& w = row.stats[c];
      std::snprintf(buf, sizeof(buf), "%s\t%d\t%.10g\t%.10g\t%.10g\t%.10g\n",
                    row.name, c + 1, w.mean, w.variance(), exact(c, 0),
                    w.stderr_of_mean());
      out += buf;
    }
  }
  return out;
}

}  // namespace l2r
