#include "l2r/arsm.hpp"

#include <cmath>
#include <cstring>
#include <utility>
#include <stdexcept>
#include <unordered_map>

#include "l2r/scoring_net.hpp"

namespace l2r {

namespace {

struct ActionVectorHash {
  std::size_t operator()(const ActionVector& v) const {
    return fnv1a64(v.data(), v.size() * sizeof(int));
  }
};

// lexicographic (value, index) minimum reproduces argmin with
// smallest-index tie-breaking for any input, ties included
inline bool better(double value, int index, double best_value,
                   int best_index) {
  return value < best_value || (value == best_value && index < best_index);
}

}  // namespace

DirichletDraw sample_dirichlet_ones(int levels, int n, Rng& rng) {
  if (levels < 2)
    throw std::invalid_argument("Dirichlet draw needs at least 2 levels");
  if (n < 1) throw std::invalid_argument("Dirichlet draw needs n >= 1");
  DirichletDraw draw;
  draw.pi = Matrix(levels, n);
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int c = 0; c < levels; ++c) {
      const double e = rng.exponential();
      draw.pi(c, j) = e;
      sum += e;
    }
    for (int c = 0; c < levels; ++c) draw.pi(c, j) /= sum;
  }
  return draw;
}

int race_argmin(std::span<const double> pi_col,
                std::span<const double> phi_col) {
  if (pi_col.size() != phi_col.size() || pi_col.empty())
    throw std::invalid_argument("race_argmin size mismatch");
  int best = 0;
  double best_value = std::log(pi_col[0]) - phi_col[0];
  for (int k = 1; k < static_cast<int>(pi_col.size()); ++k) {
    const double value = std::log(pi_col[k]) - phi_col[k];
    if (value < best_value) {
      best_value = value;
      best = k;
    }
  }
  return best + 1;
}

std::vector<double> swap_coords(std::vector<double> values, int c, int k) {
  const int size = static_cast<int>(values.size());
  if (c < 1 || c > size || k < 1 || k > size)
    throw std::out_of_range("swap index out of range");
  std::swap(values[c - 1], values[k - 1]);
  return values;
}

PseudoActionSet pseudo_actions(const DirichletDraw& draw,
                               const Matrix& logits) {
  const int levels = draw.pi.rows();
  const int n = draw.pi.cols();
  if (logits.rows() != levels || logits.cols() != n)
    throw std::invalid_argument("pi and logits shapes disagree");

  // race keys a(k,j) = ln pi(k,j) - phi(k,j), plus the three smallest
  // entries per document: a swap touches only two coordinates, so the
  // swapped argmin is decided among those two and the best untouched key
  Matrix log_pi(levels, n);
  Matrix keys(levels, n);
  std::vector<int> top1(n), top2(n, -1), top3(n, -1);
  for (int j = 0; j < n; ++j) {
    int m1 = -1, m2 = -1, m3 = -1;
    double v1 = 0.0, v2 = 0.0, v3 = 0.0;
    for (int k = 0; k < levels; ++k) {
      log_pi(k, j) = std::log(draw.pi(k, j));
      const double value = log_pi(k, j) - logits(k, j);
      keys(k, j) = value;
      if (m1 < 0 || better(value, k, v1, m1)) {
        v3 = v2; m3 = m2;
        v2 = v1; m2 = m1;
        v1 = value; m1 = k;
      } else if (m2 < 0 || better(value, k, v2, m2)) {
        v3 = v2; m3 = m2;
        v2 = value; m2 = k;
      } else if (m3 < 0 || better(value, k, v3, m3)) {
        v3 = value; m3 = k;
      }
    }
    top1[j] = m1;
    top2[j] = m2;
    top3[j] = m3;
  }

  PseudoActionSet set;
  set.levels = levels;
  set.num_docs = n;
  set.pair_action.assign(static_cast<std::size_t>(levels) * levels, 0);

  ActionVector true_action(n);
  for (int j = 0; j < n; ++j) true_action[j] = top1[j] + 1;

  std::unordered_map<ActionVector, int, ActionVectorHash> ids;
  set.actions.push_back(true_action);
  ids.emplace(std::move(true_action), 0);

  ActionVector candidate(n);
  for (int c = 1; c < levels; ++c) {      // 0-based pair (c, k), c > k
    for (int k = 0; k < c; ++k) {
      for (int j = 0; j < n; ++j) {
        // swapped keys at the two touched coordinates
        const double vk = log_pi(c, j) - logits(k, j);
        const double vc = log_pi(k, j) - logits(c, j);
        int best = k;
        double best_value = vk;
        if (better(vc, c, best_value, best)) {
          best_value = vc;
          best = c;
        }
        int other = top1[j];
        if (other == c || other == k) other = top2[j];
        if (other == c || other == k) other = top3[j];
        if (other >= 0 && other != c && other != k &&
            better(keys(other, j), other, best_value, best))
          best = other;
        candidate[j] = best + 1;
      }
      auto [it, inserted] =
          ids.try_emplace(candidate, static_cast<int>(set.actions.size()));
      if (inserted) set.actions.push_back(candidate);
      const int id = it->second;
      set.pair_action[static_cast<std::size_t>(c) * levels + k] = id;
      set.pair_action[static_cast<std::size_t>(k) * levels + c] = id;
    }
  }
  return set;
}

LossMatrix build_loss_matrix(const PseudoActionSet& actions,
                             const LossFn& loss) {
  const int levels = actions.levels;
  std::vector<double> values(actions.actions.size());
  for (std::size_t i = 0; i < actions.actions.size(); ++i)
    values[i] = loss(actions.actions[i]);

  LossMatrix out;
  out.values = Matrix(levels, levels);
  for (int c = 0; c < levels; ++c)
    for (int k = 0; k < levels; ++k)
      out.values(c, k) =
          values[actions.pair_action[static_cast<std::size_t>(c) * levels + k]];

  out.col_means.assign(levels, 0.0);
  for (int k = 0; k < levels; ++k) {
    double sum = 0.0;
    for (int c = 0; c < levels; ++c) sum += out.values(c, k);
    out.col_means[k] = sum / levels;
  }
  return out;
}

Matrix arsm_gradient(const LossMatrix& loss, const DirichletDraw& draw) {
  const int levels = draw.pi.rows();
  const int n = draw.pi.cols();
  if (loss.values.rows() != levels || loss.values.cols() != levels)
    throw std::invalid_argument("loss matrix and draw shapes disagree");

  // centered(c,k) = L(c,k) - mean_m L(m,k), written as a mean of pairwise
  // differences: identical entries cancel exactly instead of leaving
  // rounding residue, so degenerate draws give a bitwise-zero gradient
  Matrix centered(levels, levels);
  for (int c = 0; c < levels; ++c) {
    for (int k = 0; k < levels; ++k) {
      double sum = 0.0;
      for (int m = 0; m < levels; ++m)
        sum += loss.values(c, k) - loss.values(m, k);
      centered(c, k) = sum / levels;
    }
  }

  const double inv_levels = 1.0 / levels;
  Matrix g(levels, n);
  for (int c = 0; c < levels; ++c) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < levels; ++k)
        acc += centered(c, k) * (inv_levels - draw.pi(k, j));
      g(c, j) = acc;
    }
  }
  return g;
}

std::vector<double> ar_gradient_univariate(std::span<const double> phi,
                                           std::span<const double> reward,
                                           int num_samples, Rng& rng) {
  const int levels = static_cast<int>(phi.size());
  if (static_cast<int>(reward.size()) != levels)
    throw std::invalid_argument("reward table size mismatch");
  if (num_samples < 1) throw std::invalid_argument("need num_samples >= 1");

  std::vector<double> acc(levels, 0.0);
  std::vector<double> pi(levels);
  for (int s = 0; s < num_samples; ++s) {
    double sum = 0.0;
    for (int c = 0; c < levels; ++c) {
      pi[c] = rng.exponential();
      sum += pi[c];
    }
    for (int c = 0; c < levels; ++c) pi[c] /= sum;
    const int z = race_argmin(pi, phi);
    const double f = reward[z - 1];
    for (int c = 0; c < levels; ++c) acc[c] += f * (1.0 - levels * pi[c]);
  }
  for (auto& v : acc) v /= num_samples;
  return acc;
}

std::vector<double> ars_gradient_univariate(std::span<const double> phi,
                                            std::span<const double> reward,
                                            int reference, int num_samples,
                                            Rng& rng) {
  const int levels = static_cast<int>(phi.size());
  if (static_cast<int>(reward.size()) != levels)
    throw std::invalid_argument("reward table size mismatch");
  if (reference < 1 || reference > levels)
    throw std::invalid_argument("reference category out of range");
  if (num_samples < 1) throw std::invalid_argument("need num_samples >= 1");

  std::vector<double> acc(levels, 0.0);
  std::vector<double> pi(levels);
  std::vector<double> swap_reward(levels);  // f(z^{m<->k}) for m = 1..C
  for (int s = 0; s < num_samples; ++s) {
    double sum = 0.0;
    for (int c = 0; c < levels; ++c) {
      pi[c] = rng.exponential();
      sum += pi[c];
    }
    for (int c = 0; c < levels; ++c) pi[c] /= sum;

    for (int m = 1; m <= levels; ++m) {
      const auto swapped = swap_coords(pi, m, reference);
      swap_reward[m - 1] = reward[race_argmin(swapped, phi) - 1];
    }
    const double coeff = 1.0 - levels * pi[reference - 1];
    for (int c = 0; c < levels; ++c) {
      double delta = 0.0;  // pairwise differences: exact zero for constant f
      for (int m = 0; m < levels; ++m)
        delta += swap_reward[c] - swap_reward[m];
      acc[c] += (delta / levels) * coeff;
    }
  }
  for (auto& v : acc) v /= num_samples;
  return acc;
}

Matrix reinforce_gradient(const Matrix& logits, const LossFn& loss,
                          int num_samples, Rng& rng) {
  const int levels = logits.rows();
  const int n = logits.cols();
  if (num_samples < 1) throw std::invalid_argument("need num_samples >= 1");

  Matrix probs(levels, n);
  for (int j = 0; j < n; ++j) {
    const auto p = softmax_column(logits, j);
    for (int c = 0; c < levels; ++c) probs(c, j) = p[c];
  }

  Matrix acc(levels, n);
  ActionVector z(n);
  for (int s = 0; s < num_samples; ++s) {
    for (int j = 0; j < n; ++j) {
      const double u = rng.uniform01();
      double cum = 0.0;
      int pick = levels;
      for (int c = 0; c < levels; ++c) {
        cum += probs(c, j);
        if (u <= cum) {
          pick = c + 1;
          break;
        }
      }
      z[j] = pick;
    }
    const double value = loss(z);
    if (value != 0.0) {
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < levels; ++c)
          acc(c, j) += value * ((z[j] == c + 1 ? 1.0 : 0.0) - probs(c, j));
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] /= num_samples;
  return acc;
}

Matrix exact_gradient_enumeration(const Matrix& logits, const LossFn& loss) {
  const int levels = logits.rows();
  const int n = logits.cols();
  const double count = std::pow(static_cast<double>(levels), n);
  if (count > 1e6 + 0.5)
    throw std::invalid_argument("enumeration too large: C^n exceeds 1e6");

  Matrix probs(levels, n);
  for (int j = 0; j < n; ++j) {
    const auto p = softmax_column(logits, j);
    for (int c = 0; c < levels; ++c) probs(c, j) = p[c];
  }

  Matrix g(levels, n);
  ActionVector z(n, 1);
  for (;;) {
    double prob = 1.0;
    for (int j = 0; j < n; ++j) prob *= probs(z[j] - 1, j);
    const double value = loss(z);
    if (value != 0.0 && prob != 0.0) {
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < levels; ++c)
          g(c, j) += value * prob * ((z[j] == c + 1 ? 1.0 : 0.0) - probs(c, j));
    }
    int j = 0;
    while (j < n && z[j] == levels) {
      z[j] = 1;
      ++j;
    }
    if (j == n) break;
    ++z[j];
  }
  return g;
}

}  // namespace l2r
