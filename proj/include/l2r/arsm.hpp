#ifndef L2R_ARSM_HPP_
#define L2R_ARSM_HPP_

#include <functional>
#include <span>
#include <vector>

#include "l2r/matrix.hpp"
#include "l2r/rng.hpp"

namespace l2r {

// One shared draw for a query: pi is levels x n with each column an
// independent Dirichlet(1,...,1) sample on the simplex.
struct DirichletDraw {
  Matrix pi;
};

DirichletDraw sample_dirichlet_ones(int levels, int n, Rng& rng);

// Exponential-race sample: argmin_k (ln pi_k - phi_k), returned 1-based.
// With pi ~ Dirichlet(1_C) this is distributed as Cat(softmax(phi)).
// Ties (measure zero) break toward the smallest index.
int race_argmin(std::span<const double> pi_col, std::span<const double> phi_col);

// Exchange coordinates c and k (1-based) of a simplex vector.
std::vector<double> swap_coords(std::vector<double> values, int c, int k);

// Predicted categories for all documents of one query, values in 1..C.
using ActionVector = std::vector<int>;

// All swap replicas of the race outcome for one draw. Re-running the race
// after swapping coordinates (c,k) of every document's pi usually leaves
// the outcome unchanged, so identical vectors are stored once and pairs
// map to a shared id; actions[0] is the unswapped (true) outcome.
struct PseudoActionSet {
  int levels = 0;
  int num_docs = 0;
  std::vector<ActionVector> actions;
  std::vector<int> pair_action;  // levels*levels ids, symmetric, diagonal 0

  int unique_count() const { return static_cast<int>(actions.size()); }
  const ActionVector& true_action() const { return actions.front(); }
  int action_id(int c, int k) const {  // 1-based pair
    return pair_action[static_cast<std::size_t>(c - 1) * levels + (k - 1)];
  }
  const ActionVector& action(int c, int k) const {
    return actions[action_id(c, k)];
  }
};

PseudoActionSet pseudo_actions(const DirichletDraw& draw, const Matrix& logits);

using LossFn = std::function<double(const ActionVector&)>;

// L(c,k) = loss of the (c,k) swap replica; symmetric with a constant
// diagonal equal to the true action's loss. The loss is evaluated once
// per distinct action vector.
struct LossMatrix {
  Matrix values;
  std::vector<double> col_means;  // (1/C) column sums

  double true_loss() const { return values(0, 0); }
};

LossMatrix build_loss_matrix(const PseudoActionSet& actions, const LossFn& loss);

// Gradient of the expected loss with respect to the logits:
//   g(c,j) = sum_k (L(c,k) - mean_m L(m,k)) * (1/C - pi(k,j)).
// The centering is evaluated through pairwise differences, so a constant
// loss matrix produces an exactly-zero gradient and each column sums to
// zero up to rounding.
Matrix arsm_gradient(const LossMatrix& loss, const DirichletDraw& draw);

// Test-scale single-variable estimators. `reward` maps category c (1-based)
// to reward[c-1].
std::vector<double> ar_gradient_univariate(std::span<const double> phi,
                                           std::span<const double> reward,
                                           int num_samples, Rng& rng);
std::vector<double> ars_gradient_univariate(std::span<const double> phi,
                                            std::span<const double> reward,
                                            int reference, int num_samples,
                                            Rng& rng);

// Plain score-function estimator (no baseline), kept as a variance
// reference: mean over samples of loss(z) * d log p(z) / d logits with z
// drawn from the model.
Matrix reinforce_gradient(const Matrix& logits, const LossFn& loss,
                          int num_samples, Rng& rng);

// Exact gradient by summing loss(z) * grad p(z) over all C^n action
// vectors. Guarded to C^n <= 1e6.
Matrix exact_gradient_enumeration(const Matrix& logits, const LossFn& loss);

}  // namespace l2r

#endif  // L2R_ARSM_HPP_
