#ifndef L2R_GRADCHECK_HPP_
#define L2R_GRADCHECK_HPP_

#include <cstdint>
#include <string>

namespace l2r {

struct GradcheckOptions {
  std::uint64_t seed = 3;
  int backprop_nets = 20;      // random nets for the finite-difference suite
  int unbias_instances = 5;    // instances for the unbiasedness suite
  int unbias_draws = 50000;    // Dirichlet draws per instance
  int variance_trials = 50;    // instances for the variance comparison
};

struct GradcheckReport {
  double backprop_max_rel = 0.0;
  std::string backprop_worst;
  bool backprop_pass = false;

  double unbias_max_z = 0.0;
  std::string unbias_worst;
  bool unbias_pass = false;

  double variance_fraction = 0.0;  // coordinates where ARSM variance <= REINFORCE
  bool variance_pass = false;

  bool pass() const { return backprop_pass && unbias_pass && variance_pass; }
  std::string to_text() const;
};

// Checks backward() against central finite differences, the ARSM gradient
// against exact enumeration (3-sigma per coordinate), and per-coordinate
// variance against plain REINFORCE at an equal loss-evaluation budget.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

// Univariate estimator comparison table:
// estimator  coordinate  mean  variance  exact  stderr
// Estimators: ar, ars (reference 1), arsm, reinforce. With
// random_reward = false the reward is the indicator of the top category.
std::string estimator_bench_tsv(int levels, int num_samples,
                                std::uint64_t seed, bool random_reward);

}  // namespace l2r

#endif  // L2R_GRADCHECK_HPP_
