#ifndef L2R_SCORING_NET_HPP_
#define L2R_SCORING_NET_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "l2r/letor.hpp"
#include "l2r/matrix.hpp"

namespace l2r {

// One-hidden-layer scorer: logits = w2 * tanh(w1 * x + b1) + b2, mapping a
// feature vector to one logit per relevance level. The same struct shape
// carries parameter gradients.
struct ScoringNet {
  Matrix w1;                // hidden x input
  std::vector<double> b1;   // hidden
  Matrix w2;                // levels x hidden
  std::vector<double> b2;   // levels

  int input_dim() const { return w1.cols(); }
  int hidden_dim() const { return w1.rows(); }
  int num_levels() const { return w2.rows(); }

  bool same_shape(const ScoringNet& o) const;
  bool all_finite() const;
  bool all_zero() const;

  bool operator==(const ScoringNet&) const = default;
};

ScoringNet make_net(int input_dim, int hidden_dim, int num_levels);
ScoringNet zeros_like(const ScoringNet& net);

// Uniform(-b, b) weights with b = sqrt(6 / (fan_in + fan_out)) per layer;
// zero biases. Deterministic in the seed.
ScoringNet glorot_init(int input_dim, int hidden_dim, int num_levels,
                       std::uint64_t seed);

struct ForwardCache {
  Matrix inputs;  // input x n
  Matrix hidden;  // hidden x n, tanh activations
  bool valid = false;
};

Matrix features_matrix(const QueryGroup& group, int feature_dim);

// Returns levels x n logits, one column per document. Pass a cache to
// enable backward().
Matrix forward(const ScoringNet& net, const Matrix& inputs,
               ForwardCache* cache = nullptr);
Matrix forward(const ScoringNet& net, const QueryGroup& group,
               ForwardCache* cache = nullptr);

// Exact parameter gradients of sum_{j,c} dloss_dlogits(c,j) * logits(c,j).
ScoringNet backward(const ScoringNet& net, const ForwardCache& cache,
                    const Matrix& dloss_dlogits);

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> softmax_column(const Matrix& logits, int col);

// Prediction rule: sum_c c * p_c over levels c = 1..C.
double expected_score(std::span<const double> probabilities);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ScoringNet m;  // first moments
  ScoringNet v;  // second moments
  std::int64_t step = 0;
  AdamConfig config;
};

AdamState make_adam_state(const ScoringNet& like, const AdamConfig& config);

// Bias-corrected Adam descent step on the supplied loss gradients.
void adam_step(ScoringNet& net, const ScoringNet& grads, AdamState& state);

}  // namespace l2r

#endif  // L2R_SCORING_NET_HPP_
