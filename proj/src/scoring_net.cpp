#include "l2r/scoring_net.hpp"

#include <cmath>
#include <stdexcept>

#include "l2r/rng.hpp"

namespace l2r {

namespace {

bool block_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

bool block_zero(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (p[i] != 0.0) return false;
  return true;
}

}  // namespace

bool ScoringNet::same_shape(const ScoringNet& o) const {
  return w1.same_shape(o.w1) && b1.size() == o.b1.size() &&
         w2.same_shape(o.w2) && b2.size() == o.b2.size();
}

bool ScoringNet::all_finite() const {
  return block_finite(w1.data(), w1.size()) &&
         block_finite(b1.data(), b1.size()) &&
         block_finite(w2.data(), w2.size()) &&
         block_finite(b2.data(), b2.size());
}

bool ScoringNet::all_zero() const {
  return block_zero(w1.data(), w1.size()) && block_zero(b1.data(), b1.size()) &&
         block_zero(w2.data(), w2.size()) && block_zero(b2.data(), b2.size());
}

ScoringNet make_net(int input_dim, int hidden_dim, int num_levels) {
  if (input_dim < 1 || hidden_dim < 1 || num_levels < 1)
    throw std::invalid_argument("network dimensions must be >= 1");
  ScoringNet net;
  net.w1 = Matrix(hidden_dim, input_dim);
  net.b1.assign(hidden_dim, 0.0);
  net.w2 = Matrix(num_levels, hidden_dim);
  net.b2.assign(num_levels, 0.0);
  return net;
}

ScoringNet zeros_like(const ScoringNet& net) {
  return make_net(net.input_dim(), net.hidden_dim(), net.num_levels());
}

ScoringNet glorot_init(int input_dim, int hidden_dim, int num_levels,
                       std::uint64_t seed) {
  ScoringNet net = make_net(input_dim, hidden_dim, num_levels);
  Rng rng = Rng::from_keys({seed, stream::kInit});
  const double bound1 = std::sqrt(6.0 / (input_dim + hidden_dim));
  for (std::size_t i = 0; i < net.w1.size(); ++i)
    net.w1.data()[i] = rng.uniform(-bound1, bound1);
  const double bound2 = std::sqrt(6.0 / (hidden_dim + num_levels));
  for (std::size_t i = 0; i < net.w2.size(); ++i)
    net.w2.data()[i] = rng.uniform(-bound2, bound2);
  return net;
}

Matrix features_matrix(const QueryGroup& group, int feature_dim) {
  Matrix x(feature_dim, group.size());
  for (int j = 0; j < group.size(); ++j) {
    const auto& f = group.documents[j].features;
    if (static_cast<int>(f.size()) != feature_dim)
      throw std::invalid_argument(
          "document feature length " + std::to_string(f.size()) +
          " does not match feature_dim " + std::to_string(feature_dim));
    for (int d = 0; d < feature_dim; ++d) x(d, j) = f[d];
  }
  return x;
}

Matrix forward(const ScoringNet& net, const Matrix& inputs,
               ForwardCache* cache) {
  const int input_dim = net.input_dim();
  const int hidden_dim = net.hidden_dim();
  const int levels = net.num_levels();
  if (inputs.rows() != input_dim)
    throw std::invalid_argument("input dim " + std::to_string(inputs.rows()) +
                                " does not match network input dim " +
                                std::to_string(input_dim));
  const int n = inputs.cols();

  Matrix hidden(hidden_dim, n);
  for (int h = 0; h < hidden_dim; ++h) {
    for (int j = 0; j < n; ++j) {
      double acc = net.b1[h];
      for (int d = 0; d < input_dim; ++d) acc += net.w1(h, d) * inputs(d, j);
      hidden(h, j) = std::tanh(acc);
    }
  }

  Matrix logits(levels, n);
  for (int c = 0; c < levels; ++c) {
    for (int j = 0; j < n; ++j) {
      double acc = net.b2[c];
      for (int h = 0; h < hidden_dim; ++h) acc += net.w2(c, h) * hidden(h, j);
      logits(c, j) = acc;
    }
  }

  if (cache != nullptr) {
    cache->inputs = inputs;
    cache->hidden = std::move(hidden);
    cache->valid = true;
  }
  return logits;
}

Matrix forward(const ScoringNet& net, const QueryGroup& group,
               ForwardCache* cache) {
  return forward(net, features_matrix(group, net.input_dim()), cache);
}

ScoringNet backward(const ScoringNet& net, const ForwardCache& cache,
                    const Matrix& dloss_dlogits) {
  if (!cache.valid)
    throw std::invalid_argument("backward requires a forward cache");
  const int input_dim = net.input_dim();
  const int hidden_dim = net.hidden_dim();
  const int levels = net.num_levels();
  const int n = cache.inputs.cols();
  if (dloss_dlogits.rows() != levels || dloss_dlogits.cols() != n)
    throw std::invalid_argument("gradient shape does not match logits");

  ScoringNet grads = zeros_like(net);

  // accumulate over documents in ascending j so that a joint backward is
  // bit-identical to summing per-document backward results
  for (int c = 0; c < levels; ++c) {
    for (int h = 0; h < hidden_dim; ++h) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += dloss_dlogits(c, j) * cache.hidden(h, j);
      grads.w2(c, h) = acc;
    }
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += dloss_dlogits(c, j);
    grads.b2[c] = acc;
  }

  Matrix dpre(hidden_dim, n);  // gradient at the pre-activation of layer 1
  for (int h = 0; h < hidden_dim; ++h) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int c = 0; c < levels; ++c)
        acc += net.w2(c, h) * dloss_dlogits(c, j);
      const double t = cache.hidden(h, j);
      dpre(h, j) = acc * (1.0 - t * t);
    }
  }

  for (int h = 0; h < hidden_dim; ++h) {
    for (int d = 0; d < input_dim; ++d) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += dpre(h, j) * cache.inputs(d, j);
      grads.w1(h, d) = acc;
    }
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += dpre(h, j);
    grads.b1[h] = acc;
  }

  return grads;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    p[c] = std::exp(logits[c] - hi);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<double> softmax_column(const Matrix& logits, int col) {
  std::vector<double> column(logits.rows());
  for (int c = 0; c < logits.rows(); ++c) column[c] = logits(c, col);
  return softmax(column);
}

double expected_score(std::span<const double> probabilities) {
  double score = 0.0;
  for (std::size_t c = 0; c < probabilities.size(); ++c)
    score += static_cast<double>(c + 1) * probabilities[c];
  return score;
}

AdamState make_adam_state(const ScoringNet& like, const AdamConfig& config) {
  AdamState state;
  state.m = zeros_like(like);
  state.v = zeros_like(like);
  state.step = 0;
  state.config = config;
  return state;
}

namespace {

void adam_block(double* param, double* m, double* v, const double* g,
                std::size_t n, const AdamConfig& cfg, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

}  // namespace

void adam_step(ScoringNet& net, const ScoringNet& grads, AdamState& state) {
  if (!net.same_shape(grads) || !net.same_shape(state.m))
    throw std::invalid_argument("adam_step shape mismatch");
  state.step += 1;
  const AdamConfig& cfg = state.config;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  adam_block(net.w1.data(), state.m.w1.data(), state.v.w1.data(),
             grads.w1.data(), net.w1.size(), cfg, bc1, bc2);
  adam_block(net.b1.data(), state.m.b1.data(), state.v.b1.data(),
             grads.b1.data(), net.b1.size(), cfg, bc1, bc2);
  adam_block(net.w2.data(), state.m.w2.data(), state.v.w2.data(),
             grads.w2.data(), net.w2.size(), cfg, bc1, bc2);
  adam_block(net.b2.data(), state.m.b2.data(), state.v.b2.data(),
             grads.b2.data(), net.b2.size(), cfg, bc1, bc2);
}

}  // namespace l2r
