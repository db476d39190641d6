#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "l2r/checkpoint.hpp"
#include "l2r/rng.hpp"
#include "l2r/scoring_net.hpp"
#include "test_util.hpp"

using namespace l2r;

namespace {

Matrix random_inputs(int rows, int cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

ScoringNet random_net(int input_dim, int hidden_dim, int levels, Rng& rng) {
  ScoringNet net = glorot_init(input_dim, hidden_dim, levels, rng.next());
  for (auto& b : net.b1) b = rng.uniform(-0.5, 0.5);
  for (auto& b : net.b2) b = rng.uniform(-0.5, 0.5);
  return net;
}

// straight-line reimplementation of the forward pass
Matrix forward_oracle(const ScoringNet& net, const Matrix& x) {
  const int n = x.cols();
  Matrix out(net.num_levels(), n);
  for (int j = 0; j < n; ++j) {
    std::vector<double> h(net.hidden_dim());
    for (int i = 0; i < net.hidden_dim(); ++i) {
      double pre = net.b1[i];
      for (int d = 0; d < net.input_dim(); ++d) pre += net.w1(i, d) * x(d, j);
      h[i] = std::tanh(pre);
    }
    for (int c = 0; c < net.num_levels(); ++c) {
      double pre = net.b2[c];
      for (int i = 0; i < net.hidden_dim(); ++i) pre += net.w2(c, i) * h[i];
      out(c, j) = pre;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("glorot_init respects bounds, zero biases, determinism") {
  const ScoringNet net = glorot_init(3, 3, 5, 7);
  const double bound1 = 1.0;  // sqrt(6 / (3 + 3))
  for (std::size_t i = 0; i < net.w1.size(); ++i) {
    CHECK(std::abs(net.w1.data()[i]) <= bound1);
  }
  const double bound2 = std::sqrt(6.0 / (3 + 5));
  for (std::size_t i = 0; i < net.w2.size(); ++i)
    CHECK(std::abs(net.w2.data()[i]) <= bound2);
  for (double b : net.b1) CHECK(b == 0.0);
  for (double b : net.b2) CHECK(b == 0.0);

  CHECK(glorot_init(3, 3, 5, 7) == net);
  CHECK(glorot_init(3, 3, 5, 8) != net);
  CHECK_THROWS_AS(glorot_init(0, 3, 5, 7), std::invalid_argument);
}

TEST_CASE("forward of the zero net is zero") {
  const ScoringNet net = make_net(4, 3, 2);
  Rng rng(1);
  const Matrix x = random_inputs(4, 5, rng);
  const Matrix logits = forward(net, x);
  for (std::size_t i = 0; i < logits.size(); ++i)
    CHECK(logits.data()[i] == 0.0);
}

TEST_CASE("forward saturates to the second-layer column") {
  // H=1, w1=0, large positive b1: tanh ~ 1, so logits ~ w2 column + b2
  ScoringNet net = make_net(2, 1, 3);
  net.b1[0] = 40.0;
  net.w2(0, 0) = 0.3;
  net.w2(1, 0) = -1.2;
  net.w2(2, 0) = 2.0;
  Rng rng(2);
  const Matrix x = random_inputs(2, 4, rng);
  const Matrix logits = forward(net, x);
  for (int j = 0; j < 4; ++j) {
    CHECK(logits(0, j) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(logits(1, j) == doctest::Approx(-1.2).epsilon(1e-12));
    CHECK(logits(2, j) == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("forward matches the straight-line oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int input_dim = rng.uniform_int(1, 6);
    const int hidden_dim = rng.uniform_int(1, 6);
    const int levels = rng.uniform_int(1, 6);
    const int n = rng.uniform_int(1, 5);
    const ScoringNet net = random_net(input_dim, hidden_dim, levels, rng);
    const Matrix x = random_inputs(input_dim, n, rng);
    const Matrix a = forward(net, x);
    const Matrix b = forward_oracle(net, x);
    REQUIRE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(std::abs(a.data()[i] - b.data()[i]) <= 1e-12);
    // purity: repeated evaluation is bit-identical
    CHECK(forward(net, x) == a);
  }
  CHECK_THROWS_AS(forward(make_net(3, 2, 2), Matrix(4, 1)),
                  std::invalid_argument);
}

TEST_CASE("softmax values and stability") {
  {
    const double logits[] = {0.0, 0.0, 0.0};
    const auto p = softmax(logits);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
  }
  {
    const double logits[] = {std::log(1.0), std::log(2.0), std::log(3.0)};
    const auto p = softmax(logits);
    CHECK(p[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(3.0 / 6).epsilon(1e-12));
  }
  {
    const double base[] = {0.5, -0.25, 1.75};
    const double shifted[] = {1000.5, 999.75, 1001.75};
    const auto p = softmax(base);
    const auto q = softmax(shifted);
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(p[c] - q[c]) <= 1e-12);
  }
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(rng.uniform_int(1, 8));
    for (auto& v : logits) v = rng.uniform(-700.0, 700.0);
    const auto p = softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("backward: zero upstream gradient gives zero parameter gradient") {
  Rng rng(12);
  const ScoringNet net = random_net(3, 4, 2, rng);
  const Matrix x = random_inputs(3, 3, rng);
  ForwardCache cache;
  forward(net, x, &cache);
  const ScoringNet grads = backward(net, cache, Matrix(2, 3));
  CHECK(grads.all_zero());

  ForwardCache empty;
  CHECK_THROWS_AS(backward(net, empty, Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(13);
  double max_rel = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int input_dim = rng.uniform_int(1, 8);
    const int hidden_dim = rng.uniform_int(1, 8);
    const int levels = rng.uniform_int(1, 8);
    const int n = rng.uniform_int(1, 4);
    ScoringNet net = random_net(input_dim, hidden_dim, levels, rng);
    const Matrix x = random_inputs(input_dim, n, rng);
    const Matrix upstream = random_inputs(levels, n, rng);

    ForwardCache cache;
    forward(net, x, &cache);
    const ScoringNet grads = backward(net, cache, upstream);

    auto objective = [&]() {
      const Matrix logits = forward(net, x);
      double total = 0.0;
      for (int c = 0; c < levels; ++c)
        for (int j = 0; j < n; ++j) total += upstream(c, j) * logits(c, j);
      return total;
    };
    const double step = 1e-5;
    double* blocks[4] = {net.w1.data(), net.b1.data(), net.w2.data(),
                         net.b2.data()};
    const double* grad_blocks[4] = {grads.w1.data(), grads.b1.data(),
                                    grads.w2.data(), grads.b2.data()};
    const std::size_t sizes[4] = {net.w1.size(), net.b1.size(), net.w2.size(),
                                  net.b2.size()};
    for (int blk = 0; blk < 4; ++blk) {
      for (std::size_t i = 0; i < sizes[blk]; ++i) {
        const double saved = blocks[blk][i];
        blocks[blk][i] = saved + step;
        const double up = objective();
        blocks[blk][i] = saved - step;
        const double down = objective();
        blocks[blk][i] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double g = grad_blocks[blk][i];
        const double rel =
            std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1.0});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  CHECK(max_rel < 1e-6);
}

TEST_CASE("backward is additive over documents") {
  Rng rng(14);
  const ScoringNet net = random_net(4, 5, 3, rng);
  const Matrix x = random_inputs(4, 2, rng);
  const Matrix upstream = random_inputs(3, 2, rng);

  ForwardCache joint_cache;
  forward(net, x, &joint_cache);
  const ScoringNet joint = backward(net, joint_cache, upstream);

  ScoringNet sum = zeros_like(net);
  for (int j = 0; j < 2; ++j) {
    Matrix xj(4, 1), uj(3, 1);
    for (int d = 0; d < 4; ++d) xj(d, 0) = x(d, j);
    for (int c = 0; c < 3; ++c) uj(c, 0) = upstream(c, j);
    ForwardCache cache;
    forward(net, xj, &cache);
    const ScoringNet g = backward(net, cache, uj);
    for (std::size_t i = 0; i < sum.w1.size(); ++i)
      sum.w1.data()[i] += g.w1.data()[i];
    for (std::size_t i = 0; i < sum.b1.size(); ++i) sum.b1[i] += g.b1[i];
    for (std::size_t i = 0; i < sum.w2.size(); ++i)
      sum.w2.data()[i] += g.w2.data()[i];
    for (std::size_t i = 0; i < sum.b2.size(); ++i) sum.b2[i] += g.b2[i];
  }
  CHECK(joint == sum);
}

TEST_CASE("adam_step basics") {
  Rng rng(15);
  ScoringNet net = random_net(2, 3, 2, rng);
  const ScoringNet before = net;
  AdamState state = make_adam_state(net, {1e-3, 0.9, 0.999, 1e-8});

  adam_step(net, zeros_like(net), state);
  CHECK(net == before);
  CHECK(state.step == 1);

  // first nonzero step moves each parameter by ~ -lr * sign(g)
  ScoringNet grads = zeros_like(net);
  grads.w1(0, 0) = 0.5;
  grads.w2(1, 2) = -0.25;
  ScoringNet fresh = before;
  AdamState fresh_state = make_adam_state(fresh, {1e-3, 0.9, 0.999, 1e-8});
  adam_step(fresh, grads, fresh_state);
  CHECK(fresh.w1(0, 0) - before.w1(0, 0) ==
        doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(fresh.w2(1, 2) - before.w2(1, 2) ==
        doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(fresh.b1[0] == before.b1[0]);

  // determinism: identical sequences give bit-identical parameters
  ScoringNet a = before, b = before;
  AdamState sa = make_adam_state(a, {1e-3, 0.9, 0.999, 1e-8});
  AdamState sb = make_adam_state(b, {1e-3, 0.9, 0.999, 1e-8});
  for (int t = 0; t < 5; ++t) {
    adam_step(a, grads, sa);
    adam_step(b, grads, sb);
  }
  CHECK(a == b);

  CHECK_THROWS_AS(adam_step(net, zeros_like(make_net(9, 9, 9)), state),
                  std::invalid_argument);
}

TEST_CASE("expected_score") {
  {
    std::vector<double> p(20, 0.0);
    p[0] = 1.0;
    CHECK(expected_score(p) == 1.0);
  }
  {
    std::vector<double> p(20, 1.0 / 20);
    CHECK(expected_score(p) == doctest::Approx(10.5).epsilon(1e-12));
  }
  {
    std::vector<double> p(20, 0.0);
    p[19] = 1.0;
    CHECK(expected_score(p) == 20.0);
  }
  // moving mass to a higher category strictly increases the score
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const int levels = rng.uniform_int(2, 10);
    std::vector<double> p(levels);
    double sum = 0.0;
    for (auto& v : p) {
      v = rng.uniform01();
      sum += v;
    }
    for (auto& v : p) v /= sum;
    int lo = rng.uniform_int(0, levels - 2);
    int hi = rng.uniform_int(lo + 1, levels - 1);
    const double shift = p[lo] * 0.5;
    std::vector<double> q = p;
    q[lo] -= shift;
    q[hi] += shift;
    CHECK(expected_score(q) > expected_score(p));
  }
}

TEST_CASE("checkpoint round-trip is exact") {
  Rng rng(21);
  ScoringNet net = random_net(5, 4, 6, rng);
  AdamState state = make_adam_state(net, {2e-4, 0.9, 0.999, 1e-8});
  ScoringNet grads = zeros_like(net);
  for (std::size_t i = 0; i < grads.w1.size(); ++i)
    grads.w1.data()[i] = rng.uniform(-1.0, 1.0);
  adam_step(net, grads, state);
  adam_step(net, grads, state);

  CheckpointMeta meta;
  meta.epoch = 17;
  meta.config_hash = 0xdeadbeefcafef00dull;
  meta.normalized_features = 0;

  testutil::TempDir dir;
  const auto path = dir.path() / "model.ckpt";
  save_checkpoint(path, net, state, meta);
  const Checkpoint loaded = load_checkpoint(path);

  CHECK(loaded.net == net);
  CHECK(loaded.adam.m == state.m);
  CHECK(loaded.adam.v == state.v);
  CHECK(loaded.adam.step == state.step);
  CHECK(loaded.adam.config.learning_rate == 2e-4);
  CHECK(loaded.meta.epoch == 17);
  CHECK(loaded.meta.config_hash == meta.config_hash);
  CHECK(loaded.meta.normalized_features == 0);

  // serialize twice -> identical bytes
  CHECK(serialize_checkpoint(net, state, meta) ==
        serialize_checkpoint(net, state, meta));
}

TEST_CASE("checkpoint rejects corruption") {
  Rng rng(22);
  const ScoringNet net = random_net(3, 2, 4, rng);
  const AdamState state = make_adam_state(net, {});
  const std::string bytes = serialize_checkpoint(net, state, {});

  {
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad),
                         "not a checkpoint file (bad magic)", CheckpointError);
  }
  {
    std::string bad = bytes;
    bad[8] = 9;  // version field
    CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  }
  {
    const std::string truncated = bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(deserialize_checkpoint(truncated), CheckpointError);
  }
  {
    std::string padded = bytes + "tail";
    CHECK_THROWS_AS(deserialize_checkpoint(padded), CheckpointError);
  }
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.ckpt"), CheckpointError);
}
