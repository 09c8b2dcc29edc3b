#include "expbias/error.hpp"
#include "expbias/nncore/adam.hpp"
#include "expbias/nncore/loss.hpp"
#include "expbias/nncore/network.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

using namespace expbias;
using namespace expbias::nn;

namespace {

template <typename Fn> ErrorKind kind_of(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an expbias::Error";
  return ErrorKind::Io;
}

void fill(StackedNetwork &net, double value) {
  StackedNetwork::visit(net, [&](const std::string &, auto &t) { t.setConstant(value); });
}

bool all_zero(const StackedNetwork &net) {
  bool zero = true;
  StackedNetwork::visit(net, [&](const std::string &, const auto &t) { zero = zero && t.isZero(0.0); });
  return zero;
}

} // namespace

TEST(InitParams, ShapesFollowLayerDims) {
  const auto net = init_params({{4, 64}, {64, 64}}, 1, 7);
  EXPECT_EQ(net.layers[0].w_xi.rows(), 64);
  EXPECT_EQ(net.layers[0].w_xi.cols(), 4);
  EXPECT_EQ(net.layers[1].w_hc.rows(), 64);
  EXPECT_EQ(net.w_out.rows(), 1);
  EXPECT_EQ(net.w_out.cols(), 64);
  EXPECT_EQ(net.b_out.size(), 1);
}

TEST(InitParams, WeightBoundsAndBiases) {
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    const auto net = init_params({{3, 5}, {5, 6}}, 2, seed);
    for (const auto &l : net.layers) {
      const double sx = 1.0 / std::sqrt(static_cast<double>(l.input_size()));
      const double sh = 1.0 / std::sqrt(static_cast<double>(l.hidden_size()));
      for (const Matrix *w : {&l.w_xi, &l.w_xf, &l.w_xo, &l.w_xc}) {
        EXPECT_LE(w->cwiseAbs().maxCoeff(), sx);
      }
      for (const Matrix *w : {&l.w_hi, &l.w_hf, &l.w_ho, &l.w_hc}) {
        EXPECT_LE(w->cwiseAbs().maxCoeff(), sh);
      }
      EXPECT_TRUE(l.b_i.isZero(0.0));
      EXPECT_TRUE(l.b_o.isZero(0.0));
      EXPECT_TRUE(l.b_c.isZero(0.0));
      EXPECT_TRUE((l.b_f.array() == 1.0).all());
    }
    EXPECT_LE(net.w_out.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(6.0));
  }
}

TEST(InitParams, SameSeedIsBitIdentical) {
  const auto a = init_params({{2, 8}, {8, 8}}, 1, 42);
  const auto b = init_params({{2, 8}, {8, 8}}, 1, 42);
  EXPECT_EQ(network_to_json(a).dump(), network_to_json(b).dump());
  const auto c = init_params({{2, 8}, {8, 8}}, 1, 43);
  EXPECT_NE(network_to_json(a).dump(), network_to_json(c).dump());
}

TEST(InitParams, RejectsZeroDimensions) {
  EXPECT_EQ(kind_of([] { init_params({{0, 4}}, 1, 0); }), ErrorKind::InvalidConfiguration);
  EXPECT_EQ(kind_of([] { init_params({{2, 4}}, 0, 0); }), ErrorKind::InvalidConfiguration);
  EXPECT_EQ(kind_of([] { init_params({}, 1, 0); }), ErrorKind::InvalidConfiguration);
}

TEST(LstmCell, ZeroParamsZeroStateGivesZero) {
  const auto p = LstmLayerParams::zeros(3, 2);
  Vector x(3);
  x << 1.0, -2.0, 5.0;
  const auto [s, cache] = lstm_cell_forward(p, x, LstmLayerState::zeros(2));
  EXPECT_TRUE(s.h.isZero(0.0));
  EXPECT_TRUE(s.c.isZero(0.0));
}

TEST(LstmCell, ZeroParamsCarryHalfOfCellState) {
  const auto p = LstmLayerParams::zeros(2, 1);
  LstmLayerState st = LstmLayerState::zeros(1);
  st.c[0] = 1.0;
  const auto [s, cache] = lstm_cell_forward(p, Vector::Constant(2, 3.0), st);
  EXPECT_DOUBLE_EQ(s.c[0], 0.5);
  EXPECT_NEAR(s.h[0], 0.244919, 1e-6);
  EXPECT_DOUBLE_EQ(s.h[0], std::tanh(0.25));

  CellOptions standard;
  standard.standard_output_gate = true;
  const auto [s2, cache2] = lstm_cell_forward(p, Vector::Constant(2, 3.0), st, standard);
  EXPECT_DOUBLE_EQ(s2.h[0], 0.5 * std::tanh(0.5));
}

TEST(LstmCell, SaturatedForgetGateKeepsMemory) {
  auto p = LstmLayerParams::zeros(1, 3);
  p.b_f.setConstant(100.0);
  LstmLayerState st = LstmLayerState::zeros(3);
  st.c << 0.7, -1.5, 2.0;
  const auto [s, cache] = lstm_cell_forward(p, Vector::Zero(1), st);
  EXPECT_NEAR((s.c - st.c).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(LstmCell, ActivationsBounded) {
  std::mt19937_64 rng(5);
  const auto net = init_params({{4, 6}}, 1, 3);
  LstmLayerState st = LstmLayerState::zeros(6);
  for (const auto &x : oracle::random_sequence(rng, 4, 50, 20.0)) {
    const auto [next, c] = lstm_cell_forward(net.layers[0], x, st);
    for (const Vector *g : {&c.i, &c.f, &c.o}) {
      EXPECT_TRUE((g->array() >= 0.0).all() && (g->array() <= 1.0).all());
    }
    EXPECT_TRUE((c.c_tilde.array().abs() <= 1.0).all());
    EXPECT_TRUE((c.h.array().abs() < 1.0).all());
    st = next;
  }
}

TEST(LstmCell, ShapeMismatchThrows) {
  const auto p = LstmLayerParams::zeros(3, 2);
  EXPECT_EQ(kind_of([&] { lstm_cell_forward(p, Vector::Zero(2), LstmLayerState::zeros(2)); }), ErrorKind::Shape);
  EXPECT_EQ(kind_of([&] { lstm_cell_forward(p, Vector::Zero(3), LstmLayerState::zeros(4)); }), ErrorKind::Shape);
}

TEST(LstmCellBackward, ZeroUpstreamGivesZero) {
  const auto net = init_params({{3, 4}}, 1, 11);
  std::mt19937_64 rng(1);
  const auto x = oracle::random_sequence(rng, 3, 1).front();
  const auto [s, cache] = lstm_cell_forward(net.layers[0], x, LstmLayerState::zeros(4));
  const auto g = lstm_cell_backward(cache, net.layers[0], Vector::Zero(4), Vector::Zero(4));
  bool zero = g.x.isZero(0.0) && g.h_prev.isZero(0.0) && g.c_prev.isZero(0.0);
  LstmLayerParams::visit(g.params, [&](const char *, const auto &t) { zero = zero && t.isZero(0.0); });
  EXPECT_TRUE(zero);
}

TEST(LstmCellBackward, LinearInUpstreamGradient) {
  for (bool standard : {false, true}) {
    CellOptions opt;
    opt.standard_output_gate = standard;
    const auto net = init_params({{3, 4}}, 1, 12);
    std::mt19937_64 rng(2);
    const auto x = oracle::random_sequence(rng, 3, 1).front();
    LstmLayerState st{oracle::random_sequence(rng, 4, 1).front(), oracle::random_sequence(rng, 4, 1).front()};
    const auto [s, cache] = lstm_cell_forward(net.layers[0], x, st, opt);
    const Vector gh = oracle::random_sequence(rng, 4, 1).front();
    const Vector gc = oracle::random_sequence(rng, 4, 1).front();
    const auto g1 = lstm_cell_backward(cache, net.layers[0], gh, gc, opt);
    const auto g2 = lstm_cell_backward(cache, net.layers[0], 2.0 * gh, 2.0 * gc, opt);
    EXPECT_LT((g2.x - 2.0 * g1.x).norm(), 1e-12);
    EXPECT_LT((g2.h_prev - 2.0 * g1.h_prev).norm(), 1e-12);
    EXPECT_LT((g2.c_prev - 2.0 * g1.c_prev).norm(), 1e-12);
    EXPECT_LT((g2.params.w_hc - 2.0 * g1.params.w_hc).norm(), 1e-12);
    EXPECT_LT((g2.params.b_f - 2.0 * g1.params.b_f).norm(), 1e-12);
  }
}

// Finite differences of L = gh.h + gc.c through one cell, w.r.t. parameters,
// input and both state vectors.
TEST(LstmCellBackward, MatchesFiniteDifferences) {
  for (bool standard : {false, true}) {
    CellOptions opt;
    opt.standard_output_gate = standard;
    std::mt19937_64 rng(standard ? 21 : 20);
    auto p = init_params({{3, 4}}, 1, standard ? 8 : 9).layers[0];
    p.b_i = oracle::random_sequence(rng, 4, 1, 0.5).front();
    p.b_o = oracle::random_sequence(rng, 4, 1, 0.5).front();
    Vector x = oracle::random_sequence(rng, 3, 1).front();
    LstmLayerState st{oracle::random_sequence(rng, 4, 1, 0.5).front(),
                      oracle::random_sequence(rng, 4, 1, 0.5).front()};
    const Vector gh = oracle::random_sequence(rng, 4, 1).front();
    const Vector gc = oracle::random_sequence(rng, 4, 1).front();

    auto objective = [&] {
      const auto [s, c] = lstm_cell_forward(p, x, st, opt);
      return gh.dot(s.h) + gc.dot(s.c);
    };
    const auto [s0, cache] = lstm_cell_forward(p, x, st, opt);
    const auto g = lstm_cell_backward(cache, p, gh, gc, opt);

    double worst = 0.0;
    auto probe = [&](double &slot, double analytic) {
      const double saved = slot;
      slot = saved + 1e-5;
      const double up = objective();
      slot = saved - 1e-5;
      const double down = objective();
      slot = saved;
      worst = std::max(worst, oracle::rel_error(analytic, (up - down) / 2e-5, 1e-6));
    };
    std::vector<double *> slots;
    std::vector<double> analytic;
    LstmLayerParams::visit(p, [&](const char *, auto &t) {
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        slots.push_back(t.data() + k);
      }
    });
    LstmLayerParams::visit(g.params, [&](const char *, const auto &t) {
      for (Eigen::Index k = 0; k < t.size(); ++k) {
        analytic.push_back(t.data()[k]);
      }
    });
    for (std::size_t k = 0; k < slots.size(); ++k) {
      probe(*slots[k], analytic[k]);
    }
    for (Eigen::Index k = 0; k < 3; ++k) {
      probe(x[k], g.x[k]);
    }
    for (Eigen::Index k = 0; k < 4; ++k) {
      probe(st.h[k], g.h_prev[k]);
      probe(st.c[k], g.c_prev[k]);
    }
    EXPECT_LT(worst, 1e-5) << "standard_output_gate=" << standard;
  }
}

TEST(NetworkForward, OneOutputPerStep) {
  const auto net = init_params(uniform_stack(2, 3, 2), 1, 1);
  std::mt19937_64 rng(0);
  EXPECT_EQ(network_forward(net, oracle::random_sequence(rng, 2, 1)).outputs.size(), 1u);
  EXPECT_EQ(network_forward(net, oracle::random_sequence(rng, 2, 7)).outputs.size(), 7u);
}

TEST(NetworkForward, ZeroNetworkOutputsProjectionBias) {
  auto net = zero_network(uniform_stack(3, 4, 2), 2);
  net.b_out << 0.25, -3.0;
  std::mt19937_64 rng(3);
  for (const auto &y : network_forward(net, oracle::random_sequence(rng, 3, 6, 10.0)).outputs) {
    EXPECT_EQ(y, net.b_out);
  }
}

TEST(NetworkForward, SingleStepMatchesManualComposition) {
  const auto net = init_params({{3, 5}}, 2, 4);
  std::mt19937_64 rng(4);
  const auto seq = oracle::random_sequence(rng, 3, 1);
  const auto [s, c] = lstm_cell_forward(net.layers[0], seq[0], LstmLayerState::zeros(5));
  const Vector manual = net.w_out * s.h + net.b_out;
  EXPECT_LT((network_forward(net, seq).outputs[0] - manual).norm(), 1e-15);
}

TEST(NetworkForward, RunnerMatchesBatchForward) {
  const auto net = init_params(uniform_stack(2, 4, 2), 1, 6);
  std::mt19937_64 rng(6);
  const auto seq = oracle::random_sequence(rng, 2, 9);
  const auto batch = network_forward(net, seq).outputs;
  NetworkRunner runner(net);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    EXPECT_EQ(runner.step(seq[t]), batch[t]);
  }
  runner.reset();
  EXPECT_EQ(runner.step(seq[0]), batch[0]);
}

TEST(NetworkForward, EmptySequenceIsInvalidInput) {
  const auto net = init_params(uniform_stack(2, 3, 1), 1, 1);
  EXPECT_EQ(kind_of([&] { network_forward(net, std::vector<Vector>{}); }), ErrorKind::InvalidInput);
}

TEST(NetworkBackward, ZeroOutputGradsGiveZero) {
  const auto net = init_params(uniform_stack(2, 4, 2), 1, 2);
  std::mt19937_64 rng(7);
  const auto seq = oracle::random_sequence(rng, 2, 5);
  const auto fwd = network_forward(net, seq);
  EXPECT_TRUE(all_zero(network_backward(net, fwd.cache, std::vector<Vector>(5, Vector::Zero(1)))));
}

TEST(NetworkBackward, LengthMismatchIsShapeError) {
  const auto net = init_params(uniform_stack(2, 4, 1), 1, 2);
  std::mt19937_64 rng(7);
  const auto fwd = network_forward(net, oracle::random_sequence(rng, 2, 3));
  EXPECT_EQ(kind_of([&] { network_backward(net, fwd.cache, std::vector<Vector>(2, Vector::Zero(1))); }),
            ErrorKind::Shape);
}

TEST(NetworkBackward, SingleStepEqualsProjectionThenCell) {
  const auto net = init_params({{2, 3}}, 2, 13);
  std::mt19937_64 rng(13);
  const auto seq = oracle::random_sequence(rng, 2, 1);
  const Vector r = oracle::random_sequence(rng, 2, 1).front();
  const auto grads = network_backward(net, network_forward(net, seq).cache, std::vector<Vector>{r});

  const auto [s, cache] = lstm_cell_forward(net.layers[0], seq[0], LstmLayerState::zeros(3));
  const auto cell = lstm_cell_backward(cache, net.layers[0], net.w_out.transpose() * r, Vector::Zero(3));
  EXPECT_LT((grads.w_out - r * s.h.transpose()).norm(), 1e-14);
  EXPECT_LT((grads.b_out - r).norm(), 1e-14);
  EXPECT_LT((grads.layers[0].w_xc - cell.params.w_xc).norm(), 1e-14);
  EXPECT_LT((grads.layers[0].b_f - cell.params.b_f).norm(), 1e-14);
}

TEST(NetworkBackward, MatchesFiniteDifferencesTwoLayers) {
  for (bool standard : {false, true}) {
    CellOptions cell;
    cell.standard_output_gate = standard;
    const auto net = init_params(uniform_stack(2, 4, 2), 1, 17, cell);
    std::mt19937_64 rng(17);
    const auto seq = oracle::random_sequence(rng, 2, 5);
    const auto r = oracle::random_sequence(rng, 1, 5);
    const auto check = oracle::finite_difference_check(net, seq, r);
    EXPECT_LT(check.max_rel_error, 1e-5) << "standard_output_gate=" << standard;
  }
}

TEST(Adam, StateStartsAtZero) {
  const auto net = init_params(uniform_stack(2, 3, 1), 1, 1);
  const auto st = AdamState::for_network(net);
  EXPECT_EQ(st.step_count, 0);
  EXPECT_TRUE(all_zero(st.m));
  EXPECT_TRUE(all_zero(st.v));
}

TEST(Adam, RejectsInvalidHyperparameters) {
  const auto net = init_params(uniform_stack(1, 1, 1), 1, 1);
  AdamConfig bad;
  bad.beta1 = 1.0;
  EXPECT_EQ(kind_of([&] { AdamState::for_network(net, bad); }), ErrorKind::InvalidConfiguration);
  bad = AdamConfig{};
  bad.epsilon = 0.0;
  EXPECT_EQ(kind_of([&] { AdamState::for_network(net, bad); }), ErrorKind::InvalidConfiguration);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto net = init_params(uniform_stack(2, 3, 2), 1, 5);
  const auto before = net;
  auto st = AdamState::for_network(net);
  adam_step(net, net.zeros_like(), st, 1e-3);
  EXPECT_EQ(st.step_count, 1);
  EXPECT_EQ(network_to_json(net).dump(), network_to_json(before).dump());
}

TEST(Adam, FirstStepMatchesHandDerivedUpdate) {
  auto net = zero_network(uniform_stack(1, 1, 1), 1);
  auto grads = net.zeros_like();
  fill(grads, 0.5);
  auto st = AdamState::for_network(net);
  adam_step(net, grads, st, 1e-3, 0.0);
  // m = 0.05, v = 0.00025; corrected m = 0.5, v = 0.25.
  const double expected = -1e-3 * 0.5 / (std::sqrt(0.25) + 1e-8);
  StackedNetwork::visit(net, [&](const std::string &name, const auto &t) {
    for (Eigen::Index k = 0; k < t.size(); ++k) {
      EXPECT_DOUBLE_EQ(t.data()[k], expected) << name;
      EXPECT_NEAR(std::abs(t.data()[k]), 1e-3, 1e-6) << name;
    }
  });
}

TEST(Adam, RepeatedGradientStepStaysBelowLearningRate) {
  auto net = zero_network(uniform_stack(1, 1, 1), 1);
  auto grads = net.zeros_like();
  fill(grads, 0.5);
  auto st = AdamState::for_network(net);
  double prev = 0.0;
  for (int step = 0; step < 2; ++step) {
    adam_step(net, grads, st, 1e-3, 0.0);
    const double now = net.b_out[0];
    EXPECT_LE(std::abs(now - prev), 1e-3 * (1.0 + 1e-9));
    prev = now;
  }
}

TEST(Adam, NonFiniteGradientNamesTensor) {
  auto net = init_params(uniform_stack(2, 3, 1), 1, 5);
  auto grads = net.zeros_like();
  grads.layers[0].w_hf(1, 2) = std::numeric_limits<double>::quiet_NaN();
  auto st = AdamState::for_network(net);
  try {
    adam_step(net, grads, st, 1e-3);
    FAIL() << "expected a training error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::Training);
    EXPECT_NE(std::string(e.what()).find("layer0.w_hf"), std::string::npos);
  }
}

TEST(Adam, ClipBoundsGlobalNorm) {
  const auto net = init_params(uniform_stack(2, 3, 1), 1, 5);
  auto grads = net.zeros_like();
  fill(grads, 10.0);
  const double before = clip_global_norm(grads, 5.0);
  EXPECT_GT(before, 5.0);
  EXPECT_NEAR(global_norm(grads), 5.0, 1e-12);
  auto small = net.zeros_like();
  fill(small, 1e-3);
  const double n = global_norm(small);
  clip_global_norm(small, 5.0);
  EXPECT_DOUBLE_EQ(global_norm(small), n);
}

TEST(Serialization, RoundTripIsExact) {
  CellOptions cell;
  cell.standard_output_gate = true;
  const auto net = init_params(uniform_stack(3, 4, 2), 2, 77, cell);
  const auto back = network_from_json(nlohmann::json::parse(network_to_json(net).dump()));
  EXPECT_TRUE(back.cell.standard_output_gate);
  EXPECT_EQ(network_to_json(back).dump(), network_to_json(net).dump());
  std::mt19937_64 rng(1);
  const auto seq = oracle::random_sequence(rng, 3, 4);
  EXPECT_EQ(network_forward(back, seq).outputs, network_forward(net, seq).outputs);
}

TEST(MaeLoss, Examples) {
  Vector a(1), b(1);
  a << 2.0;
  b << 5.0;
  auto l = mae_loss(a, b);
  EXPECT_DOUBLE_EQ(l.value, 3.0);
  EXPECT_DOUBLE_EQ(l.grad[0], -1.0);

  Vector p(2), z = Vector::Zero(2);
  p << 1.0, 3.0;
  EXPECT_DOUBLE_EQ(mae_loss(p, z).value, 2.0);
  EXPECT_DOUBLE_EQ(mae_loss(p, z).grad[0], 0.5);

  l = mae_loss(p, p);
  EXPECT_EQ(l.value, 0.0);
  EXPECT_TRUE(l.grad.isZero(0.0));
  EXPECT_EQ(kind_of([&] { mae_loss(a, p); }), ErrorKind::Shape);
}

TEST(WeightedFeatureLoss, Examples) {
  Vector pred(2), truth(2), alpha(2);
  pred << 4.0, 1.0;
  truth << 0.0, 1.0;
  alpha << 0.25, 0.75;
  EXPECT_DOUBLE_EQ(weighted_feature_loss(pred, truth, alpha).value, 1.0);

  Vector uniform = Vector::Constant(3, 1.0 / 3.0);
  Vector x(3);
  x << 1.0, -2.0, 0.5;
  EXPECT_EQ(weighted_feature_loss(x, x, uniform).value, 0.0);

  Vector bad(2);
  bad << 0.5, 0.6;
  EXPECT_EQ(kind_of([&] { weighted_feature_loss(pred, truth, bad); }), ErrorKind::InvalidConfiguration);
  bad << -0.5, 1.5;
  EXPECT_EQ(kind_of([&] { weighted_feature_loss(pred, truth, bad); }), ErrorKind::InvalidConfiguration);
}

TEST(WeightedFeatureLoss, OneHotEqualsSingleFeatureMae) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector pred = oracle::random_sequence(rng, 4, 1).front();
    const Vector truth = oracle::random_sequence(rng, 4, 1).front();
    const Eigen::Index j = trial % 4;
    const Vector alpha = Vector::Unit(4, j);
    EXPECT_EQ(weighted_feature_loss(pred, truth, alpha).value, std::abs(pred[j] - truth[j]));
  }
}

TEST(TargetReplicationLoss, Examples) {
  const std::vector<double> p3{1.0, 2.0, 5.0};
  EXPECT_DOUBLE_EQ(target_replication_loss(p3, 5.0, 1.0).value, 3.5);
  const std::vector<double> p2{0.0, 1.0};
  EXPECT_DOUBLE_EQ(target_replication_loss(p2, 1.0, 0.5).value, 0.5);
  const std::vector<double> p1{2.0};
  EXPECT_DOUBLE_EQ(target_replication_loss(p1, 5.0, 0.7).value, 0.3 * 3.0);
  EXPECT_EQ(kind_of([&] { target_replication_loss(p2, 1.0, 1.5); }), ErrorKind::InvalidConfiguration);
}

TEST(TargetReplicationLoss, AlphaZeroUsesFinalStepOnly) {
  const std::vector<double> p{9.0, -4.0, 1.5};
  const auto r = target_replication_loss(p, 2.0, 0.0);
  EXPECT_EQ(r.value, 0.5);
  EXPECT_EQ(r.step_grads[0], 0.0);
  EXPECT_EQ(r.step_grads[1], 0.0);
  EXPECT_EQ(r.step_grads[2], -1.0);
}
