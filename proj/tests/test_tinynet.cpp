#include "core/tinynet.hpp"

#include <cmath>

#include "core/error.hpp"
#include "doctest.h"

using namespace synthdet;

namespace {

Tensor3 random_input(int size, Rng& rng) {
  Tensor3 t(size, size, 3);
  for (auto& v : t.data) v = rng.uniform_real(0, 1);
  return t;
}

TinyNet default_net(int classes, int input, uint64_t seed) {
  Rng rng(seed);
  return TinyNet::make_default(classes, NetSpec{}, input, rng);
}

void zero_params(TinyNet& net) {
  for (auto& l : net.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

}  // namespace

TEST_SUITE("tinynet") {

TEST_CASE("zero network gives zero logits and a uniform softmax") {
  TinyNet net = default_net(10, 32, 1);
  zero_params(net);
  Rng rng(2);
  Tensor3 input = random_input(32, rng);
  Tensor3 logits = forward(net, input);
  REQUIRE(logits.data.size() == 10);
  for (double v : logits.data) CHECK(v == 0.0);
  auto p = softmax(logits);
  for (double v : p) CHECK(v == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("all-zero input through a conv yields the bias everywhere") {
  TinyNet net = default_net(4, 32, 3);
  for (size_t i = 0; i < net.layers[0].bias.size(); ++i)
    net.layers[0].bias[i] = 0.25 * (i + 1);
  Tensor3 zero(32, 32, 3);
  Tensor3 out = forward(net, zero, 1);  // just the first conv
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      for (int c = 0; c < out.c; ++c)
        CHECK(out.at(y, x, c) == 0.25 * (c + 1));
}

TEST_CASE("global average pool equals the brute-force spatial mean") {
  TinyNet net = default_net(5, 64, 4);
  Rng rng(5);
  Tensor3 input = random_input(64, rng);
  Tensor3 pre_gap = forward(net, input, 4);   // through conv/relu stack
  Tensor3 pooled = forward(net, input, 5);    // including gap
  REQUIRE(pooled.data.size() == static_cast<size_t>(pre_gap.c));
  for (int c = 0; c < pre_gap.c; ++c) {
    double acc = 0;
    for (int y = 0; y < pre_gap.h; ++y)
      for (int x = 0; x < pre_gap.w; ++x) acc += pre_gap.at(y, x, c);
    double mean = acc / (pre_gap.h * pre_gap.w);
    CHECK(std::abs(pooled.at(0, 0, c) - mean) < 1e-12);
  }
}

TEST_CASE("softmax sums to one; uniform logits give ln C exactly") {
  TinyNet net = default_net(7, 32, 6);
  Rng rng(7);
  Tensor3 input = random_input(32, rng);
  Tensor3 logits = forward(net, input);
  auto p = softmax(logits);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(std::abs(sum - 1.0) < 1e-12);

  Tensor3 uniform(1, 1, 7);
  CHECK(cross_entropy(uniform, 3) == std::log(7.0));
}

TEST_CASE("shape mismatch errors") {
  TinyNet net = default_net(3, 64, 8);
  Tensor3 wrong(32, 32, 3);
  CHECK_THROWS_AS(forward(net, wrong), Error);
}

TEST_CASE("fully frozen training changes nothing but still reports loss") {
  TinyNet net = default_net(4, 32, 9);
  Rng rng(10);
  Batch batch;
  for (int i = 0; i < 4; ++i) {
    batch.inputs.push_back(random_input(32, rng));
    batch.labels.push_back(i % 4);
  }
  FreezeSchedule schedule;
  schedule.frozen_prefix_layers = net.layer_count();
  TrainConfig cfg;
  auto before = flatten_params(net);
  double loss = backward_and_step(net, batch, schedule, cfg, 0);
  CHECK(loss > 0);
  CHECK(flatten_params(net) == before);
}

TEST_CASE("nothing frozen: every weighted layer moves on a generic batch") {
  TinyNet net = default_net(4, 32, 11);
  Rng rng(12);
  Batch batch;
  for (int i = 0; i < 4; ++i) {
    batch.inputs.push_back(random_input(32, rng));
    batch.labels.push_back(i % 4);
  }
  std::vector<std::vector<double>> before;
  for (const auto& l : net.layers) before.push_back(l.weights);
  backward_and_step(net, batch, FreezeSchedule{}, TrainConfig{}, 0);
  for (int li = 0; li < net.layer_count(); ++li) {
    if (!net.layers[li].has_params()) continue;
    CHECK(net.layers[li].weights != before[li]);
  }
}

TEST_CASE("frozen prefix keeps extractor weights bit-identical over steps") {
  TinyNet net = default_net(3, 32, 13);
  Rng rng(14);
  FreezeSchedule schedule;
  schedule.frozen_prefix_layers = net.feature_cut;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  auto frozen_before = flatten_params_prefix(net, net.feature_cut);
  auto head_before = net.layers[5].weights;
  for (int step = 0; step < 50; ++step) {
    Batch batch;
    for (int i = 0; i < 2; ++i) {
      batch.inputs.push_back(random_input(32, rng));
      batch.labels.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    backward_and_step(net, batch, schedule, cfg, step);
  }
  CHECK(flatten_params_prefix(net, net.feature_cut) == frozen_before);
  CHECK(net.layers[5].weights != head_before);  // the head moved
}

TEST_CASE("unfreeze_at_step: first extractor change lands exactly at step k") {
  const int kUnfreeze = 5;
  TinyNet net = default_net(3, 32, 15);
  Rng rng(16);
  FreezeSchedule schedule;
  schedule.frozen_prefix_layers = net.feature_cut;
  schedule.unfreeze_at_step = kUnfreeze;
  TrainConfig cfg;
  auto snapshot = flatten_params_prefix(net, net.feature_cut);
  for (int step = 0; step < 10; ++step) {
    Batch batch;
    for (int i = 0; i < 2; ++i) {
      batch.inputs.push_back(random_input(32, rng));
      batch.labels.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    backward_and_step(net, batch, schedule, cfg, step);
    auto now = flatten_params_prefix(net, net.feature_cut);
    if (step < kUnfreeze) {
      CHECK(now == snapshot);
    } else if (step == kUnfreeze) {
      CHECK(now != snapshot);
    }
  }
}

TEST_CASE("grad_check: gap+linear network is exact to 1e-9") {
  // Convs removed: a smooth composition, so central differences are tight.
  Rng rng(17);
  TinyNet net;
  net.input_h = net.input_w = 8;
  net.input_c = 3;
  Layer gap;
  gap.kind = LayerKind::kGlobalAvgPool;
  net.layers.push_back(gap);
  Layer linear;
  linear.kind = LayerKind::kLinear;
  linear.in_features = 3;
  linear.out_features = 5;
  linear.weights.assign(15, 0.0);
  linear.bias.assign(5, 0.0);
  linear.weight_velocity.assign(15, 0.0);
  linear.bias_velocity.assign(5, 0.0);
  net.layers.push_back(linear);
  net.feature_cut = 1;
  init_layer_params(net.layers[1], rng);
  Tensor3 input(8, 8, 3);
  for (auto& v : input.data) v = rng.uniform_real(0, 1);
  double err = grad_check(net, input, 2, 1e-5, rng);
  CHECK(err < 1e-9);
}

TEST_CASE("grad_check: default architecture below 1e-4 at epsilon 1e-5") {
  Rng rng(18);
  int checked = 0;
  for (uint64_t seed = 0; checked < 5 && seed < 50; ++seed) {
    TinyNet net = default_net(6, 24, 100 + seed);
    Rng input_rng(200 + seed);
    Tensor3 input = random_input(24, input_rng);
    // Keep finite differences away from relu kinks.
    if (min_abs_relu_preactivation(net, input) <= 1e-4) continue;
    double err = grad_check(net, input, static_cast<int>(seed % 6), 1e-5, rng);
    CHECK(err < 1e-4);
    ++checked;
  }
  CHECK(checked == 5);
}

TEST_CASE("grad_check epsilon range is enforced") {
  TinyNet net = default_net(3, 24, 19);
  Rng rng(20);
  Tensor3 input = random_input(24, rng);
  CHECK_THROWS_AS(grad_check(net, input, 0, 1e-8, rng), Error);
  CHECK_THROWS_AS(grad_check(net, input, 0, 1e-2, rng), Error);
}

TEST_CASE("training is deterministic: identical loss sequences") {
  auto run = [](uint64_t seed) {
    TinyNet net = default_net(4, 24, seed);
    Rng rng(seed + 1);
    std::vector<double> losses;
    for (int step = 0; step < 10; ++step) {
      Batch batch;
      for (int i = 0; i < 3; ++i) {
        Tensor3 t(24, 24, 3);
        for (auto& v : t.data) v = rng.uniform_real(0, 1);
        batch.inputs.push_back(std::move(t));
        batch.labels.push_back(static_cast<int>(rng.uniform_int(4)));
      }
      losses.push_back(
          backward_and_step(net, batch, FreezeSchedule{}, TrainConfig{}, step));
    }
    return losses;
  };
  CHECK(run(77) == run(77));
  CHECK(run(77) != run(78));
}

TEST_CASE("divergence raises NumericalOverflow") {
  TinyNet net = default_net(3, 24, 21);
  // Blow up the linear layer so logits overflow.
  for (auto& w : net.layers[5].weights) w = 1e308;
  for (auto& b : net.layers[5].bias) b = 1e308;
  Rng rng(22);
  Batch batch;
  batch.inputs.push_back(random_input(24, rng));
  batch.labels.push_back(0);
  CHECK_THROWS_AS(
      backward_and_step(net, batch, FreezeSchedule{}, TrainConfig{}, 0),
      Error);
}

}  // TEST_SUITE
