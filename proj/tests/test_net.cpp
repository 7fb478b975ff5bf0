#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "emcom/net.hpp"
#include "emcom/rng.hpp"

using namespace emcom;

namespace {

NetSpec small_spec() {
  return make_spec(2, {3}, 1, false, Activation::Tanh, Activation::Sigmoid);
}

// Independent single-step backprop for a net with one hidden layer and no
// recurrence; written from the chain rule directly, no shared code with bptt.
Gradients plain_backprop_1hidden(const NetParams& p, const std::vector<double>& x,
                                 const std::vector<double>& target) {
  const int nh = p.spec.hidden_sizes[0];
  const int no = p.spec.output_size();

  std::vector<double> h(nh), y(no);
  for (int j = 0; j < nh; ++j) {
    double z = p.layers[0].bias[j];
    for (size_t i = 0; i < x.size(); ++i) z += p.layers[0].weight.at(j, (int)i) * x[i];
    h[j] = apply_activation(p.spec.hidden_activation, z);
  }
  for (int k = 0; k < no; ++k) {
    double z = p.layers[1].bias[k];
    for (int j = 0; j < nh; ++j) z += p.layers[1].weight.at(k, j) * h[j];
    y[k] = apply_activation(p.spec.output_activations[k], z);
  }

  Gradients g = zero_gradients(p);
  std::vector<double> dout(no);
  for (int k = 0; k < no; ++k)
    dout[k] = (y[k] - target[k]) * activation_derivative(p.spec.output_activations[k], y[k]);
  for (int k = 0; k < no; ++k) {
    g.layers[1].bias[k] = dout[k];
    for (int j = 0; j < nh; ++j) g.layers[1].weight.at(k, j) = dout[k] * h[j];
  }
  for (int j = 0; j < nh; ++j) {
    double e = 0.0;
    for (int k = 0; k < no; ++k) e += p.layers[1].weight.at(k, j) * dout[k];
    const double dh = e * activation_derivative(p.spec.hidden_activation, h[j]);
    g.layers[0].bias[j] = dh;
    for (size_t i = 0; i < x.size(); ++i) g.layers[0].weight.at(j, (int)i) = dh * x[i];
  }
  return g;
}

double max_rel_err(const Gradients& got, const Gradients& want, const NetParams& shape) {
  Gradients a = got, b = want;
  auto va = parameter_view(a, shape);
  auto vb = parameter_view(b, shape);
  REQUIRE(va.size() == vb.size());
  double worst = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    const double denom = std::max(std::abs(*vb[i]), 1e-8);
    worst = std::max(worst, std::abs(*va[i] - *vb[i]) / denom);
  }
  return worst;
}

struct RandomEpisode {
  NetParams params;
  std::vector<StepIO> steps;
  std::vector<std::vector<double>> inputs;
  std::vector<StepTargets> targets;
};

RandomEpisode random_episode(std::mt19937_64& rng, bool allow_recurrent = true) {
  std::uniform_int_distribution<int> in_d(1, 3), hid_d(0, 2), hn_d(1, 4), out_d(1, 2), len_d(1, 5);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  NetSpec spec;
  for (;;) {
    spec = NetSpec{};
    spec.input_size = in_d(rng);
    const int nhidden = hid_d(rng);
    for (int i = 0; i < nhidden; ++i) spec.hidden_sizes.push_back(hn_d(rng));
    spec.recurrent = allow_recurrent && !spec.hidden_sizes.empty() && coin(rng);
    spec.hidden_activation = coin(rng) ? Activation::Tanh : Activation::Sigmoid;
    const int nout = out_d(rng);
    for (int i = 0; i < nout; ++i) {
      const int k = std::uniform_int_distribution<int>(0, 2)(rng);
      spec.output_activations.push_back(k == 0 ? Activation::Sigmoid
                                        : k == 1 ? Activation::Tanh
                                                 : Activation::Identity);
    }
    NetParams probe = init_params(spec, 1, 0.5);
    if (probe.parameter_count() <= 50) break;
  }

  RandomEpisode ep;
  ep.params = init_params(spec, rng(), 0.5);
  const int len = len_d(rng);
  RnnState state = initial_state(spec);
  bool any_mask = false;
  for (int t = 0; t < len; ++t) {
    std::vector<double> x(spec.input_size);
    for (double& v : x) v = val(rng);
    ForwardResult r = forward(ep.params, state, x);
    state = r.state;
    ep.steps.push_back(r.io);
    ep.inputs.push_back(x);
    StepTargets tg;
    tg.value.resize(spec.output_size());
    tg.mask.resize(spec.output_size());
    for (int j = 0; j < spec.output_size(); ++j) {
      tg.mask[j] = coin(rng) ? 1 : 0;
      tg.value[j] = val(rng);
      any_mask |= tg.mask[j] != 0;
    }
    ep.targets.push_back(tg);
  }
  if (!any_mask) {
    ep.targets.back().mask[0] = 1;  // keep the gradient away from identically zero
  }
  return ep;
}

}  // namespace

TEST_CASE("init_params: zero scale gives all-zero weights and 0.5 sigmoid outputs") {
  NetParams p = init_params(small_spec(), 42, 0.0);
  for (const auto& l : p.layers)
    for (double w : l.weight.a) CHECK(w == 0.0);
  ForwardResult r = forward(p, initial_state(p.spec), std::vector<double>{0.3, -0.7});
  CHECK(r.output[0] == doctest::Approx(0.5));
}

TEST_CASE("init_params: deterministic for a given seed") {
  NetSpec spec = make_spec(3, {4}, 2, true, Activation::Sigmoid, Activation::Tanh);
  NetParams a = init_params(spec, 123, 0.5);
  NetParams b = init_params(spec, 123, 0.5);
  CHECK(a == b);
  NetParams c = init_params(spec, 124, 0.5);
  CHECK(a != c);
}

TEST_CASE("init_params: samples lie within [-scale, scale]; biases zero") {
  NetParams p = init_params(make_spec(2, {3}, 1, false, Activation::Tanh, Activation::Sigmoid),
                            7, 0.5);
  for (const auto& l : p.layers) {
    for (double w : l.weight.a) {
      CHECK(w >= -0.5);
      CHECK(w <= 0.5);
    }
    for (double b : l.bias) CHECK(b == 0.0);
  }
}

TEST_CASE("init_params: invalid specs rejected") {
  NetSpec bad = small_spec();
  bad.hidden_sizes = {0};
  CHECK_THROWS_AS(init_params(bad, 1, 0.5), std::invalid_argument);
  NetSpec rec = small_spec();
  rec.hidden_sizes.clear();
  rec.recurrent = true;
  CHECK_THROWS_AS(init_params(rec, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(init_params(small_spec(), 1, -0.1), std::invalid_argument);
}

TEST_CASE("forward: zero-weight tanh output is exactly 0") {
  NetSpec spec = make_spec(2, {3}, 1, false, Activation::Tanh, Activation::Tanh);
  NetParams p = init_params(spec, 0, 0.0);
  ForwardResult r = forward(p, initial_state(spec), std::vector<double>{0.0, 0.0});
  CHECK(r.output[0] == 0.0);
}

TEST_CASE("forward: dimension mismatch rejected") {
  NetParams p = init_params(small_spec(), 1, 0.5);
  CHECK_THROWS_AS(forward(p, initial_state(p.spec), std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("forward: replaying a recorded StepIO reproduces the output bit-exactly") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    RandomEpisode ep = random_episode(rng);
    for (const StepIO& step : ep.steps) {
      RnnState st;
      st.h = step.prev_state;
      ForwardResult r = forward(ep.params, st, step.input);
      REQUIRE(r.output.size() == step.output().size());
      for (size_t j = 0; j < r.output.size(); ++j) CHECK(r.output[j] == step.output()[j]);
    }
  }
}

TEST_CASE("forward: pure function and state-blind when non-recurrent") {
  NetParams p = init_params(small_spec(), 5, 0.5);
  std::vector<double> x{0.2, -0.4};
  ForwardResult a = forward(p, initial_state(p.spec), x);
  ForwardResult b = forward(p, initial_state(p.spec), x);
  CHECK(a.output == b.output);
  RnnState junk;
  junk.h = {9.0, -9.0, 3.0};
  ForwardResult c = forward(p, junk, x);
  CHECK(a.output == c.output);
}

TEST_CASE("forward: sigmoid outputs in (0,1), tanh outputs in (-1,1)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  NetSpec spec = make_spec(3, {5}, 2, true, Activation::Sigmoid, Activation::Sigmoid);
  spec.output_activations[1] = Activation::Tanh;
  for (int trial = 0; trial < 50; ++trial) {
    NetParams p = init_params(spec, rng(), 2.0);
    std::vector<double> x{val(rng), val(rng), val(rng)};
    ForwardResult r = forward(p, initial_state(spec), x);
    CHECK(r.output[0] > 0.0);
    CHECK(r.output[0] < 1.0);
    CHECK(r.output[1] > -1.0);
    CHECK(r.output[1] < 1.0);
  }
}

TEST_CASE("bptt: empty masks give exactly zero gradients") {
  std::mt19937_64 rng(3);
  RandomEpisode ep = random_episode(rng);
  std::vector<StepTargets> none(ep.steps.size());
  Gradients g = bptt(ep.params, ep.steps, none);
  auto view = parameter_view(g, ep.params);
  for (double* v : view) CHECK(*v == 0.0);
}

TEST_CASE("bptt: empty episode rejected") {
  NetParams p = init_params(small_spec(), 1, 0.5);
  std::vector<StepIO> steps;
  std::vector<StepTargets> targets;
  CHECK_THROWS_AS(bptt(p, steps, targets), std::invalid_argument);
}

TEST_CASE("bptt: single-step non-recurrent equals independently coded backprop") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    NetSpec spec = make_spec(3, {4}, 2, false, Activation::Sigmoid, Activation::Tanh);
    NetParams p = init_params(spec, rng(), 0.5);
    std::vector<double> x{val(rng), val(rng), val(rng)};
    std::vector<double> target{val(rng), val(rng)};

    ForwardResult r = forward(p, initial_state(spec), x);
    StepTargets tg;
    tg.value = target;
    tg.mask = {1, 1};
    std::vector<StepIO> steps{r.io};
    std::vector<StepTargets> targets{tg};
    Gradients got = bptt(p, steps, targets);
    Gradients want = plain_backprop_1hidden(p, x, target);
    CHECK(max_rel_err(got, want, p) < 1e-12);
  }
}

TEST_CASE("bptt matches the finite-difference oracle on random small nets") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    RandomEpisode ep = random_episode(rng);
    Gradients got = bptt(ep.params, ep.steps, ep.targets);
    Gradients want = fd_gradient_oracle(ep.params, ep.inputs, ep.targets, 1e-5);
    CHECK(max_rel_err(got, want, ep.params) < 1e-4);
  }
}

TEST_CASE("fd_gradient_oracle: analytic quadratic w^2 at w=3 gives 6") {
  // Linear 1->1 net with identity output; input sqrt(2), target 0 makes the
  // half-squared-error loss equal w^2.
  NetSpec spec = make_spec(1, {}, 1, false, Activation::Tanh, Activation::Identity);
  NetParams p = init_params(spec, 0, 0.0);
  p.layers[0].weight.at(0, 0) = 3.0;
  std::vector<std::vector<double>> inputs{{std::sqrt(2.0)}};
  StepTargets tg;
  tg.value = {0.0};
  tg.mask = {1};
  std::vector<StepTargets> targets{tg};
  Gradients g = fd_gradient_oracle(p, inputs, targets, 1e-5);
  CHECK(g.layers[0].weight.at(0, 0) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("fd_gradient_oracle: zero-loss episode gives zero gradient") {
  NetSpec spec = make_spec(1, {}, 1, false, Activation::Tanh, Activation::Identity);
  NetParams p = init_params(spec, 0, 0.0);
  p.layers[0].weight.at(0, 0) = 2.0;
  std::vector<std::vector<double>> inputs{{1.5}};
  StepTargets tg;
  tg.value = {3.0};  // output is exactly 2*1.5
  tg.mask = {1};
  std::vector<StepTargets> targets{tg};
  Gradients g = fd_gradient_oracle(p, inputs, targets, 1e-5);
  CHECK(g.layers[0].weight.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fd_gradient_oracle: epsilon bounds enforced") {
  NetParams p = init_params(small_spec(), 1, 0.5);
  std::vector<std::vector<double>> inputs{{0.1, 0.2}};
  std::vector<StepTargets> targets{StepTargets::none()};
  CHECK_THROWS_AS(fd_gradient_oracle(p, inputs, targets, 1e-8), std::invalid_argument);
  CHECK_THROWS_AS(fd_gradient_oracle(p, inputs, targets, 1e-2), std::invalid_argument);
}

TEST_CASE("sgd_apply: zero gradients leave parameters unchanged") {
  NetParams p = init_params(small_spec(), 8, 0.5);
  NetParams q = sgd_apply(p, zero_gradients(p), 0.1);
  CHECK(p == q);
}

TEST_CASE("sgd_apply: single-weight arithmetic") {
  NetSpec spec = make_spec(1, {}, 1, false, Activation::Tanh, Activation::Identity);
  NetParams p = init_params(spec, 0, 0.0);
  p.layers[0].weight.at(0, 0) = 1.0;
  Gradients g = zero_gradients(p);
  g.layers[0].weight.at(0, 0) = 2.0;
  NetParams q = sgd_apply(p, g, 0.1);
  CHECK(q.layers[0].weight.at(0, 0) == doctest::Approx(0.8));
  CHECK_THROWS_AS(sgd_apply(p, g, 0.0), std::invalid_argument);
}

TEST_CASE("sgd_apply: descent on a 1-D quadratic decreases the loss monotonically") {
  NetSpec spec = make_spec(1, {}, 1, false, Activation::Tanh, Activation::Identity);
  NetParams p = init_params(spec, 0, 0.0);
  p.layers[0].weight.at(0, 0) = 4.0;
  std::vector<std::vector<double>> inputs{{1.0}};
  StepTargets tg;
  tg.value = {1.0};
  tg.mask = {1};
  std::vector<StepTargets> targets{tg};

  double prev = episode_loss(p, inputs, targets);
  for (int it = 0; it < 25; ++it) {
    RnnState st = initial_state(spec);
    ForwardResult r = forward(p, st, inputs[0]);
    std::vector<StepIO> steps{r.io};
    p = sgd_apply(p, bptt(p, steps, targets), 0.2);
    const double cur = episode_loss(p, inputs, targets);
    CHECK(cur <= prev);
    prev = cur;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("checkpoint: save/load round-trip is exact") {
  char path[] = "/tmp/emcom_ckpt_test.txt";
  std::map<std::string, NetParams> nets;
  nets.emplace("sender", init_params(make_spec(4, {5, 3}, 2, true, Activation::Tanh,
                                               Activation::Identity),
                                     77, 0.5));
  nets.at("sender").spec.output_activations[0] = Activation::Tanh;
  nets.emplace("receiver", init_params(small_spec(), 78, 0.3));
  // biases are zero right after init; give them distinctive values
  for (auto& [name, p] : nets)
    for (auto& l : p.layers)
      for (size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.125 * (double)(i + 1);

  save_checkpoint(path, nets);
  auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded.at("sender").spec.output_activations[0] == Activation::Tanh);
  CHECK(loaded.at("sender").layers == nets.at("sender").layers);
  CHECK(loaded.at("sender").recurrent == nets.at("sender").recurrent);
  CHECK(loaded.at("receiver") == nets.at("receiver"));
  CHECK_THROWS(load_net(path, "nosuch"));
  std::remove(path);
}

TEST_CASE("seed substreams are stable and independent of call order") {
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}
