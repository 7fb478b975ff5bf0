#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>

#include "emcom/lead.hpp"
#include "emcom/rng.hpp"

using namespace emcom;

namespace {

double redness(const std::vector<double>& image) {
  double worst = 0.0;
  for (size_t i = 0; i < image.size(); i += 3)
    worst = std::max(worst, image[i] - std::max(image[i + 1], image[i + 2]));
  return worst;
}

}  // namespace

TEST_CASE("render: exactly 1785 values, all in [0,1]") {
  ArenaSpec arena;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const RobotPose pose = random_pose(arena, rng);
    const auto image = render(pose, arena);
    REQUIRE(image.size() == 1785);
    for (double v : image) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("render: goal visible ahead, invisible behind") {
  ArenaSpec arena;
  RobotPose facing{0.25, 0.5, 0.0};  // goal 0.25 ahead
  CHECK(redness(render(facing, arena)) > 0.5);

  RobotPose away{0.25, 0.5, std::numbers::pi};  // goal directly behind, out of view
  RobotPose far_away{0.1, 0.1, -3.0};
  CHECK(redness(render(away, arena)) > 0.5);  // still inside the 1.6-tall FOV? see below
  (void)far_away;
}

TEST_CASE("render: out-of-view goal leaves no red above background") {
  ArenaSpec arena;
  arena.goal_x = 0.9;
  arena.goal_y = 0.9;
  arena.goal_radius = 0.05;
  // Robot in the far corner facing away: goal sits > 1.04 behind the image plane.
  RobotPose pose{0.05, 0.05, std::numbers::pi * -0.75};
  CHECK(redness(render(pose, arena)) == 0.0);
}

TEST_CASE("render: translating robot and goal together is bit-identical") {
  ArenaSpec a1, a2;
  a1.goal_x = 0.375;
  a1.goal_y = 0.5;
  const double dx = 0.25, dy = -0.125;  // exact dyadic shifts
  a2 = a1;
  a2.goal_x = a1.goal_x + dx;
  a2.goal_y = a1.goal_y + dy;
  for (double theta : {0.0, 0.7, -2.1, 3.0}) {
    RobotPose p1{0.25, 0.625, theta};
    RobotPose p2{p1.x + dx, p1.y + dy, theta};
    const auto i1 = render(p1, a1);
    const auto i2 = render(p2, a2);
    REQUIRE(i1.size() == i2.size());
    for (size_t i = 0; i < i1.size(); ++i) REQUIRE(i1[i] == i2[i]);
  }
}

TEST_CASE("encode_tone: endpoints and monotonicity") {
  CHECK(encode_tone(-1.0) == 0.0);
  CHECK(encode_tone(0.0) == 0.5);
  CHECK(encode_tone(1.0) == 1.0);
  double prev = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double f = encode_tone(-1.0 + 2.0 * i / 99.0);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("channel: argmax equals floor(bins * f); clean at bin centres") {
  ToneChannelSpec spec;
  spec.noise = NoiseConfig::none();
  std::mt19937_64 rng(2);

  auto argmax = [](const std::vector<double>& v) {
    int k = 0;
    for (size_t i = 1; i < v.size(); ++i)
      if (v[i] > v[k]) k = static_cast<int>(i);
    return k;
  };

  CHECK(argmax(channel(0.0, spec, rng)) == 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double f = u(rng);
    const int want = std::min(static_cast<int>(f * spec.bins), spec.bins - 1);
    CHECK(argmax(channel(f, spec, rng)) == want);
  }
  for (int k = 0; k < spec.bins; ++k) {
    const double f = (k + 0.5) / spec.bins;
    CHECK(argmax(channel(f, spec, rng)) == k);
  }
}

TEST_CASE("channel: argmax survives moderate bin noise for most draws") {
  ToneChannelSpec spec;
  spec.noise = NoiseConfig::gaussian(0.05);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int correct = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const double f = u(rng);
    const int want = std::min(static_cast<int>(f * spec.bins), spec.bins - 1);
    const auto v = channel(f, spec, rng);
    int k = 0;
    for (size_t j = 1; j < v.size(); ++j)
      if (v[j] > v[k]) k = static_cast<int>(j);
    if (k == want) ++correct;
  }
  CHECK(correct >= 950);
}

TEST_CASE("kinematics_step: rest, straight line, pure rotation") {
  DriveSpec drive;
  ArenaSpec arena;
  RobotPose pose{0.3, 0.4, 0.6};

  RobotPose still = kinematics_step(pose, 0.0, 0.0, drive, arena);
  CHECK(still.x == pose.x);
  CHECK(still.y == pose.y);
  CHECK(still.theta == pose.theta);

  RobotPose ahead = kinematics_step(pose, 0.8, 0.8, drive, arena);
  CHECK(ahead.x == doctest::Approx(pose.x + drive.wheel_radius * 0.8 * std::cos(pose.theta)));
  CHECK(ahead.y == doctest::Approx(pose.y + drive.wheel_radius * 0.8 * std::sin(pose.theta)));
  CHECK(ahead.theta == pose.theta);

  RobotPose spun = kinematics_step(pose, -0.5, 0.5, drive, arena);
  CHECK(spun.x == doctest::Approx(pose.x).epsilon(1e-12));
  CHECK(spun.y == doctest::Approx(pose.y).epsilon(1e-12));
  CHECK(spun.theta ==
        doctest::Approx(pose.theta + drive.wheel_radius * 1.0 / drive.axle_length));
}

TEST_CASE("kinematics_step: arc formula matches fine Euler integration") {
  DriveSpec drive;
  ArenaSpec arena;
  arena.side = 100.0;  // keep clamping out of the comparison
  arena.goal_x = arena.goal_y = 50.0;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    RobotPose pose{50.0 + u(rng), 50.0 + u(rng), u(rng) * 3.0};
    const double pl = u(rng), pr = u(rng);
    RobotPose got = kinematics_step(pose, pl, pr, drive, arena);

    const double v = drive.wheel_radius * (pl + pr) * 0.5;
    const double w = drive.wheel_radius * (pr - pl) / drive.axle_length;
    double x = pose.x, y = pose.y, th = pose.theta;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      x += v / n * std::cos(th);
      y += v / n * std::sin(th);
      th += w / n;
    }
    CHECK(got.x == doctest::Approx(x).epsilon(1e-7));
    CHECK(got.y == doctest::Approx(y).epsilon(1e-7));
    CHECK(std::abs(std::remainder(got.theta - th, 2 * std::numbers::pi)) < 1e-9);
  }
}

TEST_CASE("kinematics_step: positions stay clamped inside the arena") {
  DriveSpec drive;
  ArenaSpec arena;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RobotPose pose{0.001, 0.001, -2.5};
  for (int i = 0; i < 2000; ++i) {
    pose = kinematics_step(pose, u(rng), u(rng), drive, arena);
    CHECK(pose.x >= 0.0);
    CHECK(pose.x <= arena.side);
    CHECK(pose.y >= 0.0);
    CHECK(pose.y <= arena.side);
  }
}

TEST_CASE("run_lead_episode: start inside goal is an immediate success") {
  LeadConfig cfg;
  cfg.sender_hidden = 4;
  cfg.receiver_hidden = 4;
  NetParams sender = init_params(cfg.sender_spec(), 1, 0.01);
  NetParams receiver = init_params(cfg.receiver_spec(), 2, 0.1);
  std::mt19937_64 rng(6);
  LeadTrace t = run_lead_episode(sender, receiver, {0.5, 0.5, 0.0}, cfg, rng, 0.0);
  CHECK(t.success);
  CHECK(t.steps == 0);
  CHECK(t.records.empty());
}

TEST_CASE("run_lead_episode: step cap reached gives a failure trace of cap length") {
  LeadConfig cfg;
  cfg.sender_hidden = 4;
  cfg.receiver_hidden = 4;
  cfg.arena.max_steps = 7;
  NetParams sender = init_params(cfg.sender_spec(), 1, 0.0);   // silent sender
  NetParams receiver = init_params(cfg.receiver_spec(), 2, 0.0);  // motionless robot
  std::mt19937_64 rng(7);
  LeadTrace t = run_lead_episode(sender, receiver, {0.1, 0.1, 0.0}, cfg, rng, 0.0);
  CHECK_FALSE(t.success);
  CHECK(t.steps == 7);
  CHECK(t.sender_td.back().terminal);
  CHECK(t.sender_td.back().reward == 0.0);
}

TEST_CASE("run_lead_episode: receiver never reads the image, sender never reads spectra") {
  LeadConfig cfg;
  cfg.sender_hidden = 4;
  cfg.receiver_hidden = 4;
  cfg.arena.max_steps = 3;
  NetParams sender = init_params(cfg.sender_spec(), 3, 0.01);
  NetParams receiver = init_params(cfg.receiver_spec(), 4, 0.1);
  std::mt19937_64 rng(8);
  LeadTrace t = run_lead_episode(sender, receiver, {0.1, 0.9, 1.0}, cfg, rng, 0.1);
  REQUIRE(!t.sender_io.empty());
  for (const StepIO& io : t.sender_io) CHECK(io.input.size() == 1785);
  for (const StepIO& io : t.receiver_io) CHECK(io.input.size() == 2u * cfg.tone.bins);
  // Receiver inputs are spectra: nonnegative, bounded by peak + leak + noise.
  for (const StepIO& io : t.receiver_io)
    for (double v : io.input) {
      CHECK(v >= 0.0);
      CHECK(v < 2.0);
    }
}

TEST_CASE("transfer_hidden: hidden weights identical, output layer fresh") {
  LeadConfig cfg;
  cfg.sender_hidden = 6;
  NetParams pre = init_params(cfg.sender_spec(), 11, 0.02);
  // give the pretrained net distinctive biases so equality is meaningful
  for (auto& b : pre.layers[0].bias) b = 0.25;
  NetParams post = transfer_hidden(pre, 99, 0.02);

  CHECK(post.layers[0] == pre.layers[0]);
  CHECK_FALSE(post.layers[1] == pre.layers[1]);
  for (double b : post.layers[1].bias) CHECK(b == 0.0);

  // identical hidden activations on the same image
  ArenaSpec arena;
  const auto image = render({0.3, 0.3, 0.5}, arena);
  const auto a = forward(pre, RnnState{}, image);
  const auto b = forward(post, RnnState{}, image);
  REQUIRE(a.io.activations[0].size() == b.io.activations[0].size());
  for (size_t i = 0; i < a.io.activations[0].size(); ++i)
    CHECK(a.io.activations[0][i] == b.io.activations[0][i]);
}

TEST_CASE("oracle pipeline: near-perfect success with zero learning") {
  LeadConfig cfg;
  std::mt19937_64 rng(9);
  LeadEvalResult res = run_oracle_pipeline(100, cfg, rng);
  CHECK(res.success_rate >= 0.99);
}

TEST_CASE("trainer: zero episodes leave parameters untouched; direct mode trains sender only") {
  LeadConfig cfg;
  cfg.sender_hidden = 4;
  cfg.receiver_hidden = 4;
  cfg.arena.max_steps = 5;
  LeadTrainer t(cfg, LeadTrainer::Mode::Direct, 31);
  const NetParams s0 = t.sender();
  const NetParams r0 = t.receiver();
  CHECK(t.episode_index() == 0);  // nothing run yet
  CHECK(t.sender() == s0);

  t.run_episode(10);
  CHECK(t.receiver() == r0);  // direct mode never touches the receiver
}

TEST_CASE("write_ppm: emits a well-formed 52x40 image") {
  ArenaSpec arena;
  const auto image = render({0.4, 0.5, 0.0}, arena);
  const char* path = "/tmp/emcom_render_test.ppm";
  write_ppm(path, image);
  std::FILE* f = std::fopen(path, "rb");
  REQUIRE(f != nullptr);
  char magic[3] = {};
  REQUIRE(std::fscanf(f, "%2s", magic) == 1);
  CHECK(std::string(magic) == "P6");
  int w = 0, h = 0, maxv = 0;
  REQUIRE(std::fscanf(f, "%d %d %d", &w, &h, &maxv) == 3);
  CHECK(w == 52);
  CHECK(h == 40);
  CHECK(maxv == 255);
  std::fclose(f);
  std::remove(path);
}
