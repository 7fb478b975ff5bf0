#include "emcom/lead.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "emcom/rng.hpp"

namespace emcom {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace

void ArenaSpec::validate() const {
  if (side <= 0.0) throw std::invalid_argument("ArenaSpec: side must be > 0");
  if (goal_radius <= 0.0) throw std::invalid_argument("ArenaSpec: goal radius must be > 0");
  if (goal_x - goal_radius < 0.0 || goal_x + goal_radius > side || goal_y - goal_radius < 0.0 ||
      goal_y + goal_radius > side)
    throw std::invalid_argument("ArenaSpec: goal disc must lie inside the arena");
  if (max_steps < 1) throw std::invalid_argument("ArenaSpec: max_steps must be >= 1");
}

bool ArenaSpec::in_goal(double x, double y) const {
  const double dx = x - goal_x, dy = y - goal_y;
  return dx * dx + dy * dy <= goal_radius * goal_radius;
}

LeadConfig::LeadConfig() {
  td.gamma = 0.95;
  td.critic_learning_rate = 0.05;
  td.actor_learning_rate = 0.1;
  td.exploration_sigma = 0.3;
  td.exploration_sigma_end = 0.05;
  tone.noise = NoiseConfig::gaussian(0.01);
}

TdConfig LeadConfig::sender_td() const {
  TdConfig t = td;
  t.critic_learning_rate = sender_critic_lr;
  t.actor_learning_rate = sender_actor_lr;
  return t;
}

NetSpec LeadConfig::sender_spec() const {
  NetSpec s = make_spec(kImageValues, {sender_hidden}, 3, false, Activation::Tanh,
                        Activation::Tanh);
  s.output_activations[2] = Activation::Identity;
  return s;
}

NetSpec LeadConfig::receiver_spec() const {
  NetSpec s = make_spec(2 * tone.bins, {receiver_hidden}, 3, false, Activation::Tanh,
                        Activation::Tanh);
  s.output_activations[2] = Activation::Identity;
  return s;
}

// The image is drawn in the robot frame: only the goal's pose relative to the
// robot matters. Colours: white background, red goal disc.
std::vector<double> render(const RobotPose& pose, const ArenaSpec& arena,
                           const CameraSpec& cam) {
  const double cos_t = std::cos(pose.theta), sin_t = std::sin(pose.theta);
  // Goal offset in the robot frame (forward, left).
  const double dx = arena.goal_x - pose.x, dy = arena.goal_y - pose.y;
  const double gf = dx * cos_t + dy * sin_t;
  const double gl = -dx * sin_t + dy * cos_t;
  const double r2 = arena.goal_radius * arena.goal_radius;

  const int ss = cam.supersample;
  const double half_w = cam.coarse_w * 0.5, half_h = cam.coarse_h * 0.5;

  std::vector<double> image;
  image.reserve(kImageValues);

  auto shade = [&](double px, double py, double size) {
    // (px, py): pixel's top-left corner in grid units; size: 1 coarse-pixel
    // fractions. Returns coverage of the goal disc in [0,1].
    int hit = 0;
    for (int sy = 0; sy < ss; ++sy)
      for (int sx = 0; sx < ss; ++sx) {
        const double u = (px + (sx + 0.5) / ss * size - half_w) * cam.pixel_size;  // right
        const double v = (half_h - py - (sy + 0.5) / ss * size) * cam.pixel_size;  // forward
        const double df = v - gf, dl = -u - gl;
        if (df * df + dl * dl <= r2) ++hit;
      }
    return double(hit) / (ss * ss);
  };

  // White background, red disc (1.0, 0.1, 0.1), coverage-blended.
  auto emit = [&](double coverage) {
    image.push_back(1.0);
    image.push_back(1.0 - 0.9 * coverage);
    image.push_back(1.0 - 0.9 * coverage);
  };

  for (int row = 0; row < cam.coarse_h; ++row)
    for (int col = 0; col < cam.coarse_w; ++col) {
      const bool in_window = col >= cam.win_col0 && col < cam.win_col0 + cam.window &&
                             row >= cam.win_row0 && row < cam.win_row0 + cam.window;
      if (in_window) continue;
      emit(shade(col, row, 1.0));
    }
  for (int fr = 0; fr < 2 * cam.window; ++fr)
    for (int fc = 0; fc < 2 * cam.window; ++fc)
      emit(shade(cam.win_col0 + fc * 0.5, cam.win_row0 + fr * 0.5, 0.5));

  return image;
}

void write_ppm(const std::string& path, const std::vector<double>& image,
               const CameraSpec& cam) {
  if (static_cast<int>(image.size()) != kImageValues)
    throw std::invalid_argument("write_ppm: image must hold 1785 values");
  const int w = 2 * cam.coarse_w, h = 2 * cam.coarse_h;
  std::vector<std::array<double, 3>> canvas(static_cast<size_t>(w) * h);

  size_t idx = 0;
  auto next = [&]() {
    std::array<double, 3> c{image[idx], image[idx + 1], image[idx + 2]};
    idx += 3;
    return c;
  };
  for (int row = 0; row < cam.coarse_h; ++row)
    for (int col = 0; col < cam.coarse_w; ++col) {
      const bool in_window = col >= cam.win_col0 && col < cam.win_col0 + cam.window &&
                             row >= cam.win_row0 && row < cam.win_row0 + cam.window;
      if (in_window) continue;
      const auto c = next();
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) canvas[(2 * row + dy) * w + 2 * col + dx] = c;
    }
  for (int fr = 0; fr < 2 * cam.window; ++fr)
    for (int fc = 0; fc < 2 * cam.window; ++fc)
      canvas[(2 * cam.win_row0 + fr) * w + 2 * cam.win_col0 + fc] = next();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_ppm: cannot open " + path);
  os << "P6\n" << w << ' ' << h << "\n255\n";
  for (const auto& c : canvas)
    for (double v : c)
      os.put(static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
}

double encode_tone(double actor_output) {
  if (!std::isfinite(actor_output)) throw std::invalid_argument("encode_tone: non-finite input");
  return std::clamp((actor_output + 1.0) * 0.5, 0.0, 1.0);
}

std::vector<double> channel(double frequency, const ToneChannelSpec& spec,
                            std::mt19937_64& rng) {
  if (spec.bins < 4) throw std::invalid_argument("channel: need at least 4 bins");
  if (frequency < 0.0 || frequency > 1.0)
    throw std::invalid_argument("channel: frequency out of [0,1]");
  const int b = spec.bins;
  const double c = frequency * b;
  const int k = std::min(static_cast<int>(c), b - 1);
  const double t = c - k;

  std::vector<double> v(static_cast<size_t>(b), 0.0);
  v[k] = 1.0;
  if (k + 1 < b) v[k + 1] += 0.5 * t;
  if (k - 1 >= 0) v[k - 1] += 0.5 * (1.0 - t);

  if (spec.noise.kind == NoiseConfig::Kind::Gaussian) {
    std::normal_distribution<double> n(0.0, spec.noise.sigma);
    for (double& x : v) x = std::max(0.0, x + n(rng));
  }
  return v;
}

RobotPose kinematics_step(const RobotPose& pose, double phi_left, double phi_right,
                          const DriveSpec& drive, const ArenaSpec& arena) {
  const double cap = drive.wheel_cap;
  phi_left = std::clamp(phi_left, -cap, cap);
  phi_right = std::clamp(phi_right, -cap, cap);

  const double v = drive.wheel_radius * (phi_left + phi_right) * 0.5;
  const double w = drive.wheel_radius * (phi_right - phi_left) / drive.axle_length;

  RobotPose out = pose;
  if (std::abs(w) < 1e-12) {
    out.x += v * std::cos(pose.theta);
    out.y += v * std::sin(pose.theta);
  } else {
    const double radius = v / w;
    out.x += radius * (std::sin(pose.theta + w) - std::sin(pose.theta));
    out.y += -radius * (std::cos(pose.theta + w) - std::cos(pose.theta));
    out.theta = wrap_angle(pose.theta + w);
  }
  out.x = std::clamp(out.x, 0.0, arena.side);
  out.y = std::clamp(out.y, 0.0, arena.side);
  return out;
}

namespace {

struct ActorSample {
  double emitted, executed, noise;
};

ActorSample sample_actor(double emitted, double sigma, std::mt19937_64& rng) {
  ActorSample s{emitted, emitted, 0.0};
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    s.executed = std::clamp(emitted + n(rng), -1.0, 1.0);
    s.noise = s.executed - s.emitted;
  }
  return s;
}

LeadTrace run_episode_impl(const NetParams& sender, const NetParams* receiver,
                           const RobotPose& start, const LeadConfig& cfg,
                           std::mt19937_64& rng, double explore_sigma) {
  cfg.arena.validate();
  const bool comm = receiver != nullptr;
  if (sender.spec.input_size != kImageValues || sender.spec.output_size() != 3)
    throw std::invalid_argument("lead episode: sender must map the image to 2 actors + critic");
  if (comm && (receiver->spec.input_size != 2 * cfg.tone.bins ||
               receiver->spec.output_size() != 3))
    throw std::invalid_argument(
        "lead episode: receiver must map two spectra to 2 actors + critic");

  LeadTrace trace;
  trace.start = start;
  RobotPose pose = start;
  if (cfg.arena.in_goal(pose.x, pose.y)) {
    trace.success = true;
    return trace;
  }

  const RnnState s_state;  // feedforward nets carry no state
  for (int step = 0; step < cfg.arena.max_steps; ++step) {
    std::vector<double> image = render(pose, cfg.arena, cfg.camera);
    // The net sees the inverted frame: white background becomes 0, so the
    // input norm tracks the goal blob instead of the 1785 white pixels.
    for (double& v : image) v = 1.0 - v;

    ForwardResult sf = forward(sender, s_state, image);
    const ActorSample a1 = sample_actor(sf.output[0], explore_sigma, rng);
    const ActorSample a2 = sample_actor(sf.output[1], explore_sigma, rng);

    LeadStepRecord rec;
    rec.pose = pose;

    double wheels_l, wheels_r;
    if (comm) {
      rec.tones = {encode_tone(a1.executed), encode_tone(a2.executed)};
      std::vector<double> spectra = channel(rec.tones[0], cfg.tone, rng);
      const std::vector<double> s2 = channel(rec.tones[1], cfg.tone, rng);
      spectra.insert(spectra.end(), s2.begin(), s2.end());

      ForwardResult rf = forward(*receiver, s_state, spectra);
      const ActorSample w1 = sample_actor(rf.output[0], explore_sigma, rng);
      const ActorSample w2 = sample_actor(rf.output[1], explore_sigma, rng);
      wheels_l = w1.executed * cfg.drive.wheel_cap;
      wheels_r = w2.executed * cfg.drive.wheel_cap;
      trace.receiver_td.push_back(
          {rf.output[2], 0.0, false, {w1.emitted, w2.emitted}, {w1.noise, w2.noise}});
      trace.receiver_io.push_back(std::move(rf.io));
    } else {
      wheels_l = a1.executed * cfg.drive.wheel_cap;
      wheels_r = a2.executed * cfg.drive.wheel_cap;
    }
    rec.wheels = {wheels_l, wheels_r};

    trace.sender_td.push_back(
        {sf.output[2], 0.0, false, {a1.emitted, a2.emitted}, {a1.noise, a2.noise}});
    trace.sender_io.push_back(std::move(sf.io));

    pose = kinematics_step(pose, wheels_l, wheels_r, cfg.drive, cfg.arena);
    trace.records.push_back(rec);
    ++trace.steps;

    if (cfg.arena.in_goal(pose.x, pose.y)) {
      trace.success = true;
      break;
    }
  }

  trace.sender_td.back().terminal = true;
  trace.sender_td.back().reward = trace.success ? 1.0 : 0.0;
  if (comm) {
    trace.receiver_td.back().terminal = true;
    trace.receiver_td.back().reward = trace.success ? 1.0 : 0.0;
  }
  return trace;
}

}  // namespace

LeadTrace run_lead_episode(const NetParams& sender, const NetParams& receiver,
                           const RobotPose& start, const LeadConfig& cfg,
                           std::mt19937_64& rng, double explore_sigma) {
  return run_episode_impl(sender, &receiver, start, cfg, rng, explore_sigma);
}

LeadTrace run_direct_episode(const NetParams& sender, const RobotPose& start,
                             const LeadConfig& cfg, std::mt19937_64& rng,
                             double explore_sigma) {
  return run_episode_impl(sender, nullptr, start, cfg, rng, explore_sigma);
}

NetParams transfer_hidden(const NetParams& pretrained, std::uint64_t seed, double scale) {
  if (pretrained.layers.size() < 2)
    throw std::invalid_argument("transfer_hidden: pretrained net has no hidden layer");
  NetParams fresh = init_params(pretrained.spec, seed, scale);
  for (size_t l = 0; l + 1 < pretrained.layers.size(); ++l) fresh.layers[l] = pretrained.layers[l];
  if (pretrained.spec.recurrent) fresh.recurrent = pretrained.recurrent;
  return fresh;
}

RobotPose random_pose(const ArenaSpec& arena, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, arena.side);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  return {pos(rng), pos(rng), ang(rng)};
}

LeadTrainer::LeadTrainer(LeadConfig cfg, Mode mode, std::uint64_t master_seed)
    : cfg_(cfg),
      mode_(mode),
      sender_(init_params(cfg.sender_spec(), derive_seed(master_seed, "lead.init.sender"),
                          cfg.sender_init_scale)),
      receiver_(init_params(cfg.receiver_spec(), derive_seed(master_seed, "lead.init.receiver"),
                            cfg.receiver_init_scale)),
      rng_(make_stream(master_seed, mode == Mode::Direct ? "lead.pretrain" : "lead.train")) {
  cfg_.arena.validate();
  cfg_.td.validate();
}

const LeadTrace& LeadTrainer::run_episode(long total_episodes) {
  const double sigma = cfg_.td.sigma_at(episode_, total_episodes);
  const RobotPose start = random_pose(cfg_.arena, rng_);
  const HeadLayout heads{{0, 1}, 2};
  const TdConfig sender_td = cfg_.sender_td();
  if (mode_ == Mode::Direct) {
    last_ = run_direct_episode(sender_, start, cfg_, rng_, sigma);
    if (!last_.sender_io.empty())
      apply_actor_critic_update(sender_, last_.sender_io, last_.sender_td, sender_td, heads);
  } else {
    last_ = run_lead_episode(sender_, receiver_, start, cfg_, rng_, sigma);
    if (!last_.sender_io.empty()) {
      apply_actor_critic_update(sender_, last_.sender_io, last_.sender_td, sender_td, heads);
      apply_actor_critic_update(receiver_, last_.receiver_io, last_.receiver_td, cfg_.td,
                                heads);
    }
  }
  ++episode_;
  return last_;
}

std::string LeadTrainer::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void LeadTrainer::restore(const std::string& rng_state, long episode) {
  std::istringstream is(rng_state);
  is >> rng_;
  if (!is) throw std::runtime_error("LeadTrainer: bad rng state");
  episode_ = episode;
}

LeadEvalResult eval_lead_pair(const NetParams& sender, const NetParams& receiver,
                              int trials, const LeadConfig& cfg, std::mt19937_64& rng) {
  if (trials < 1) throw std::invalid_argument("eval_lead_pair: trials must be >= 1");
  LeadEvalResult res;
  long steps_sum = 0;
  int wins = 0;
  for (int i = 0; i < trials; ++i) {
    const RobotPose start = random_pose(cfg.arena, rng);
    LeadTrace t = run_lead_episode(sender, receiver, start, cfg, rng, 0.0);
    res.rows.push_back({i, start, t.steps, t.success});
    steps_sum += t.steps;
    if (t.success) ++wins;
  }
  res.success_rate = double(wins) / trials;
  res.mean_steps = double(steps_sum) / trials;
  return res;
}

// --- scripted oracle ---

std::array<double, 2> oracle_sender_tones(const RobotPose& pose, const ArenaSpec& arena) {
  const double dx = arena.goal_x - pose.x, dy = arena.goal_y - pose.y;
  const double bearing = wrap_angle(std::atan2(dy, dx) - pose.theta);
  const double dist = std::hypot(dx, dy);
  return {std::clamp((bearing / kPi + 1.0) * 0.5, 0.0, 1.0),
          std::clamp(dist / (1.5 * arena.side), 0.0, 1.0)};
}

namespace {

double decode_frequency(std::span<const double> spectrum) {
  const int b = static_cast<int>(spectrum.size());
  int k = 0;
  for (int i = 1; i < b; ++i)
    if (spectrum[i] > spectrum[k]) k = i;
  const double left = k > 0 ? spectrum[k - 1] : 0.0;
  const double right = k + 1 < b ? spectrum[k + 1] : 0.0;
  const double sum = left + right;
  const double t = sum > 1e-9 ? right / sum : 0.5;
  return (k + t) / b;
}

}  // namespace

std::array<double, 2> oracle_receiver_wheels(const std::vector<double>& spectra,
                                             const ToneChannelSpec& tone,
                                             const DriveSpec& drive) {
  const int b = tone.bins;
  if (static_cast<int>(spectra.size()) != 2 * b)
    throw std::invalid_argument("oracle_receiver_wheels: expected two concatenated spectra");
  const double f1 = decode_frequency(std::span(spectra).first(b));
  const double f2 = decode_frequency(std::span(spectra).subspan(b));
  const double bearing = (2.0 * f1 - 1.0) * kPi;
  const double dist = f2 * 1.5;

  const double cap = drive.wheel_cap;
  if (std::abs(bearing) > 0.3) {
    // rotate in place toward the goal
    const double diff =
        std::clamp(bearing * drive.axle_length / (2.0 * drive.wheel_radius), -cap, cap);
    return {-diff, diff};
  }
  const double base = std::clamp(dist / drive.wheel_radius, 0.0, cap);
  const double diff = std::clamp(bearing * drive.axle_length / (2.0 * drive.wheel_radius),
                                 -0.5 * cap, 0.5 * cap);
  return {std::clamp(base - diff, -cap, cap), std::clamp(base + diff, -cap, cap)};
}

LeadEvalResult run_oracle_pipeline(int trials, const LeadConfig& cfg, std::mt19937_64& rng) {
  cfg.arena.validate();
  LeadEvalResult res;
  long steps_sum = 0;
  int wins = 0;
  for (int i = 0; i < trials; ++i) {
    RobotPose pose = random_pose(cfg.arena, rng);
    const RobotPose start = pose;
    bool success = cfg.arena.in_goal(pose.x, pose.y);
    int steps = 0;
    while (!success && steps < cfg.arena.max_steps) {
      const auto tones = oracle_sender_tones(pose, cfg.arena);
      std::vector<double> spectra = channel(tones[0], cfg.tone, rng);
      const std::vector<double> s2 = channel(tones[1], cfg.tone, rng);
      spectra.insert(spectra.end(), s2.begin(), s2.end());
      const auto wheels = oracle_receiver_wheels(spectra, cfg.tone, cfg.drive);
      pose = kinematics_step(pose, wheels[0], wheels[1], cfg.drive, cfg.arena);
      ++steps;
      success = cfg.arena.in_goal(pose.x, pose.y);
    }
    res.rows.push_back({i, start, steps, success});
    steps_sum += steps;
    if (success) ++wins;
  }
  res.success_rate = double(wins) / trials;
  res.mean_steps = double(steps_sum) / trials;
  return res;
}

}  // namespace emcom
