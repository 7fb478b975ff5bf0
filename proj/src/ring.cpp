#include "emcom/ring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "emcom/rng.hpp"

namespace emcom {

double wrap_unit(double x) {
  double w = x - std::floor(x);
  if (w >= 1.0) w = 0.0;  // guard against floor rounding at the seam
  return w;
}

double signed_arc(double from, double to) {
  double d = wrap_unit(to - from);
  if (d > 0.5) d -= 1.0;
  return d;
}

NoiseConfig NoiseConfig::gaussian(double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("NoiseConfig: sigma must be >= 0");
  NoiseConfig n;
  n.kind = sigma == 0.0 ? Kind::None : Kind::Gaussian;
  n.sigma = sigma;
  return n;
}

void NoiseConfig::validate() const {
  if (sigma < 0.0) throw std::invalid_argument("NoiseConfig: sigma must be >= 0");
  if ((sigma == 0.0) != (kind == Kind::None))
    throw std::invalid_argument("NoiseConfig: sigma == 0 iff kind is none");
}

NetSpec RingConfig::sender_spec() const {
  NetSpec s = make_spec(kRingSensors, {hidden}, 2, true, Activation::Tanh, Activation::Tanh);
  s.output_activations[1] = Activation::Identity;  // critic
  return s;
}

NetSpec RingConfig::receiver_spec() const {
  NetSpec s = make_spec(1, {hidden}, 2, true, Activation::Tanh, Activation::Tanh);
  s.output_activations[1] = Activation::Identity;
  return s;
}

std::vector<double> sense(double x) {
  if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("sense: x must lie in [0,1)");
  std::vector<double> v(kRingSensors, 0.0);
  int bin = static_cast<int>(x * kRingSensors);
  if (bin >= kRingSensors) bin = kRingSensors - 1;
  v[bin] = 1.0;
  return v;
}

double transmit(double signal, const NoiseConfig& noise, std::mt19937_64& rng) {
  noise.validate();
  if (!std::isfinite(signal)) throw std::invalid_argument("transmit: signal must be finite");
  if (noise.kind == NoiseConfig::Kind::None) return signal;
  std::normal_distribution<double> n(0.0, noise.sigma);
  return signal + n(rng);
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Reached: return "reached";
    case Verdict::Overshoot: return "overshoot";
    case Verdict::Short: return "short";
  }
  return "?";
}

Verdict goal_verdict(double x_before, double displacement, double g) {
  if (std::abs(displacement) > 0.5 + 1e-12)
    throw std::invalid_argument("goal_verdict: |displacement| must be <= 0.5");
  const double x0 = wrap_unit(x_before);
  // Arc length to the sender (at 0) in the direction of travel.
  double to_sender;
  if (displacement > 0.0)
    to_sender = x0 == 0.0 ? 0.0 : 1.0 - x0;
  else if (displacement < 0.0)
    to_sender = x0;
  else
    to_sender = std::abs(signed_arc(x0, 0.0));
  if (displacement != 0.0 && std::abs(displacement) > to_sender + g)
    return Verdict::Overshoot;
  const double x_final = wrap_unit(x0 + displacement);
  if (std::abs(signed_arc(x_final, 0.0)) <= g) return Verdict::Reached;
  return Verdict::Short;
}

namespace {

struct ActorSample {
  double emitted;   // raw actor output
  double executed;  // emitted + exploration noise, clamped to [-1, 1]
  double noise;     // executed - emitted (the noise actually applied)
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

}  // namespace

CommTrace run_comm_episode(const NetParams& sender, const NetParams& receiver, double x0,
                           double goal_halfwidth, const NoiseConfig& channel_noise,
                           std::mt19937_64& rng, double explore_sigma) {
  if (sender.spec.input_size != kRingSensors || sender.spec.output_size() != 2)
    throw std::invalid_argument("run_comm_episode: sender must map 30 sensors to actor+critic");
  if (receiver.spec.input_size != 1 || receiver.spec.output_size() != 2)
    throw std::invalid_argument("run_comm_episode: receiver must map 1 signal to actor+critic");

  CommTrace trace;
  trace.x0 = wrap_unit(x0);
  const std::vector<double> sensors = sense(trace.x0);

  RnnState s_state = initial_state(sender.spec);
  RnnState r_state = initial_state(receiver.spec);
  double receiver_emitted = 0.0, receiver_value = 0.0;
  ActorSample receiver_act{};

  for (int step = 0; step < kSignalSteps; ++step) {
    ForwardResult sf = forward(sender, s_state, sensors);
    s_state = sf.state;
    const ActorSample sig = sample_actor(sf.output[0], explore_sigma, rng);
    trace.sent[step] = sig.executed;
    trace.received[step] = transmit(sig.executed, channel_noise, rng);
    trace.sender_io.push_back(std::move(sf.io));
    // The perturbation the sender's action actually suffered includes the
    // channel: what the receiver heard minus what the sender meant. During
    // evaluation (explore off) nothing is recorded as applied noise.
    const double applied = explore_sigma > 0.0 ? trace.received[step] - sig.emitted : 0.0;
    trace.sender_td.push_back(
        {sf.output[1], 0.0, step == kSignalSteps - 1, {sig.emitted}, {applied}});

    const std::vector<double> rx{trace.received[step]};
    ForwardResult rf = forward(receiver, r_state, rx);
    r_state = rf.state;
    trace.receiver_states[step] = r_state.h;
    receiver_emitted = rf.output[0];
    receiver_value = rf.output[1];
    trace.receiver_io.push_back(std::move(rf.io));
    if (step == kSignalSteps - 1) {
      receiver_act = sample_actor(receiver_emitted, explore_sigma, rng);
      trace.receiver_td.push_back(
          {receiver_value, 0.0, true, {receiver_act.emitted}, {receiver_act.noise}});
    } else {
      // The actor output is not executed before the second signal arrives.
      trace.receiver_td.push_back({receiver_value, 0.0, false, {receiver_emitted}, {0.0}});
    }
  }

  trace.displacement = receiver_act.executed * kMoveScale;
  trace.x_final = wrap_unit(trace.x0 + trace.displacement);
  trace.verdict = goal_verdict(trace.x0, trace.displacement, goal_halfwidth);
  trace.reward = trace.verdict == Verdict::Reached ? 1.0 : 0.0;
  trace.sender_td.back().reward = trace.reward;
  trace.receiver_td.back().reward = trace.reward;
  return trace;
}

void train_pair_episode(NetParams& sender, NetParams& receiver, const CommTrace& trace,
                        const TdConfig& td) {
  const HeadLayout heads{{0}, 1};
  apply_actor_critic_update(sender, trace.sender_io, trace.sender_td, td, heads);
  apply_actor_critic_update(receiver, trace.receiver_io, trace.receiver_td, td, heads);
}

RingTrainer::RingTrainer(RingConfig cfg, std::uint64_t master_seed)
    : cfg_(cfg),
      sender_(init_params(cfg.sender_spec(), derive_seed(master_seed, "ring.init.sender"),
                          cfg.init_scale)),
      receiver_(init_params(cfg.receiver_spec(), derive_seed(master_seed, "ring.init.receiver"),
                            cfg.init_scale)),
      rng_(make_stream(master_seed, "ring.train")) {
  cfg_.channel_noise.validate();
  cfg_.td.validate();
}

const CommTrace& RingTrainer::run_episode(long total_episodes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x0 = u(rng_);
  const double sigma = cfg_.td.sigma_at(episode_, total_episodes);
  last_ = run_comm_episode(sender_, receiver_, x0, cfg_.goal_halfwidth, cfg_.channel_noise,
                           rng_, sigma);
  train_pair_episode(sender_, receiver_, last_, cfg_.td);
  ++episode_;
  return last_;
}

std::string RingTrainer::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void RingTrainer::restore(const std::string& rng_state, long episode) {
  std::istringstream is(rng_state);
  is >> rng_;
  if (!is) throw std::runtime_error("RingTrainer: bad rng state");
  episode_ = episode;
}

RingEvalResult eval_pair(const NetParams& sender, const NetParams& receiver, int trials,
                         double goal_halfwidth, const NoiseConfig& channel_noise,
                         std::mt19937_64& rng, bool grid_starts) {
  if (trials < 1) throw std::invalid_argument("eval_pair: trials must be >= 1");
  RingEvalResult res;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int reached = 0;
  for (int i = 0; i < trials; ++i) {
    const double x0 = grid_starts ? (i + 0.5) / trials : u(rng);
    CommTrace t = run_comm_episode(sender, receiver, x0, goal_halfwidth, channel_noise, rng,
                                   0.0);
    res.rows.push_back({i, t.x0, t.verdict});
    if (t.verdict == Verdict::Reached) ++reached;
  }
  res.success_rate = double(reached) / trials;
  return res;
}

std::vector<AtlasRow> signal_atlas(const NetParams& sender, int resolution) {
  if (resolution < 4) throw std::invalid_argument("signal_atlas: resolution must be >= 4");
  std::vector<AtlasRow> atlas;
  atlas.reserve(resolution);
  std::mt19937_64 unused(0);
  for (int i = 0; i < resolution; ++i) {
    const double x = (i + 0.5) / resolution;
    const std::vector<double> sensors = sense(x);
    RnnState state = initial_state(sender.spec);
    AtlasRow row;
    row.x = x;
    ForwardResult f1 = forward(sender, state, sensors);
    row.s1 = f1.output[0];
    ForwardResult f2 = forward(sender, f1.state, sensors);
    row.s2 = f2.output[0];
    atlas.push_back(row);
  }
  return atlas;
}

namespace {

int code_of(double s1, double s2) {
  return (s1 >= 0.0 ? 2 : 0) + (s2 >= 0.0 ? 1 : 0);  // (-,-)=0 (-,+)=1 (+,-)=2 (+,+)=3
}

}  // namespace

CodeMap discretization_score(const std::vector<AtlasRow>& atlas) {
  if (atlas.empty()) throw std::invalid_argument("discretization_score: empty atlas");
  const int n = static_cast<int>(atlas.size());
  CodeMap map;

  int extreme = 0;
  std::vector<int> codes(n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(atlas[i].s1) >= 0.8) ++extreme;
    if (std::abs(atlas[i].s2) >= 0.8) ++extreme;
    codes[i] = code_of(atlas[i].s1, atlas[i].s2);
    ++map.points_per_code[codes[i]];
  }
  map.score = extreme / double(2 * n);

  for (int c = 0; c < 4; ++c)
    if (map.points_per_code[c] > 0) ++map.distinct_codes;

  // Contiguous arcs per code, circularly.
  for (int i = 0; i < n; ++i) {
    const int prev = codes[(i + n - 1) % n];
    if (codes[i] != prev) ++map.arcs_per_code[codes[i]];
  }
  for (int c = 0; c < 4; ++c)
    if (map.points_per_code[c] == n) map.arcs_per_code[c] = 1;  // single uniform code

  // Majority agreement with four equal ring quarters; the learned partition
  // carries no preferred phase, so the quarter frame is rotated to fit.
  double best = 0.0, best_offset = 0.0;
  for (int shift = 0; shift < n; ++shift) {
    std::array<std::array<int, 4>, 4> hist{};  // quarter x code
    for (int i = 0; i < n; ++i) {
      const double x = wrap_unit(atlas[i].x - atlas[shift].x);
      const int quarter = std::min(3, static_cast<int>(x * 4.0));
      ++hist[quarter][codes[i]];
    }
    int agree = 0;
    for (int q = 0; q < 4; ++q)
      agree += *std::max_element(hist[q].begin(), hist[q].end());
    const double consistency = agree / double(n);
    if (consistency > best) {
      best = consistency;
      best_offset = atlas[shift].x;
    }
  }
  map.consistency = best;
  map.quarter_offset = best_offset;
  return map;
}

}  // namespace emcom
