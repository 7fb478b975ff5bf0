// One-way communication on a unit ring: an immobile sender watches the
// receiver through 30 one-hot sensors and emits two sequential continuous
// signals; the receiver then moves once. Channel noise is injectable and the
// discretization of the learned code is measurable.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emcom/net.hpp"
#include "emcom/rl.hpp"

namespace emcom {

inline constexpr int kRingSensors = 30;
inline constexpr int kSignalSteps = 2;
inline constexpr double kMoveScale = 0.5;  // one step can reach any point on the ring

double wrap_unit(double x);          // into [0,1)
double signed_arc(double from, double to);  // shortest signed arc, in (-0.5, 0.5]

struct NoiseConfig {
  enum class Kind { None, Gaussian };
  Kind kind = Kind::None;
  double sigma = 0.0;

  static NoiseConfig none() { return {}; }
  static NoiseConfig gaussian(double sigma);
  void validate() const;  // sigma == 0 <=> kind none
};

struct RingConfig {
  // Goal arc half-width 0.125: four "rough location" quarters exactly cover
  // the ring, so a 2-bit code suffices for one-step goal reaching.
  double goal_halfwidth = 0.125;
  int hidden = 30;
  double init_scale = 0.5;
  NoiseConfig channel_noise;  // applied during training episodes
  TdConfig td;

  RingConfig() {
    td.gamma = 0.9;
    td.critic_learning_rate = 0.05;
    td.actor_learning_rate = 0.1;
    td.exploration_sigma = 0.5;  // wide early exploration finds distant goals
    td.exploration_sigma_end = 0.05;
  }

  NetSpec sender_spec() const;    // 30 in -> recurrent hidden -> [actor tanh, critic id]
  NetSpec receiver_spec() const;  // 1 in  -> recurrent hidden -> [actor tanh, critic id]
};

// One-hot over the 30 equal arc bins [k/30, (k+1)/30).
std::vector<double> sense(double x);

// signal + Gaussian(0, sigma) when enabled; never clipped.
double transmit(double signal, const NoiseConfig& noise, std::mt19937_64& rng);

enum class Verdict { Reached, Overshoot, Short };
const char* verdict_name(Verdict v);

// Single directed move of |displacement| <= 0.5 from x_before; the sender
// sits at 0 with a goal arc of half-width g around it. Overshoot means the
// path crossed more than g beyond the sender.
Verdict goal_verdict(double x_before, double displacement, double g);

struct CommTrace {
  double x0 = 0.0;
  std::array<double, kSignalSteps> sent{};      // pre-channel (post exploration)
  std::array<double, kSignalSteps> received{};  // post-channel
  std::array<std::vector<double>, kSignalSteps> receiver_states{};
  double displacement = 0.0;
  double x_final = 0.0;
  Verdict verdict = Verdict::Short;
  double reward = 0.0;

  std::vector<StepIO> sender_io, receiver_io;
  std::vector<TdStep> sender_td, receiver_td;
};

// Exploration noise (stddev explore_sigma, 0 = off) perturbs executed actor
// outputs; the applied noise is recorded so learning targets stay well
// defined. Channel noise perturbs the transmitted signals only.
CommTrace run_comm_episode(const NetParams& sender, const NetParams& receiver, double x0,
                           double goal_halfwidth, const NoiseConfig& channel_noise,
                           std::mt19937_64& rng, double explore_sigma);

// One TD actor-critic update per agent from its own half of the trace.
void train_pair_episode(NetParams& sender, NetParams& receiver, const CommTrace& trace,
                        const TdConfig& td);

class RingTrainer {
 public:
  RingTrainer(RingConfig cfg, std::uint64_t master_seed);

  const CommTrace& run_episode(long total_episodes);  // anneals exploration
  long episode_index() const { return episode_; }

  NetParams& sender() { return sender_; }
  NetParams& receiver() { return receiver_; }
  const NetParams& sender() const { return sender_; }
  const NetParams& receiver() const { return receiver_; }

  std::string rng_state() const;
  void restore(const std::string& rng_state, long episode);

 private:
  RingConfig cfg_;
  NetParams sender_, receiver_;
  std::mt19937_64 rng_;
  long episode_ = 0;
  CommTrace last_;
};

struct RingEvalRow {
  int trial = 0;
  double x0 = 0.0;
  Verdict verdict = Verdict::Short;
};

struct RingEvalResult {
  std::vector<RingEvalRow> rows;
  double success_rate = 0.0;
};

// Greedy (no exploration) evaluation; start locations on a uniform grid when
// grid_starts is set, uniform random otherwise.
RingEvalResult eval_pair(const NetParams& sender, const NetParams& receiver, int trials,
                         double goal_halfwidth, const NoiseConfig& channel_noise,
                         std::mt19937_64& rng, bool grid_starts = false);

struct AtlasRow {
  double x = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
};

// Deterministic no-noise sweep of the sender over a uniform grid.
std::vector<AtlasRow> signal_atlas(const NetParams& sender, int resolution);

struct CodeMap {
  double score = 0.0;          // fraction of signal values with |s| >= 0.8
  int distinct_codes = 0;      // sign pairs that actually occur
  std::array<int, 4> arcs_per_code{};   // contiguous arcs per sign pair (--, -+, +-, ++)
  std::array<int, 4> points_per_code{};
  double consistency = 0.0;    // best-rotation majority agreement with ring quarters
  double quarter_offset = 0.0; // rotation that achieved it
};

CodeMap discretization_score(const std::vector<AtlasRow>& atlas);

}  // namespace emcom
