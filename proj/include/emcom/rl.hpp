// The two decentralized learning rules, both expressed as training targets
// for bptt: outcome-driven reinforcement of stochastic binary output
// probabilities, and TD actor-critic target generation for continuous actors.
#pragma once

#include <random>
#include <span>
#include <vector>

#include "emcom/net.hpp"

namespace emcom {

enum class Outcome { Reward, Penalty, Neutral };

struct BinaryDecision {
  enum class Role { Signal, Action };

  double p_plus = 0.5;  // network output: probability of emitting +1
  int sampled = 1;      // -1 or +1
  int t = 0;
  Role role = Role::Signal;
};

struct ReinforceConfig {
  double reward_push = 0.8;   // in (0,1]; convex push toward the taken value
  double penalty_push = 0.3;  // in (0,1]; gentler push away from it
  double learning_rate = 0.1;
};

// +1 with the given probability, else -1.
int sample_binary(double p_plus, std::mt19937_64& rng);

// One probability target per decision: p + push*(q - p) with q = (v+1)/2 on
// reward and 1-(v+1)/2 on penalty, clamped to [0.01, 0.99]. Empty on neutral.
std::vector<double> reinforce_targets(std::span<const BinaryDecision> decisions,
                                      Outcome outcome, const ReinforceConfig& cfg);

struct TdConfig {
  double gamma = 0.9;                // discount, in [0,1)
  double critic_learning_rate = 0.05;
  double actor_learning_rate = 0.05;
  double exploration_sigma = 0.1;      // stddev of Gaussian noise on actor outputs
  double exploration_sigma_end = 0.02; // linear anneal target over a training run

  void validate() const;
  double sigma_at(long episode, long total_episodes) const;
};

struct TdStep {
  double value = 0.0;   // critic output V_t
  double reward = 0.0;  // r_t
  bool terminal = false;
  std::vector<double> actor_output;  // emitted (pre-noise) actor outputs
  std::vector<double> noise;         // exploration noise actually applied
};

// delta = r + gamma*V_next - V_t, with V_next forced to 0 on terminal steps.
double td_error(const TdStep& step, double next_value, double gamma);

struct ActorCriticTargets {
  std::vector<double> critic;               // per step: r_t + gamma*V_{t+1}
  std::vector<std::vector<double>> actor;   // per step: emitted + delta*noise, clamped
  std::vector<double> td;                   // the per-step TD errors
};

// Trace must end with a terminal step. Actor targets are clamped to the tanh
// range [-1, 1].
ActorCriticTargets actor_critic_targets(std::span<const TdStep> trace, const TdConfig& cfg);

// Which net outputs carry the actor values (in TdStep order) and which one
// the critic value.
struct HeadLayout {
  std::vector<int> actor_outputs;
  int critic_output = 0;
};

// One bptt/sgd step from an episode and its TD trace. Per-head learning
// rates are folded into the targets (gradients are linear in the output
// error), so a single backward pass is exact.
void apply_actor_critic_update(NetParams& net, std::span<const StepIO> episode,
                               std::span<const TdStep> trace, const TdConfig& cfg,
                               const HeadLayout& heads);

}  // namespace emcom
