#include "emcom/rl.hpp"

#include <algorithm>
#include <stdexcept>

namespace emcom {

int sample_binary(double p_plus, std::mt19937_64& rng) {
  if (p_plus < 0.0 || p_plus > 1.0)
    throw std::invalid_argument("sample_binary: probability out of [0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p_plus ? 1 : -1;
}

std::vector<double> reinforce_targets(std::span<const BinaryDecision> decisions,
                                      Outcome outcome, const ReinforceConfig& cfg) {
  if (decisions.empty()) throw std::invalid_argument("reinforce_targets: no decisions");
  if (outcome == Outcome::Neutral) return {};
  const double push = outcome == Outcome::Reward ? cfg.reward_push : cfg.penalty_push;
  if (push <= 0.0 || push > 1.0)
    throw std::invalid_argument("reinforce_targets: push strength out of (0,1]");

  std::vector<double> targets;
  targets.reserve(decisions.size());
  for (const BinaryDecision& d : decisions) {
    const double taken = (d.sampled + 1) * 0.5;  // 1 for +1, 0 for -1
    const double q = outcome == Outcome::Reward ? taken : 1.0 - taken;
    targets.push_back(std::clamp(d.p_plus + push * (q - d.p_plus), 0.01, 0.99));
  }
  return targets;
}

void TdConfig::validate() const {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("TdConfig: gamma out of [0,1)");
  if (critic_learning_rate <= 0.0 || actor_learning_rate <= 0.0)
    throw std::invalid_argument("TdConfig: learning rates must be > 0");
  if (exploration_sigma < 0.0 || exploration_sigma_end < 0.0)
    throw std::invalid_argument("TdConfig: exploration sigma must be >= 0");
}

double TdConfig::sigma_at(long episode, long total_episodes) const {
  if (total_episodes <= 1) return exploration_sigma;
  const double f = static_cast<double>(episode) / static_cast<double>(total_episodes - 1);
  return exploration_sigma + (exploration_sigma_end - exploration_sigma) * std::clamp(f, 0.0, 1.0);
}

double td_error(const TdStep& step, double next_value, double gamma) {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("td_error: gamma out of [0,1)");
  const double v_next = step.terminal ? 0.0 : next_value;
  return step.reward + gamma * v_next - step.value;
}

ActorCriticTargets actor_critic_targets(std::span<const TdStep> trace, const TdConfig& cfg) {
  cfg.validate();
  if (trace.empty() || !trace.back().terminal)
    throw std::invalid_argument("actor_critic_targets: trace must end with a terminal step");

  ActorCriticTargets out;
  out.critic.resize(trace.size());
  out.actor.resize(trace.size());
  out.td.resize(trace.size());
  for (size_t t = 0; t < trace.size(); ++t) {
    const TdStep& step = trace[t];
    if (step.noise.size() != step.actor_output.size())
      throw std::invalid_argument("actor_critic_targets: noise/actor size mismatch");
    const double v_next = t + 1 < trace.size() ? trace[t + 1].value : 0.0;
    const double delta = td_error(step, v_next, cfg.gamma);
    out.critic[t] = step.reward + cfg.gamma * (step.terminal ? 0.0 : v_next);
    out.td[t] = delta;
    std::vector<double> at(step.actor_output.size());
    for (size_t j = 0; j < at.size(); ++j)
      at[j] = std::clamp(step.actor_output[j] + delta * step.noise[j], -1.0, 1.0);
    out.actor[t] = std::move(at);
  }
  return out;
}

void apply_actor_critic_update(NetParams& net, std::span<const StepIO> episode,
                               std::span<const TdStep> trace, const TdConfig& cfg,
                               const HeadLayout& heads) {
  if (episode.size() != trace.size())
    throw std::invalid_argument("apply_actor_critic_update: episode/trace length mismatch");
  const ActorCriticTargets targets = actor_critic_targets(trace, cfg);

  const double base_lr = std::max(cfg.actor_learning_rate, cfg.critic_learning_rate);
  const double ka = cfg.actor_learning_rate / base_lr;
  const double kc = cfg.critic_learning_rate / base_lr;
  const size_t out_size = static_cast<size_t>(net.spec.output_size());

  std::vector<StepTargets> st(episode.size());
  for (size_t t = 0; t < episode.size(); ++t) {
    const std::vector<double>& y = episode[t].output();
    st[t].value.assign(out_size, 0.0);
    st[t].mask.assign(out_size, 0);
    for (size_t j = 0; j < heads.actor_outputs.size(); ++j) {
      const int o = heads.actor_outputs[j];
      st[t].value[o] = y[o] + ka * (targets.actor[t][j] - y[o]);
      st[t].mask[o] = 1;
    }
    st[t].value[heads.critic_output] =
        y[heads.critic_output] + kc * (targets.critic[t] - y[heads.critic_output]);
    st[t].mask[heads.critic_output] = 1;
  }
  net = sgd_apply(net, bptt(net, episode, st), base_lr);
}

}  // namespace emcom
