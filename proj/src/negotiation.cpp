#include "emcom/negotiation.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "emcom/rng.hpp"

namespace emcom {

NetSpec NegotiationConfig::agent_spec() const {
  return make_spec(kSeats, {hidden}, 2, true, Activation::Tanh, Activation::Sigmoid);
}

AgentPool make_pool(const NegotiationConfig& cfg, std::uint64_t master_seed) {
  AgentPool pool;
  pool.agents.reserve(kPoolSize);
  for (int i = 0; i < kPoolSize; ++i)
    pool.agents.push_back(init_params(cfg.agent_spec(),
                                      derive_seed(master_seed, "negotiation.init", i),
                                      cfg.init_scale));
  return pool;
}

Seating draw_seating(std::mt19937_64& rng) {
  std::array<int, kPoolSize> ids;
  for (int i = 0; i < kPoolSize; ++i) ids[i] = i;
  Seating s;
  for (int p = 0; p < kSeats; ++p) {
    std::uniform_int_distribution<int> pick(p, kPoolSize - 1);
    std::swap(ids[p], ids[pick(rng)]);
    s.agent_at[p] = ids[p];
  }
  return s;
}

bool NegotiationLog::collision_free() const {
  for (Outcome o : outcomes)
    if (o != Outcome::Reward) return false;
  return true;
}

int NegotiationLog::penalized_count() const {
  int n = 0;
  for (Outcome o : outcomes)
    if (o == Outcome::Penalty) ++n;
  return n;
}

std::array<Outcome, kSeats> judge(const std::array<int, kSeats>& actions) {
  for (int a : actions)
    if (a != -1 && a != 1) throw std::invalid_argument("judge: actions must be -1 or +1");
  std::array<Outcome, kSeats> out;
  for (int p = 0; p < kSeats; ++p) {
    const bool clash = actions[p] == actions[(p + 1) % kSeats] ||
                       actions[p] == actions[(p + 3) % kSeats];
    out[p] = clash ? Outcome::Penalty : Outcome::Reward;
  }
  return out;
}

NegotiationEpisode run_negotiation(const AgentPool& pool, const Seating& seating,
                                   std::mt19937_64& rng, bool greedy) {
  if (pool.agents.size() != kPoolSize)
    throw std::invalid_argument("run_negotiation: pool must hold 8 agents");

  NegotiationEpisode ep;
  ep.log.seating = seating;

  std::array<RnnState, kSeats> states;
  for (int p = 0; p < kSeats; ++p)
    states[p] = initial_state(pool.agents[seating.agent_at[p]].spec);

  std::array<int, kSeats> prev_signals{};  // round 1 input: all zeros
  std::array<double, kSeats> last_action_prob{};

  auto choose = [&](double prob) {
    return greedy ? (prob >= 0.5 ? 1 : -1) : sample_binary(prob, rng);
  };

  for (int round = 0; round < kRounds; ++round) {
    std::array<int, kSeats> next_signals{};
    for (int p = 0; p < kSeats; ++p) {
      std::vector<double> input(kSeats, 0.0);
      if (round > 0) {
        // relative order: self, right neighbor, opposite, left neighbor
        for (int k = 0; k < kSeats; ++k)
          input[k] = static_cast<double>(prev_signals[(p + k) % kSeats]);
      }
      const NetParams& net = pool.agents[seating.agent_at[p]];
      ForwardResult r = forward(net, states[p], input);
      states[p] = r.state;
      ep.traces[p].push_back(std::move(r.io));

      const double p_signal = r.output[0];
      next_signals[p] = choose(p_signal);
      ep.log.signals[round][p] = next_signals[p];
      ep.log.signal_probs[round][p] = p_signal;
      last_action_prob[p] = r.output[1];
    }
    prev_signals = next_signals;
  }

  for (int p = 0; p < kSeats; ++p) {
    ep.log.action_probs[p] = last_action_prob[p];
    ep.log.actions[p] = choose(last_action_prob[p]);
  }
  ep.log.outcomes = judge(ep.log.actions);
  return ep;
}

void train_episode(AgentPool& pool, const NegotiationEpisode& episode,
                   const NegotiationConfig& cfg) {
  for (int p = 0; p < kSeats; ++p) {
    const int agent = episode.log.seating.agent_at[p];
    std::vector<BinaryDecision> decisions;
    for (int round = 0; round < kRounds; ++round)
      decisions.push_back({episode.log.signal_probs[round][p],
                           episode.log.signals[round][p], round,
                           BinaryDecision::Role::Signal});
    decisions.push_back({episode.log.action_probs[p], episode.log.actions[p],
                         kRounds - 1, BinaryDecision::Role::Action});

    const std::vector<double> targets =
        reinforce_targets(decisions, episode.log.outcomes[p], cfg.reinforce);
    if (targets.empty()) continue;

    std::vector<StepTargets> step_targets(kRounds);
    for (int round = 0; round < kRounds; ++round) {
      step_targets[round].value = {targets[round], 0.0};
      step_targets[round].mask = {1, 0};
    }
    step_targets[kRounds - 1].value[1] = targets[kRounds];
    step_targets[kRounds - 1].mask[1] = 1;

    NetParams& net = pool.agents[agent];
    net = sgd_apply(net, bptt(net, episode.traces[p], step_targets),
                    cfg.reinforce.learning_rate);
  }
}

NegotiationTrainer::NegotiationTrainer(NegotiationConfig cfg, std::uint64_t master_seed)
    : cfg_(cfg),
      pool_(make_pool(cfg, master_seed)),
      rng_(make_stream(master_seed, "negotiation.train")) {}

const NegotiationLog& NegotiationTrainer::run_episode() {
  const Seating seating = draw_seating(rng_);
  NegotiationEpisode ep = run_negotiation(pool_, seating, rng_, false);
  train_episode(pool_, ep, cfg_);
  last_ = ep.log;
  ++episode_;
  return last_;
}

std::string NegotiationTrainer::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void NegotiationTrainer::restore(const std::string& rng_state, long episode) {
  std::istringstream is(rng_state);
  is >> rng_;
  if (!is) throw std::runtime_error("NegotiationTrainer: bad rng state");
  episode_ = episode;
}

std::vector<std::array<int, kSeats>> all_combinations() {
  std::vector<std::array<int, kSeats>> out;
  for (int a = 0; a < kPoolSize; ++a)
    for (int b = a + 1; b < kPoolSize; ++b)
      for (int c = b + 1; c < kPoolSize; ++c)
        for (int d = c + 1; d < kPoolSize; ++d) out.push_back({a, b, c, d});
  return out;
}

bool has_state_driven_flip(const NegotiationLog& log) {
  // An agent's input at round r (r >= 1) is the previous round's signal
  // vector in relative order; two consecutive rounds with identical inputs
  // but a changed signal imply state dependence.
  for (int p = 0; p < kSeats; ++p) {
    for (int round = 2; round < kRounds; ++round) {
      bool same_inputs = true;
      for (int k = 0; k < kSeats; ++k)
        if (log.signals[round - 1][(p + k) % kSeats] != log.signals[round - 2][(p + k) % kSeats])
          same_inputs = false;
      if (same_inputs && log.signals[round][p] != log.signals[round - 1][p]) return true;
    }
  }
  return false;
}

EvalResult evaluate_pool(const AgentPool& pool, int placements, std::mt19937_64& rng,
                         bool keep_transcripts) {
  if (placements < 1) throw std::invalid_argument("evaluate_pool: placements must be >= 1");
  EvalResult res;
  std::array<int, kPoolSize> kept_total{};
  long total = 0, success = 0;

  const auto combos = all_combinations();
  for (size_t ci = 0; ci < combos.size(); ++ci) {
    CombinationResult row;
    row.combination_id = static_cast<int>(ci);
    row.agents = combos[ci];
    row.placements = placements;
    for (int k = 0; k < placements; ++k) {
      std::array<int, kSeats> perm = combos[ci];
      std::shuffle(perm.begin(), perm.end(), rng);
      Seating seating;
      seating.agent_at = perm;
      NegotiationEpisode ep = run_negotiation(pool, seating, rng, true);
      if (ep.log.collision_free()) {
        ++row.successes;
        ++success;
      }
      ++total;
      if (has_state_driven_flip(ep.log)) ++res.state_driven_flips;
      for (int p = 0; p < kSeats; ++p) {
        const int agent = seating.agent_at[p];
        ++res.seated_episodes[agent];
        bool kept = true;
        for (int round = 1; round < kRounds; ++round)
          if (ep.log.signals[round][p] != ep.log.signals[0][p]) kept = false;
        if (kept) ++kept_total[agent];
      }
      if (keep_transcripts) res.transcripts.push_back(ep.log);
    }
    res.table.push_back(row);
  }
  for (int a = 0; a < kPoolSize; ++a)
    res.stubbornness[a] =
        res.seated_episodes[a] ? double(kept_total[a]) / res.seated_episodes[a] : 0.0;
  res.overall_success = total ? double(success) / double(total) : 0.0;
  return res;
}

}  // namespace emcom
