// Four of eight agents sit on a ring, exchange binary signals over three
// rounds, then each commits to one of two paths; adjacent agents that pick
// the same path collide. Each agent trains only on its own outcome.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "emcom/net.hpp"
#include "emcom/rl.hpp"

namespace emcom {

inline constexpr int kPoolSize = 8;
inline constexpr int kSeats = 4;
inline constexpr int kRounds = 3;
inline constexpr int kCombinations = 70;  // C(8,4)

struct NegotiationConfig {
  int hidden = 30;
  double init_scale = 0.5;
  ReinforceConfig reinforce;

  NetSpec agent_spec() const;  // 4 inputs -> recurrent hidden -> 2 sigmoid outputs
};

struct AgentPool {
  std::vector<NetParams> agents;  // exactly kPoolSize entries
};

AgentPool make_pool(const NegotiationConfig& cfg, std::uint64_t master_seed);

// Ordered assignment of 4 distinct agent ids to ring positions 0..3.
struct Seating {
  std::array<int, kSeats> agent_at{};
};

// Uniform over the 8*7*6*5 ordered assignments.
Seating draw_seating(std::mt19937_64& rng);

struct NegotiationLog {
  Seating seating;
  std::array<std::array<int, kSeats>, kRounds> signals{};        // {-1,+1}
  std::array<std::array<double, kSeats>, kRounds> signal_probs{};
  std::array<int, kSeats> actions{};
  std::array<double, kSeats> action_probs{};
  std::array<Outcome, kSeats> outcomes{};

  bool collision_free() const;
  int penalized_count() const;
};

struct NegotiationEpisode {
  NegotiationLog log;
  std::array<std::vector<StepIO>, kSeats> traces;  // per seat, kRounds steps each
};

// Positions p and p+1 (mod 4) are both penalized when their actions match.
std::array<Outcome, kSeats> judge(const std::array<int, kSeats>& actions);

// Round 1 sees all zeros; later rounds see the previous round's signals in
// relative order [self, right neighbor, opposite, left neighbor]. The final
// action is read from the round-3 forward pass. Greedy mode thresholds the
// probability outputs at 0.5 instead of sampling.
NegotiationEpisode run_negotiation(const AgentPool& pool, const Seating& seating,
                                   std::mt19937_64& rng, bool greedy = false);

// One independent reinforcement step for every seated agent.
void train_episode(AgentPool& pool, const NegotiationEpisode& episode,
                   const NegotiationConfig& cfg);

class NegotiationTrainer {
 public:
  NegotiationTrainer(NegotiationConfig cfg, std::uint64_t master_seed);

  const NegotiationLog& run_episode();
  long episode_index() const { return episode_; }

  AgentPool& pool() { return pool_; }
  const AgentPool& pool() const { return pool_; }

  std::string rng_state() const;
  void restore(const std::string& rng_state, long episode);

 private:
  NegotiationConfig cfg_;
  AgentPool pool_;
  std::mt19937_64 rng_;
  long episode_ = 0;
  NegotiationLog last_;
};

struct CombinationResult {
  int combination_id = 0;          // index in lexicographic order of sorted 4-subsets
  std::array<int, kSeats> agents{};
  int placements = 0;
  int successes = 0;
};

struct EvalResult {
  std::vector<CombinationResult> table;   // kCombinations rows
  std::array<double, kPoolSize> stubbornness{};  // rate of keeping the round-1 signal
  std::array<int, kPoolSize> seated_episodes{};
  double overall_success = 0.0;
  int state_driven_flips = 0;  // greedy transcripts where inputs repeat but the signal changed
  std::vector<NegotiationLog> transcripts;
};

// Greedy evaluation over all 70 unordered combinations, `placements` random
// position permutations each.
EvalResult evaluate_pool(const AgentPool& pool, int placements, std::mt19937_64& rng,
                         bool keep_transcripts = false);

std::vector<std::array<int, kSeats>> all_combinations();

// True when some agent's inputs at two consecutive rounds were identical but
// its emitted signal differed (possible only through the recurrent state).
bool has_state_driven_flip(const NegotiationLog& log);

}  // namespace emcom
