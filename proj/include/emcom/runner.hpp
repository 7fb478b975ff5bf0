// Experiment orchestration: dispatch, metric windows, checkpoint/resume,
// deterministic CSV/JSON artifacts, and plot-data emission.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emcom/config.hpp"

namespace emcom {

enum class Job { NegotiationTrain, RingTrain, LeadPretrain, LeadTrain };

const char* job_name(Job job);

struct MetricsRow {
  std::string phase;  // train | pretrain | comm
  long window_start = 0;
  long window_end = 0;
  std::vector<std::pair<std::string, double>> values;
};

struct RunRecord {
  std::string run_id;
  std::string version;
  ExperimentConfig config;
  bool completed = false;
  long episodes_done = 0;
  double wall_clock_sec = 0.0;
  std::map<std::string, double> final_metrics;
  std::vector<std::string> artifacts;  // paths relative to the run directory
};

// Executes (or resumes) a training run in cfg.out_dir. `stop_after` aborts
// after that many total episodes without writing final artifacts, leaving
// only the periodic checkpoints — an in-process stand-in for a kill.
RunRecord run(const ExperimentConfig& cfg, Job job, std::optional<long> stop_after = {});

// Plot-ready files derived from a finished run directory: a learning-curve
// CSV, negotiation transcript tables, and the ring signal atlas.
std::vector<std::string> emit_plotdata(const std::string& run_dir);

// --- evaluation artifacts (shared by the CLI and tests) ---

struct NegotiationEvalFiles {
  double success = 0.0;
  int state_driven_flips = 0;
  std::string table_csv;
  std::string stubbornness_csv;
};
NegotiationEvalFiles write_negotiation_eval(const AgentPool& pool, int placements,
                                            std::uint64_t seed, const std::string& out_dir);

struct RingEvalFiles {
  double success = 0.0;
  CodeMap map;
  std::string eval_csv;
  std::string summary_json;
};
RingEvalFiles write_ring_eval(const NetParams& sender, const NetParams& receiver,
                              const RingSettings& settings, double eval_noise_sigma,
                              std::uint64_t seed, const std::string& out_dir);

struct LeadEvalFiles {
  double success = 0.0;
  double mean_steps = 0.0;
  std::string eval_csv;
  std::string summary_json;
};
LeadEvalFiles write_lead_eval(const NetParams& sender, const NetParams& receiver,
                              const LeadSettings& settings, int trials, std::uint64_t seed,
                              const std::string& out_dir);

}  // namespace emcom
