// Experiment configuration: one JSON document with strict key checking, a
// master seed, and per-experiment overrides for every module default.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emcom/lead.hpp"
#include "emcom/negotiation.hpp"
#include "emcom/ring.hpp"

namespace emcom {

inline constexpr const char* kVersionTag = "emcom 0.1.0";

enum class ExperimentKind { Negotiation, Ring, Lead };

const char* experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

struct NegotiationSettings {
  long episodes = 200000;
  NegotiationConfig cfg;  // hidden, init_scale, pushes, learning rate
  int eval_placements = 24;
};

struct RingSettings {
  long episodes = 100000;
  RingConfig cfg;            // geometry, nets, TD parameters
  double noise_sigma = 0.1;  // channel noise during training
  double eval_noise_sigma = 0.0;
  int eval_trials = 200;
  int atlas_resolution = 240;
};

struct LeadSettings {
  long episodes = 12000;           // communication phase
  long pretrain_episodes = 10000;  // direct-drive phase
  LeadConfig cfg;
  std::string init = "transfer";  // transfer | scratch
  std::string pretrained_path;    // optional checkpoint for the transfer init
  double transfer_output_scale = 0.3;
  int eval_trials = 100;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Negotiation;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
  long metrics_window = 1000;
  double checkpoint_every_fraction = 0.1;
  long transcript_every = 1000;  // negotiation transcript cadence; 0 = off

  NegotiationSettings negotiation;
  RingSettings ring;
  LeadSettings lead;

  void validate() const;  // throws std::invalid_argument naming the key
};

// Parses, validates and fills defaults. Empty or whitespace-only files give
// the default config. Unknown keys are rejected by full key path.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Canonical JSON serialization; load(save(c)) == c.
std::string config_to_json(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// Applies one `key=value` override with dotted key paths, e.g.
// `ring.noise_sigma=0.25` or `seed=7`.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b);

// Stable hash of the canonical JSON with the episode budget masked out, used
// to decide whether a checkpoint belongs to a config.
std::uint64_t config_resume_hash(const ExperimentConfig& cfg);

}  // namespace emcom
