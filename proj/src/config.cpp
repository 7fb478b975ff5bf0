#include "emcom/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "emcom/rng.hpp"

namespace emcom {

using nlohmann::json;

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Negotiation: return "negotiation";
    case ExperimentKind::Ring: return "ring";
    case ExperimentKind::Lead: return "lead";
  }
  return "?";
}

ExperimentKind experiment_from_name(const std::string& name) {
  if (name == "negotiation") return ExperimentKind::Negotiation;
  if (name == "ring") return ExperimentKind::Ring;
  if (name == "lead") return ExperimentKind::Lead;
  throw std::invalid_argument("config: experiment must be negotiation|ring|lead, got '" +
                              name + "'");
}

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: key '" + key + "' " + what);
}

// Strict object reader: every present key must be consumed.
struct Reader {
  const json& obj;
  std::string prefix;
  std::set<std::string> seen;

  Reader(const json& o, std::string p) : obj(o), prefix(std::move(p)) {
    if (!o.is_object()) throw std::invalid_argument("config: '" + prefix + "' must be an object");
  }

  std::string path(const std::string& key) const {
    return prefix.empty() ? key : prefix + "." + key;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen.insert(key);
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    try {
      out = v.get<T>();
    } catch (const json::exception&) {
      fail(path(key), "has the wrong type");
    }
  }

  void get_string(const std::string& key, std::string& out) { get<std::string>(key, out); }

  const json* subobject(const std::string& key) {
    seen.insert(key);
    if (!obj.contains(key)) return nullptr;
    if (!obj.at(key).is_object()) fail(path(key), "must be an object");
    return &obj.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : obj.items())
      if (!seen.count(key)) fail(path(key), "is unknown");
  }
};

void read_negotiation(const json& j, NegotiationSettings& s) {
  Reader r(j, "negotiation");
  r.get("episodes", s.episodes);
  r.get("hidden", s.cfg.hidden);
  r.get("init_scale", s.cfg.init_scale);
  r.get("learning_rate", s.cfg.reinforce.learning_rate);
  r.get("reward_push", s.cfg.reinforce.reward_push);
  r.get("penalty_push", s.cfg.reinforce.penalty_push);
  r.get("eval_placements", s.eval_placements);
  r.finish();
}

void read_td(Reader& r, TdConfig& td) {
  r.get("gamma", td.gamma);
  r.get("critic_lr", td.critic_learning_rate);
  r.get("actor_lr", td.actor_learning_rate);
  r.get("explore_sigma", td.exploration_sigma);
  r.get("explore_sigma_end", td.exploration_sigma_end);
}

void read_ring(const json& j, RingSettings& s) {
  Reader r(j, "ring");
  r.get("episodes", s.episodes);
  r.get("hidden", s.cfg.hidden);
  r.get("init_scale", s.cfg.init_scale);
  r.get("goal_halfwidth", s.cfg.goal_halfwidth);
  r.get("noise_sigma", s.noise_sigma);
  r.get("eval_noise_sigma", s.eval_noise_sigma);
  read_td(r, s.cfg.td);
  r.get("eval_trials", s.eval_trials);
  r.get("atlas_resolution", s.atlas_resolution);
  r.finish();
}

void read_lead(const json& j, LeadSettings& s) {
  Reader r(j, "lead");
  r.get("episodes", s.episodes);
  r.get("pretrain_episodes", s.pretrain_episodes);
  r.get_string("init", s.init);
  r.get_string("pretrained", s.pretrained_path);
  r.get("sender_hidden", s.cfg.sender_hidden);
  r.get("receiver_hidden", s.cfg.receiver_hidden);
  r.get("sender_init_scale", s.cfg.sender_init_scale);
  r.get("receiver_init_scale", s.cfg.receiver_init_scale);
  r.get("transfer_output_scale", s.transfer_output_scale);
  r.get("sender_critic_lr", s.cfg.sender_critic_lr);
  r.get("sender_actor_lr", s.cfg.sender_actor_lr);
  read_td(r, s.cfg.td);
  r.get("arena_side", s.cfg.arena.side);
  r.get("goal_x", s.cfg.arena.goal_x);
  r.get("goal_y", s.cfg.arena.goal_y);
  r.get("goal_radius", s.cfg.arena.goal_radius);
  r.get("max_steps", s.cfg.arena.max_steps);
  r.get("wheel_radius", s.cfg.drive.wheel_radius);
  r.get("axle_length", s.cfg.drive.axle_length);
  r.get("wheel_cap", s.cfg.drive.wheel_cap);
  r.get("pixel_size", s.cfg.camera.pixel_size);
  r.get("spectrum_bins", s.cfg.tone.bins);
  double tone_sigma = s.cfg.tone.noise.sigma;
  r.get("channel_noise_sigma", tone_sigma);
  s.cfg.tone.noise = NoiseConfig::gaussian(tone_sigma);
  r.get("eval_trials", s.eval_trials);
  r.finish();
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) fail(key, what);
}

}  // namespace

void ExperimentConfig::validate() const {
  check(!out_dir.empty(), "out_dir", "must not be empty");
  check(metrics_window >= 1, "metrics_window", "must be >= 1");
  check(checkpoint_every_fraction > 0.0 && checkpoint_every_fraction <= 1.0,
        "checkpoint_every_fraction", "must lie in (0,1]");
  check(transcript_every >= 0, "transcript_every", "must be >= 0");

  check(negotiation.episodes >= 1, "negotiation.episodes", "must be >= 1");
  check(negotiation.cfg.hidden >= 1, "negotiation.hidden", "must be >= 1");
  check(negotiation.cfg.init_scale >= 0.0, "negotiation.init_scale", "must be >= 0");
  check(negotiation.cfg.reinforce.learning_rate > 0.0, "negotiation.learning_rate",
        "must be > 0");
  check(negotiation.cfg.reinforce.reward_push > 0.0 &&
            negotiation.cfg.reinforce.reward_push <= 1.0,
        "negotiation.reward_push", "must lie in (0,1]");
  check(negotiation.cfg.reinforce.penalty_push > 0.0 &&
            negotiation.cfg.reinforce.penalty_push <= 1.0,
        "negotiation.penalty_push", "must lie in (0,1]");
  check(negotiation.eval_placements >= 1, "negotiation.eval_placements", "must be >= 1");

  check(ring.episodes >= 1, "ring.episodes", "must be >= 1");
  check(ring.cfg.hidden >= 1, "ring.hidden", "must be >= 1");
  check(ring.cfg.goal_halfwidth > 0.0 && ring.cfg.goal_halfwidth < 0.5, "ring.goal_halfwidth",
        "must lie in (0, 0.5)");
  check(ring.noise_sigma >= 0.0, "ring.noise_sigma", "must be >= 0");
  check(ring.eval_noise_sigma >= 0.0, "ring.eval_noise_sigma", "must be >= 0");
  check(ring.cfg.td.gamma >= 0.0 && ring.cfg.td.gamma < 1.0, "ring.gamma",
        "must lie in [0,1)");
  check(ring.cfg.td.critic_learning_rate > 0.0, "ring.critic_lr", "must be > 0");
  check(ring.cfg.td.actor_learning_rate > 0.0, "ring.actor_lr", "must be > 0");
  check(ring.cfg.td.exploration_sigma >= 0.0, "ring.explore_sigma", "must be >= 0");
  check(ring.cfg.td.exploration_sigma_end >= 0.0, "ring.explore_sigma_end", "must be >= 0");
  check(ring.eval_trials >= 1, "ring.eval_trials", "must be >= 1");
  check(ring.atlas_resolution >= 4, "ring.atlas_resolution", "must be >= 4");

  check(lead.episodes >= 1, "lead.episodes", "must be >= 1");
  check(lead.pretrain_episodes >= 0, "lead.pretrain_episodes", "must be >= 0");
  check(lead.init == "transfer" || lead.init == "scratch", "lead.init",
        "must be 'transfer' or 'scratch'");
  check(lead.cfg.sender_hidden >= 1, "lead.sender_hidden", "must be >= 1");
  check(lead.cfg.receiver_hidden >= 1, "lead.receiver_hidden", "must be >= 1");
  check(lead.cfg.sender_init_scale >= 0.0, "lead.sender_init_scale", "must be >= 0");
  check(lead.cfg.receiver_init_scale >= 0.0, "lead.receiver_init_scale", "must be >= 0");
  check(lead.transfer_output_scale >= 0.0, "lead.transfer_output_scale", "must be >= 0");
  check(lead.cfg.sender_critic_lr > 0.0, "lead.sender_critic_lr", "must be > 0");
  check(lead.cfg.sender_actor_lr > 0.0, "lead.sender_actor_lr", "must be > 0");
  check(lead.cfg.td.gamma >= 0.0 && lead.cfg.td.gamma < 1.0, "lead.gamma",
        "must lie in [0,1)");
  check(lead.cfg.td.critic_learning_rate > 0.0, "lead.critic_lr", "must be > 0");
  check(lead.cfg.td.actor_learning_rate > 0.0, "lead.actor_lr", "must be > 0");
  check(lead.cfg.td.exploration_sigma >= 0.0, "lead.explore_sigma", "must be >= 0");
  check(lead.cfg.td.exploration_sigma_end >= 0.0, "lead.explore_sigma_end", "must be >= 0");
  check(lead.cfg.tone.bins >= 4, "lead.spectrum_bins", "must be >= 4");
  check(lead.cfg.tone.noise.sigma >= 0.0, "lead.channel_noise_sigma", "must be >= 0");
  check(lead.cfg.drive.wheel_radius > 0.0, "lead.wheel_radius", "must be > 0");
  check(lead.cfg.drive.axle_length > 0.0, "lead.axle_length", "must be > 0");
  check(lead.cfg.drive.wheel_cap > 0.0, "lead.wheel_cap", "must be > 0");
  check(lead.cfg.camera.pixel_size > 0.0, "lead.pixel_size", "must be > 0");
  check(lead.eval_trials >= 1, "lead.eval_trials", "must be >= 1");
  try {
    lead.cfg.arena.validate();
  } catch (const std::exception& e) {
    fail("lead.goal_radius", std::string("invalid arena: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  bool blank = true;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
  if (blank) {
    cfg.validate();
    return cfg;
  }

  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }

  Reader r(j, "");
  std::string kind = experiment_name(cfg.experiment);
  r.get_string("experiment", kind);
  cfg.experiment = experiment_from_name(kind);
  r.get("seed", cfg.seed);
  r.get_string("out_dir", cfg.out_dir);
  r.get("metrics_window", cfg.metrics_window);
  r.get("checkpoint_every_fraction", cfg.checkpoint_every_fraction);
  r.get("transcript_every", cfg.transcript_every);
  if (const json* sub = r.subobject("negotiation")) read_negotiation(*sub, cfg.negotiation);
  if (const json* sub = r.subobject("ring")) read_ring(*sub, cfg.ring);
  if (const json* sub = r.subobject("lead")) read_lead(*sub, cfg.lead);
  r.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["metrics_window"] = cfg.metrics_window;
  j["checkpoint_every_fraction"] = cfg.checkpoint_every_fraction;
  j["transcript_every"] = cfg.transcript_every;

  json n;
  n["episodes"] = cfg.negotiation.episodes;
  n["hidden"] = cfg.negotiation.cfg.hidden;
  n["init_scale"] = cfg.negotiation.cfg.init_scale;
  n["learning_rate"] = cfg.negotiation.cfg.reinforce.learning_rate;
  n["reward_push"] = cfg.negotiation.cfg.reinforce.reward_push;
  n["penalty_push"] = cfg.negotiation.cfg.reinforce.penalty_push;
  n["eval_placements"] = cfg.negotiation.eval_placements;
  j["negotiation"] = n;

  json r;
  r["episodes"] = cfg.ring.episodes;
  r["hidden"] = cfg.ring.cfg.hidden;
  r["init_scale"] = cfg.ring.cfg.init_scale;
  r["goal_halfwidth"] = cfg.ring.cfg.goal_halfwidth;
  r["noise_sigma"] = cfg.ring.noise_sigma;
  r["eval_noise_sigma"] = cfg.ring.eval_noise_sigma;
  r["gamma"] = cfg.ring.cfg.td.gamma;
  r["critic_lr"] = cfg.ring.cfg.td.critic_learning_rate;
  r["actor_lr"] = cfg.ring.cfg.td.actor_learning_rate;
  r["explore_sigma"] = cfg.ring.cfg.td.exploration_sigma;
  r["explore_sigma_end"] = cfg.ring.cfg.td.exploration_sigma_end;
  r["eval_trials"] = cfg.ring.eval_trials;
  r["atlas_resolution"] = cfg.ring.atlas_resolution;
  j["ring"] = r;

  json l;
  l["episodes"] = cfg.lead.episodes;
  l["pretrain_episodes"] = cfg.lead.pretrain_episodes;
  l["init"] = cfg.lead.init;
  l["pretrained"] = cfg.lead.pretrained_path;
  l["sender_hidden"] = cfg.lead.cfg.sender_hidden;
  l["receiver_hidden"] = cfg.lead.cfg.receiver_hidden;
  l["sender_init_scale"] = cfg.lead.cfg.sender_init_scale;
  l["receiver_init_scale"] = cfg.lead.cfg.receiver_init_scale;
  l["transfer_output_scale"] = cfg.lead.transfer_output_scale;
  l["sender_critic_lr"] = cfg.lead.cfg.sender_critic_lr;
  l["sender_actor_lr"] = cfg.lead.cfg.sender_actor_lr;
  l["gamma"] = cfg.lead.cfg.td.gamma;
  l["critic_lr"] = cfg.lead.cfg.td.critic_learning_rate;
  l["actor_lr"] = cfg.lead.cfg.td.actor_learning_rate;
  l["explore_sigma"] = cfg.lead.cfg.td.exploration_sigma;
  l["explore_sigma_end"] = cfg.lead.cfg.td.exploration_sigma_end;
  l["arena_side"] = cfg.lead.cfg.arena.side;
  l["goal_x"] = cfg.lead.cfg.arena.goal_x;
  l["goal_y"] = cfg.lead.cfg.arena.goal_y;
  l["goal_radius"] = cfg.lead.cfg.arena.goal_radius;
  l["max_steps"] = cfg.lead.cfg.arena.max_steps;
  l["wheel_radius"] = cfg.lead.cfg.drive.wheel_radius;
  l["axle_length"] = cfg.lead.cfg.drive.axle_length;
  l["wheel_cap"] = cfg.lead.cfg.drive.wheel_cap;
  l["pixel_size"] = cfg.lead.cfg.camera.pixel_size;
  l["spectrum_bins"] = cfg.lead.cfg.tone.bins;
  l["channel_noise_sigma"] = cfg.lead.cfg.tone.noise.sigma;
  l["eval_trials"] = cfg.lead.eval_trials;
  j["lead"] = l;

  return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("config: cannot write " + path);
  os << config_to_json(cfg);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config: --set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  // Rebuild through JSON so overrides share the strict parsing path.
  json j = json::parse(config_to_json(cfg));
  json* node = &j;
  std::string rest = key;
  for (size_t dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
    const std::string head = rest.substr(0, dot);
    if (!node->contains(head)) fail(key, "is unknown");
    node = &(*node)[head];
    rest = rest.substr(dot + 1);
  }
  if (!node->contains(rest)) fail(key, "is unknown");
  json& leaf = (*node)[rest];
  try {
    if (leaf.is_string())
      leaf = value;
    else if (leaf.is_boolean())
      leaf = value == "true" || value == "1";
    else if (leaf.is_number_unsigned())
      leaf = std::stoull(value);
    else if (leaf.is_number_integer())
      leaf = std::stoll(value);
    else
      leaf = std::stod(value);
  } catch (const std::exception&) {
    fail(key, "cannot parse value '" + value + "'");
  }
  cfg = parse_config(j.dump());
}

bool config_equal(const ExperimentConfig& a, const ExperimentConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

std::uint64_t config_resume_hash(const ExperimentConfig& cfg) {
  json j = json::parse(config_to_json(cfg));
  j["negotiation"]["episodes"] = 0;
  j["ring"]["episodes"] = 0;
  j["lead"]["episodes"] = 0;
  j["lead"]["pretrain_episodes"] = 0;
  j["out_dir"] = "";
  return fnv1a64(j.dump());
}

}  // namespace emcom
