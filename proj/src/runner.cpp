#include "emcom/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "emcom/rng.hpp"

namespace emcom {

namespace fs = std::filesystem;
using nlohmann::json;

const char* job_name(Job job) {
  switch (job) {
    case Job::NegotiationTrain: return "negotiation-train";
    case Job::RingTrain: return "ring-train";
    case Job::LeadPretrain: return "lead-pretrain";
    case Job::LeadTrain: return "lead-train";
  }
  return "?";
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("runner: cannot write " + tmp);
    os << content;
  }
  fs::rename(tmp, path);
}

// Accumulates per-episode scalars into fixed windows.
class Windower {
 public:
  Windower(std::string phase, long window, std::vector<std::string> names)
      : phase_(std::move(phase)), window_(window), names_(std::move(names)) {
    sums_.assign(names_.size(), 0.0);
  }

  void add(long episode_index, const std::vector<double>& values,
           std::vector<MetricsRow>& rows) {
    for (size_t i = 0; i < sums_.size(); ++i) sums_[i] += values[i];
    ++count_;
    if (count_ == window_) {
      MetricsRow row;
      row.phase = phase_;
      row.window_start = episode_index + 1 - window_;
      row.window_end = episode_index + 1;
      for (size_t i = 0; i < names_.size(); ++i)
        row.values.emplace_back(names_[i], sums_[i] / count_);
      rows.push_back(std::move(row));
      sums_.assign(names_.size(), 0.0);
      count_ = 0;
    }
  }

  json to_json() const { return json{{"count", count_}, {"sums", sums_}}; }
  void restore(const json& j) {
    count_ = j.at("count").get<long>();
    sums_ = j.at("sums").get<std::vector<double>>();
  }

 private:
  std::string phase_;
  long window_ = 1;
  std::vector<std::string> names_;
  std::vector<double> sums_;
  long count_ = 0;
};

json rows_to_json(const std::vector<MetricsRow>& rows) {
  json out = json::array();
  for (const MetricsRow& r : rows) {
    json jr;
    jr["phase"] = r.phase;
    jr["ws"] = r.window_start;
    jr["we"] = r.window_end;
    json vals = json::array();
    for (const auto& [k, v] : r.values) vals.push_back(json{{"k", k}, {"v", v}});
    jr["values"] = vals;
    out.push_back(jr);
  }
  return out;
}

std::vector<MetricsRow> rows_from_json(const json& j) {
  std::vector<MetricsRow> rows;
  for (const json& jr : j) {
    MetricsRow r;
    r.phase = jr.at("phase").get<std::string>();
    r.window_start = jr.at("ws").get<long>();
    r.window_end = jr.at("we").get<long>();
    for (const json& kv : jr.at("values"))
      r.values.emplace_back(kv.at("k").get<std::string>(), kv.at("v").get<double>());
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string metrics_csv(const std::string& run_id, std::uint64_t seed,
                        const std::vector<MetricsRow>& rows) {
  std::ostringstream os;
  os << "run_id,seed,phase,window_start,window_end";
  if (!rows.empty())
    for (const auto& [k, v] : rows.front().values) os << ',' << k;
  os << '\n';
  for (const MetricsRow& r : rows) {
    os << run_id << ',' << seed << ',' << r.phase << ',' << r.window_start << ','
       << r.window_end;
    for (const auto& [k, v] : r.values) os << ',' << fmt_double(v);
    os << '\n';
  }
  return os.str();
}

json log_to_json(const NegotiationLog& log) {
  json j;
  j["seating"] = log.seating.agent_at;
  j["signals"] = log.signals;
  j["actions"] = log.actions;
  json outcomes = json::array();
  for (Outcome o : log.outcomes)
    outcomes.push_back(o == Outcome::Reward ? "reward"
                       : o == Outcome::Penalty ? "penalty"
                                               : "neutral");
  j["outcomes"] = outcomes;
  return j;
}

struct RunState {
  std::string phase;
  long episode = 0;  // within phase
  std::string rng;
  std::vector<MetricsRow> rows;
  json windower;
  std::vector<json> transcripts;
  bool pretrain_done = false;
};

constexpr const char* kStateFile = "checkpoint/state.json";
constexpr const char* kNetsFile = "checkpoint/nets.ckpt";
constexpr const char* kPretrainedFile = "checkpoint/pretrained.ckpt";

void save_state(const std::string& dir, const ExperimentConfig& cfg, Job job,
                const RunState& st, const std::map<std::string, NetParams>& nets) {
  fs::create_directories(fs::path(dir) / "checkpoint");
  save_checkpoint((fs::path(dir) / kNetsFile).string(), nets);
  json j;
  j["version"] = 1;
  j["job"] = job_name(job);
  j["config_hash"] = config_resume_hash(cfg);
  j["phase"] = st.phase;
  j["episode"] = st.episode;
  j["rng"] = st.rng;
  j["rows"] = rows_to_json(st.rows);
  j["windower"] = st.windower;
  j["transcripts"] = st.transcripts;
  j["pretrain_done"] = st.pretrain_done;
  write_file((fs::path(dir) / kStateFile).string(), j.dump(2));
}

std::optional<RunState> load_state(const std::string& dir, const ExperimentConfig& cfg,
                                   Job job) {
  const fs::path path = fs::path(dir) / kStateFile;
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream is(path);
  json j = json::parse(is);
  if (j.at("config_hash").get<std::uint64_t>() != config_resume_hash(cfg))
    throw std::runtime_error("runner: " + dir +
                             " holds a checkpoint from a different configuration");
  if (j.at("job").get<std::string>() != job_name(job))
    throw std::runtime_error("runner: " + dir + " holds a checkpoint from a different job");
  RunState st;
  st.phase = j.at("phase").get<std::string>();
  st.episode = j.at("episode").get<long>();
  st.rng = j.at("rng").get<std::string>();
  st.rows = rows_from_json(j.at("rows"));
  st.windower = j.at("windower");
  st.transcripts = j.at("transcripts").get<std::vector<json>>();
  st.pretrain_done = j.at("pretrain_done").get<bool>();
  return st;
}

struct RunContext {
  const ExperimentConfig& cfg;
  Job job;
  std::string dir;
  std::optional<long> stop_after;
  long global_episode = 0;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  bool should_stop() const { return stop_after && global_episode >= *stop_after; }
};

RunRecord make_record(const RunContext& ctx, bool completed, long episodes_done) {
  RunRecord rec;
  rec.run_id = std::string(experiment_name(ctx.cfg.experiment)) + "-s" +
               std::to_string(ctx.cfg.seed);
  rec.version = kVersionTag;
  rec.config = ctx.cfg;
  rec.completed = completed;
  rec.episodes_done = episodes_done;
  rec.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.t0).count();
  return rec;
}

void finalize(RunContext& ctx, RunRecord& rec, const RunState& st) {
  rec.artifacts.push_back("config.json");
  save_config(ctx.cfg, (fs::path(ctx.dir) / "config.json").string());

  rec.artifacts.push_back("metrics.csv");
  write_file((fs::path(ctx.dir) / "metrics.csv").string(),
             metrics_csv(rec.run_id, ctx.cfg.seed, st.rows));

  if (!st.transcripts.empty()) {
    std::ostringstream os;
    for (const json& t : st.transcripts) os << t.dump() << '\n';
    rec.artifacts.push_back("transcripts.jsonl");
    write_file((fs::path(ctx.dir) / "transcripts.jsonl").string(), os.str());
  }

  rec.artifacts.push_back(kNetsFile);

  json j;
  j["run_id"] = rec.run_id;
  j["version"] = rec.version;
  j["job"] = job_name(ctx.job);
  j["completed"] = rec.completed;
  j["episodes_done"] = rec.episodes_done;
  j["wall_clock_sec"] = rec.wall_clock_sec;
  j["final_metrics"] = rec.final_metrics;
  j["artifacts"] = rec.artifacts;
  j["config"] = json::parse(config_to_json(ctx.cfg));
  write_file((fs::path(ctx.dir) / "summary.json").string(), j.dump(2) + "\n");
}

// ---- negotiation ----

RunRecord run_negotiation_job(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const long total = cfg.negotiation.episodes;
  const long stride = std::max<long>(1, std::llround(total * cfg.checkpoint_every_fraction));

  NegotiationTrainer trainer(cfg.negotiation.cfg, cfg.seed);
  RunState st;
  st.phase = "train";
  Windower win("train", cfg.metrics_window, {"collision_free_rate", "mean_penalized"});

  if (auto saved = load_state(ctx.dir, cfg, ctx.job)) {
    st = std::move(*saved);
    win.restore(st.windower);
    auto nets = load_checkpoint((fs::path(ctx.dir) / kNetsFile).string());
    for (int i = 0; i < kPoolSize; ++i)
      trainer.pool().agents[i] = std::move(nets.at("agent" + std::to_string(i)));
    trainer.restore(st.rng, st.episode);
  }

  auto nets_snapshot = [&]() {
    std::map<std::string, NetParams> nets;
    for (int i = 0; i < kPoolSize; ++i)
      nets.emplace("agent" + std::to_string(i), trainer.pool().agents[i]);
    return nets;
  };

  while (trainer.episode_index() < total) {
    if (ctx.should_stop()) return make_record(ctx, false, trainer.episode_index());
    const NegotiationLog& log = trainer.run_episode();
    ++ctx.global_episode;
    const long ep = trainer.episode_index();  // 1-based after the call
    win.add(ep - 1, {log.collision_free() ? 1.0 : 0.0, double(log.penalized_count())},
            st.rows);
    if (cfg.transcript_every > 0 && ep % cfg.transcript_every == 0) {
      json t = log_to_json(log);
      t["episode"] = ep;
      st.transcripts.push_back(std::move(t));
    }
    if (ep % stride == 0 || ep == total) {
      st.episode = ep;
      st.rng = trainer.rng_state();
      st.windower = win.to_json();
      save_state(ctx.dir, cfg, ctx.job, st, nets_snapshot());
    }
  }

  RunRecord rec = make_record(ctx, true, total);
  std::mt19937_64 erng = make_stream(cfg.seed, "negotiation.final_eval");
  EvalResult eval = evaluate_pool(trainer.pool(), cfg.negotiation.eval_placements, erng);
  rec.final_metrics["eval_success"] = eval.overall_success;
  rec.final_metrics["state_driven_flips"] = eval.state_driven_flips;
  finalize(ctx, rec, st);
  return rec;
}

// ---- ring ----

RunRecord run_ring_job(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const long total = cfg.ring.episodes;
  const long stride = std::max<long>(1, std::llround(total * cfg.checkpoint_every_fraction));

  RingConfig rc = cfg.ring.cfg;
  rc.channel_noise = NoiseConfig::gaussian(cfg.ring.noise_sigma);
  RingTrainer trainer(rc, cfg.seed);
  RunState st;
  st.phase = "train";
  Windower win("train", cfg.metrics_window, {"success_rate"});

  if (auto saved = load_state(ctx.dir, cfg, ctx.job)) {
    st = std::move(*saved);
    win.restore(st.windower);
    auto nets = load_checkpoint((fs::path(ctx.dir) / kNetsFile).string());
    trainer.sender() = std::move(nets.at("sender"));
    trainer.receiver() = std::move(nets.at("receiver"));
    trainer.restore(st.rng, st.episode);
  }

  auto nets_snapshot = [&]() {
    std::map<std::string, NetParams> nets;
    nets.emplace("sender", trainer.sender());
    nets.emplace("receiver", trainer.receiver());
    return nets;
  };

  while (trainer.episode_index() < total) {
    if (ctx.should_stop()) return make_record(ctx, false, trainer.episode_index());
    const CommTrace& trace = trainer.run_episode(total);
    ++ctx.global_episode;
    const long ep = trainer.episode_index();
    win.add(ep - 1, {trace.verdict == Verdict::Reached ? 1.0 : 0.0}, st.rows);
    if (ep % stride == 0 || ep == total) {
      st.episode = ep;
      st.rng = trainer.rng_state();
      st.windower = win.to_json();
      save_state(ctx.dir, cfg, ctx.job, st, nets_snapshot());
    }
  }

  RunRecord rec = make_record(ctx, true, total);
  std::mt19937_64 erng = make_stream(cfg.seed, "ring.final_eval");
  RingEvalResult eval =
      eval_pair(trainer.sender(), trainer.receiver(), cfg.ring.eval_trials,
                rc.goal_halfwidth, NoiseConfig::gaussian(cfg.ring.eval_noise_sigma), erng,
                true);
  const CodeMap map = discretization_score(signal_atlas(trainer.sender(),
                                                        cfg.ring.atlas_resolution));
  rec.final_metrics["eval_success"] = eval.success_rate;
  rec.final_metrics["discretization_score"] = map.score;
  rec.final_metrics["distinct_codes"] = map.distinct_codes;
  rec.final_metrics["code_consistency"] = map.consistency;
  finalize(ctx, rec, st);
  return rec;
}

// ---- lead ----

RunRecord run_lead_job(RunContext& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const bool pretrain_only = ctx.job == Job::LeadPretrain;
  const bool transfer = cfg.lead.init == "transfer";
  const LeadConfig& lc = cfg.lead.cfg;

  RunState st;
  Windower pre_win("pretrain", cfg.metrics_window, {"success_rate", "mean_steps"});
  Windower comm_win("comm", cfg.metrics_window, {"success_rate", "mean_steps"});

  LeadTrainer pre(lc, LeadTrainer::Mode::Direct, cfg.seed);
  LeadTrainer comm(lc, LeadTrainer::Mode::Comm, cfg.seed);

  const bool inline_pretrain =
      pretrain_only || (transfer && cfg.lead.pretrained_path.empty());
  st.phase = inline_pretrain ? "pretrain" : "comm";

  bool resumed = false;
  if (auto saved = load_state(ctx.dir, cfg, ctx.job)) {
    st = std::move(*saved);
    auto nets = load_checkpoint((fs::path(ctx.dir) / kNetsFile).string());
    if (st.phase == "pretrain") {
      pre_win.restore(st.windower);
      pre.set_sender(std::move(nets.at("sender")));
      pre.restore(st.rng, st.episode);
    } else {
      comm_win.restore(st.windower);
      comm.set_sender(std::move(nets.at("sender")));
      comm.set_receiver(std::move(nets.at("receiver")));
      comm.restore(st.rng, st.episode);
    }
    resumed = true;
  }

  auto pre_nets = [&]() {
    std::map<std::string, NetParams> nets;
    nets.emplace("sender", pre.sender());
    return nets;
  };
  auto comm_nets = [&]() {
    std::map<std::string, NetParams> nets;
    nets.emplace("sender", comm.sender());
    nets.emplace("receiver", comm.receiver());
    return nets;
  };

  // --- pretrain phase ---
  if (st.phase == "pretrain") {
    const long total = cfg.lead.pretrain_episodes;
    const long stride =
        std::max<long>(1, std::llround(total * cfg.checkpoint_every_fraction));
    while (pre.episode_index() < total) {
      if (ctx.should_stop()) return make_record(ctx, false, pre.episode_index());
      const LeadTrace& t = pre.run_episode(total);
      ++ctx.global_episode;
      const long ep = pre.episode_index();
      pre_win.add(ep - 1, {t.success ? 1.0 : 0.0, double(t.steps)}, st.rows);
      if (ep % stride == 0 || ep == total) {
        st.episode = ep;
        st.rng = pre.rng_state();
        st.windower = pre_win.to_json();
        save_state(ctx.dir, cfg, ctx.job, st, pre_nets());
      }
    }
    st.pretrain_done = true;
    fs::create_directories(fs::path(ctx.dir) / "checkpoint");
    save_checkpoint((fs::path(ctx.dir) / kPretrainedFile).string(), pre_nets());

    if (pretrain_only) {
      RunRecord rec = make_record(ctx, true, cfg.lead.pretrain_episodes);
      std::mt19937_64 erng = make_stream(cfg.seed, "lead.final_eval.direct");
      int wins = 0;
      for (int i = 0; i < cfg.lead.eval_trials; ++i)
        if (run_direct_episode(pre.sender(), random_pose(lc.arena, erng), lc, erng, 0.0)
                .success)
          ++wins;
      rec.final_metrics["direct_eval_success"] = double(wins) / cfg.lead.eval_trials;
      rec.artifacts.push_back(kPretrainedFile);
      finalize(ctx, rec, st);
      return rec;
    }

    // hand over to the communication phase
    comm.set_sender(transfer_hidden(pre.sender(), derive_seed(cfg.seed, "lead.transfer"),
                                    cfg.lead.transfer_output_scale));
    st.phase = "comm";
    st.episode = 0;
    st.rng = comm.rng_state();
    st.windower = comm_win.to_json();
    save_state(ctx.dir, cfg, ctx.job, st, comm_nets());
  } else if (!resumed && transfer && !cfg.lead.pretrained_path.empty()) {
    NetParams pretrained = load_net(cfg.lead.pretrained_path, "sender");
    comm.set_sender(transfer_hidden(std::move(pretrained),
                                    derive_seed(cfg.seed, "lead.transfer"),
                                    cfg.lead.transfer_output_scale));
  }

  // --- communication phase ---
  const long total = cfg.lead.episodes;
  const long stride = std::max<long>(1, std::llround(total * cfg.checkpoint_every_fraction));
  while (comm.episode_index() < total) {
    if (ctx.should_stop()) return make_record(ctx, false, comm.episode_index());
    const LeadTrace& t = comm.run_episode(total);
    ++ctx.global_episode;
    const long ep = comm.episode_index();
    comm_win.add(ep - 1, {t.success ? 1.0 : 0.0, double(t.steps)}, st.rows);
    if (ep % stride == 0 || ep == total) {
      st.episode = ep;
      st.rng = comm.rng_state();
      st.windower = comm_win.to_json();
      save_state(ctx.dir, cfg, ctx.job, st, comm_nets());
    }
  }

  RunRecord rec = make_record(ctx, true, cfg.lead.episodes);
  std::mt19937_64 erng = make_stream(cfg.seed, "lead.final_eval");
  LeadEvalResult eval =
      eval_lead_pair(comm.sender(), comm.receiver(), cfg.lead.eval_trials, lc, erng);
  rec.final_metrics["eval_success"] = eval.success_rate;
  rec.final_metrics["mean_steps"] = eval.mean_steps;
  if (st.pretrain_done) rec.artifacts.push_back(kPretrainedFile);
  finalize(ctx, rec, st);
  return rec;
}

}  // namespace

RunRecord run(const ExperimentConfig& cfg, Job job, std::optional<long> stop_after) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  RunContext ctx{cfg, job, cfg.out_dir, stop_after};
  switch (job) {
    case Job::NegotiationTrain: return run_negotiation_job(ctx);
    case Job::RingTrain: return run_ring_job(ctx);
    case Job::LeadPretrain:
    case Job::LeadTrain: return run_lead_job(ctx);
  }
  throw std::logic_error("run: unknown job");
}

std::vector<std::string> emit_plotdata(const std::string& run_dir) {
  std::vector<std::string> produced;
  const fs::path dir(run_dir);

  // learning curve: metrics.csv minus the run identity columns
  {
    std::ifstream is(dir / "metrics.csv");
    if (!is) throw std::runtime_error("emit_plotdata: missing artifact metrics.csv in " +
                                      run_dir);
    auto drop_run_cols = [](const std::string& s) {
      size_t p = s.find(',');
      p = s.find(',', p + 1);
      return s.substr(p + 1);
    };
    std::ostringstream out;
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) out << drop_run_cols(line) << '\n';
    const std::string path = (dir / "learning_curve.csv").string();
    write_file(path, out.str());
    produced.push_back(path);
  }

  // negotiation transcript tables, Table-1 layout
  if (fs::exists(dir / "transcripts.jsonl")) {
    std::ifstream is(dir / "transcripts.jsonl");
    std::ostringstream out;
    out << "episode,row,seat0,seat1,seat2,seat3\n";
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json t = json::parse(line);
      const long ep = t.at("episode").get<long>();
      const auto seating = t.at("seating").get<std::array<int, 4>>();
      out << ep << ",agent";
      for (int id : seating) out << ',' << id;
      out << '\n';
      const auto signals = t.at("signals").get<std::array<std::array<int, 4>, 3>>();
      for (int round = 0; round < 3; ++round) {
        out << ep << ",signal#" << (round + 1);
        for (int p = 0; p < 4; ++p) out << ',' << signals[round][p];
        out << '\n';
      }
      const auto actions = t.at("actions").get<std::array<int, 4>>();
      out << ep << ",action";
      for (int p = 0; p < 4; ++p) out << ',' << actions[p];
      out << '\n';
    }
    const std::string path = (dir / "transcript_tables.csv").string();
    write_file(path, out.str());
    produced.push_back(path);
  }

  // ring signal atlas from the final checkpoint
  if (fs::exists(dir / "summary.json")) {
    std::ifstream is(dir / "summary.json");
    const json summary = json::parse(is);
    if (summary.at("job").get<std::string>() == "ring-train") {
      const ExperimentConfig cfg = parse_config(summary.at("config").dump());
      const NetParams sender = load_net((dir / kNetsFile).string(), "sender");
      const auto atlas = signal_atlas(sender, cfg.ring.atlas_resolution);
      std::ostringstream out;
      out << "x,s1,s2\n";
      for (const AtlasRow& row : atlas)
        out << fmt_double(row.x) << ',' << fmt_double(row.s1) << ',' << fmt_double(row.s2)
            << '\n';
      const std::string path = (dir / "atlas.csv").string();
      write_file(path, out.str());
      produced.push_back(path);
    }
  }

  return produced;
}

NegotiationEvalFiles write_negotiation_eval(const AgentPool& pool, int placements,
                                            std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::mt19937_64 rng = make_stream(seed, "negotiation.eval");
  EvalResult res = evaluate_pool(pool, placements, rng);

  NegotiationEvalFiles files;
  files.success = res.overall_success;
  files.state_driven_flips = res.state_driven_flips;

  std::ostringstream table;
  table << "combination_id,agents,placements,successes,success_rate\n";
  for (const CombinationResult& row : res.table) {
    table << row.combination_id << ',';
    for (int i = 0; i < kSeats; ++i) table << (i ? " " : "") << row.agents[i];
    table << ',' << row.placements << ',' << row.successes << ','
          << fmt_double(double(row.successes) / row.placements) << '\n';
  }
  files.table_csv = (fs::path(out_dir) / "success_table.csv").string();
  write_file(files.table_csv, table.str());

  std::ostringstream stub;
  stub << "agent,stubbornness,seated_episodes\n";
  for (int a = 0; a < kPoolSize; ++a)
    stub << a << ',' << fmt_double(res.stubbornness[a]) << ',' << res.seated_episodes[a]
         << '\n';
  files.stubbornness_csv = (fs::path(out_dir) / "stubbornness.csv").string();
  write_file(files.stubbornness_csv, stub.str());
  return files;
}

RingEvalFiles write_ring_eval(const NetParams& sender, const NetParams& receiver,
                              const RingSettings& settings, double eval_noise_sigma,
                              std::uint64_t seed, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::mt19937_64 rng = make_stream(seed, "ring.eval");
  RingEvalResult res =
      eval_pair(sender, receiver, settings.eval_trials, settings.cfg.goal_halfwidth,
                NoiseConfig::gaussian(eval_noise_sigma), rng, true);
  const CodeMap map = discretization_score(signal_atlas(sender, settings.atlas_resolution));

  RingEvalFiles files;
  files.success = res.success_rate;
  files.map = map;

  std::ostringstream csv;
  csv << "trial,x0,verdict\n";
  for (const RingEvalRow& row : res.rows)
    csv << row.trial << ',' << fmt_double(row.x0) << ',' << verdict_name(row.verdict) << '\n';
  files.eval_csv = (fs::path(out_dir) / "ring_eval.csv").string();
  write_file(files.eval_csv, csv.str());

  json j;
  j["success_rate"] = res.success_rate;
  j["noise_sigma"] = eval_noise_sigma;
  j["discretization_score"] = map.score;
  j["distinct_codes"] = map.distinct_codes;
  j["arcs_per_code"] = map.arcs_per_code;
  j["points_per_code"] = map.points_per_code;
  j["code_consistency"] = map.consistency;
  j["quarter_offset"] = map.quarter_offset;
  files.summary_json = (fs::path(out_dir) / "ring_eval_summary.json").string();
  write_file(files.summary_json, j.dump(2) + "\n");
  return files;
}

LeadEvalFiles write_lead_eval(const NetParams& sender, const NetParams& receiver,
                              const LeadSettings& settings, int trials, std::uint64_t seed,
                              const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::mt19937_64 rng = make_stream(seed, "lead.eval");
  LeadEvalResult res = eval_lead_pair(sender, receiver, trials, settings.cfg, rng);

  LeadEvalFiles files;
  files.success = res.success_rate;
  files.mean_steps = res.mean_steps;

  std::ostringstream csv;
  csv << "trial,x,y,theta,steps,success\n";
  for (const LeadEvalRow& row : res.rows)
    csv << row.trial << ',' << fmt_double(row.start.x) << ',' << fmt_double(row.start.y)
        << ',' << fmt_double(row.start.theta) << ',' << row.steps << ','
        << (row.success ? 1 : 0) << '\n';
  files.eval_csv = (fs::path(out_dir) / "lead_eval.csv").string();
  write_file(files.eval_csv, csv.str());

  json j;
  j["success_rate"] = res.success_rate;
  j["mean_steps"] = res.mean_steps;
  j["trials"] = trials;
  files.summary_json = (fs::path(out_dir) / "lead_eval_summary.json").string();
  write_file(files.summary_json, j.dump(2) + "\n");
  return files;
}

}  // namespace emcom
