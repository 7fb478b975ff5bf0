// emcom: negotiation / ring / lead experiment driver.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "emcom/config.hpp"
#include "emcom/runner.hpp"

using namespace emcom;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--set", args.overrides, "dotted-key overrides, e.g. ring.noise_sigma=0.2");
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--out", args.out, "output directory");
}

ExperimentConfig build_config(const CommonArgs& args, ExperimentKind kind) {
  ExperimentConfig cfg =
      args.config_path.empty() ? ExperimentConfig{} : load_config(args.config_path);
  cfg.experiment = kind;
  for (const std::string& kv : args.overrides) apply_override(cfg, kv);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out) cfg.out_dir = *args.out;
  cfg.validate();
  return cfg;
}

void print_record(const RunRecord& rec) {
  std::printf("run %s completed=%d episodes=%ld wall=%.1fs\n", rec.run_id.c_str(),
              rec.completed ? 1 : 0, rec.episodes_done, rec.wall_clock_sec);
  for (const auto& [k, v] : rec.final_metrics) std::printf("  %s = %.6g\n", k.c_str(), v);
  std::printf("  artifacts in %s\n", rec.config.out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emcom: decentralized emergent-communication experiments"};
  app.require_subcommand(1);

  // ----- negotiation -----
  CLI::App* nego = app.add_subcommand("negotiation", "8-agent path negotiation");
  nego->require_subcommand(1);

  CommonArgs nt_args;
  std::optional<long> nt_episodes;
  CLI::App* nt = nego->add_subcommand("train", "train the agent pool");
  add_common(nt, nt_args);
  nt->add_option("--episodes", nt_episodes, "training episodes");

  CommonArgs ne_args;
  std::string ne_pool;
  int ne_placements = 24;
  CLI::App* ne = nego->add_subcommand("eval", "greedy evaluation over all 70 combinations");
  add_common(ne, ne_args);
  ne->add_option("--pool", ne_pool, "pool checkpoint file")->required();
  ne->add_option("--placements", ne_placements, "placements per combination");

  std::string np_run;
  CLI::App* np = nego->add_subcommand("plot", "emit plot-ready CSV files for a run");
  np->add_option("--run", np_run, "run directory")->required();

  // ----- ring -----
  CLI::App* ring = app.add_subcommand("ring", "one-way ring communication");
  ring->require_subcommand(1);

  CommonArgs rt_args;
  std::optional<long> rt_episodes;
  std::optional<double> rt_noise;
  CLI::App* rt = ring->add_subcommand("train", "train the sender/receiver pair");
  add_common(rt, rt_args);
  rt->add_option("--episodes", rt_episodes, "training episodes");
  rt->add_option("--noise-sigma", rt_noise, "channel noise during training");

  CommonArgs ra_args;
  std::string ra_pair;
  int ra_resolution = 240;
  std::string ra_out = "atlas.csv";
  CLI::App* ra = ring->add_subcommand("atlas", "deterministic signal sweep of a sender");
  ra->add_option("--pair", ra_pair, "pair checkpoint file")->required();
  ra->add_option("--resolution", ra_resolution, "grid points");
  ra->add_option("--out", ra_out, "output CSV path");

  CommonArgs re_args;
  std::string re_pair;
  std::optional<double> re_noise;
  std::optional<int> re_trials;
  CLI::App* re = ring->add_subcommand("eval", "greedy evaluation on grid starts");
  add_common(re, re_args);
  re->add_option("--pair", re_pair, "pair checkpoint file")->required();
  re->add_option("--noise-sigma", re_noise, "channel noise during evaluation");
  re->add_option("--trials", re_trials, "number of start locations");

  std::string rp_run;
  CLI::App* rp = ring->add_subcommand("plot", "emit plot-ready CSV files for a run");
  rp->add_option("--run", rp_run, "run directory")->required();

  // ----- lead -----
  CLI::App* lead = app.add_subcommand("lead", "robot leading through tones");
  lead->require_subcommand(1);

  CommonArgs lp_args;
  std::optional<long> lp_episodes;
  CLI::App* lp = lead->add_subcommand("pretrain", "direct-drive preliminary learning");
  add_common(lp, lp_args);
  lp->add_option("--episodes", lp_episodes, "pretraining episodes");

  CommonArgs lt_args;
  std::optional<long> lt_episodes;
  std::string lt_init;
  std::string lt_pretrained;
  CLI::App* lt = lead->add_subcommand("train", "communication training");
  add_common(lt, lt_args);
  lt->add_option("--episodes", lt_episodes, "communication episodes");
  lt->add_option("--init", lt_init, "transfer | scratch");
  lt->add_option("--pretrained", lt_pretrained,
                 "pretrained sender checkpoint (transfer init); trained inline when absent");

  CommonArgs le_args;
  std::string le_pair;
  std::optional<int> le_trials;
  CLI::App* le = lead->add_subcommand("eval", "evaluate a trained pair");
  add_common(le, le_args);
  le->add_option("--pair", le_pair, "pair checkpoint file")->required();
  le->add_option("--trials", le_trials, "number of random starts");

  double ld_x = 0.25, ld_y = 0.25, ld_theta = 0.0;
  std::string ld_out = "frame.ppm";
  CLI::App* ld = lead->add_subcommand("render-dump", "write one rendered camera frame");
  ld->add_option("--x", ld_x, "robot x");
  ld->add_option("--y", ld_y, "robot y");
  ld->add_option("--theta", ld_theta, "robot heading (radians)");
  ld->add_option("--out", ld_out, "output PPM path");

  std::string lpl_run;
  CLI::App* lpl = lead->add_subcommand("plot", "emit plot-ready CSV files for a run");
  lpl->add_option("--run", lpl_run, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (nt->parsed()) {
      ExperimentConfig cfg = build_config(nt_args, ExperimentKind::Negotiation);
      if (nt_episodes) cfg.negotiation.episodes = *nt_episodes;
      cfg.validate();
      print_record(run(cfg, Job::NegotiationTrain));
    } else if (ne->parsed()) {
      ExperimentConfig cfg = build_config(ne_args, ExperimentKind::Negotiation);
      AgentPool pool;
      auto nets = load_checkpoint(ne_pool);
      for (int i = 0; i < kPoolSize; ++i)
        pool.agents.push_back(std::move(nets.at("agent" + std::to_string(i))));
      const std::string out = ne_args.out.value_or(
          std::filesystem::path(ne_pool).parent_path().string().empty()
              ? "."
              : std::filesystem::path(ne_pool).parent_path().string());
      auto files = write_negotiation_eval(pool, ne_placements, cfg.seed, out);
      std::printf("eval success %.4f state_driven_flips %d\n", files.success,
                  files.state_driven_flips);
      std::printf("wrote %s and %s\n", files.table_csv.c_str(),
                  files.stubbornness_csv.c_str());
    } else if (np->parsed()) {
      for (const std::string& f : emit_plotdata(np_run)) std::printf("wrote %s\n", f.c_str());
    } else if (rt->parsed()) {
      ExperimentConfig cfg = build_config(rt_args, ExperimentKind::Ring);
      if (rt_episodes) cfg.ring.episodes = *rt_episodes;
      if (rt_noise) cfg.ring.noise_sigma = *rt_noise;
      cfg.validate();
      print_record(run(cfg, Job::RingTrain));
    } else if (ra->parsed()) {
      const NetParams sender = load_net(ra_pair, "sender");
      const auto atlas = signal_atlas(sender, ra_resolution);
      std::ofstream os(ra_out);
      if (!os) throw std::runtime_error("cannot write " + ra_out);
      os << "x,s1,s2\n";
      for (const AtlasRow& row : atlas) {
        char line[96];
        std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g\n", row.x, row.s1, row.s2);
        os << line;
      }
      std::printf("wrote %s (%d rows)\n", ra_out.c_str(), ra_resolution);
    } else if (re->parsed()) {
      ExperimentConfig cfg = build_config(re_args, ExperimentKind::Ring);
      if (re_trials) cfg.ring.eval_trials = *re_trials;
      const double noise = re_noise.value_or(cfg.ring.eval_noise_sigma);
      const NetParams sender = load_net(re_pair, "sender");
      const NetParams receiver = load_net(re_pair, "receiver");
      auto files = write_ring_eval(sender, receiver, cfg.ring, noise, cfg.seed,
                                   re_args.out.value_or("."));
      std::printf("eval success %.4f discretization %.3f codes %d consistency %.3f\n",
                  files.success, files.map.score, files.map.distinct_codes,
                  files.map.consistency);
      std::printf("wrote %s and %s\n", files.eval_csv.c_str(), files.summary_json.c_str());
    } else if (rp->parsed()) {
      for (const std::string& f : emit_plotdata(rp_run)) std::printf("wrote %s\n", f.c_str());
    } else if (lp->parsed()) {
      ExperimentConfig cfg = build_config(lp_args, ExperimentKind::Lead);
      if (lp_episodes) cfg.lead.pretrain_episodes = *lp_episodes;
      cfg.validate();
      print_record(run(cfg, Job::LeadPretrain));
    } else if (lt->parsed()) {
      ExperimentConfig cfg = build_config(lt_args, ExperimentKind::Lead);
      if (lt_episodes) cfg.lead.episodes = *lt_episodes;
      if (!lt_init.empty()) cfg.lead.init = lt_init;
      if (!lt_pretrained.empty()) cfg.lead.pretrained_path = lt_pretrained;
      cfg.validate();
      print_record(run(cfg, Job::LeadTrain));
    } else if (le->parsed()) {
      ExperimentConfig cfg = build_config(le_args, ExperimentKind::Lead);
      const NetParams sender = load_net(le_pair, "sender");
      const NetParams receiver = load_net(le_pair, "receiver");
      auto files = write_lead_eval(sender, receiver, cfg.lead,
                                   le_trials.value_or(cfg.lead.eval_trials), cfg.seed,
                                   le_args.out.value_or("."));
      std::printf("eval success %.4f mean steps %.2f\n", files.success, files.mean_steps);
      std::printf("wrote %s and %s\n", files.eval_csv.c_str(), files.summary_json.c_str());
    } else if (ld->parsed()) {
      ArenaSpec arena;  // defaults match LeadConfig
      write_ppm(ld_out, render({ld_x, ld_y, ld_theta}, arena));
      std::printf("wrote %s\n", ld_out.c_str());
    } else if (lpl->parsed()) {
      for (const std::string& f : emit_plotdata(lpl_run))
        std::printf("wrote %s\n", f.c_str());
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
