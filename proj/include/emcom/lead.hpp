// Software simulation of the grounded robot-leading pipeline: synthetic
// top-down camera -> sender net -> two tones -> spectrum channel -> receiver
// net -> wheel commands -> differential-drive robot, plus the
// preliminary-learning / hidden-weight-transfer protocol.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emcom/net.hpp"
#include "emcom/ring.hpp"  // NoiseConfig
#include "emcom/rl.hpp"

namespace emcom {

inline constexpr int kImagePixels = 595;   // 26*20 - 5*5 + 10*10
inline constexpr int kImageValues = 1785;  // 3 channels

struct ArenaSpec {
  double side = 1.0;
  double goal_x = 0.5;
  double goal_y = 0.5;
  double goal_radius = 0.12;
  int max_steps = 50;

  void validate() const;  // goal disc fully inside the arena
  bool in_goal(double x, double y) const;
};

struct RobotPose {
  double x = 0.5;
  double y = 0.5;
  double theta = 0.0;  // wrapped to (-pi, pi]
};

struct DriveSpec {
  double wheel_radius = 0.02;
  double axle_length = 0.05;
  double wheel_cap = 1.0;  // |wheel angle| per step, radians
};

// 26x20 coarse grid with the 5x5 centre block replaced by a 10x10 patch at
// double resolution; 3 colour channels; axis-aligned to the robot heading.
// Layout of the 595 pixels: coarse row-major (row 0 = farthest ahead)
// skipping the window cells, then the fine patch row-major; r,g,b per pixel.
struct CameraSpec {
  int coarse_w = 26;
  int coarse_h = 20;
  int window = 5;     // coarse cells replaced, starting at (win_col0, win_row0)
  int win_col0 = 10;
  int win_row0 = 7;
  double pixel_size = 0.08;  // world units per coarse pixel
  int supersample = 3;
};

std::vector<double> render(const RobotPose& pose, const ArenaSpec& arena,
                           const CameraSpec& camera = {});

// Writes an upscaled 52x40 composite of the two-resolution image as binary PPM.
void write_ppm(const std::string& path, const std::vector<double>& image,
               const CameraSpec& camera = {});

// Linear map from a tanh actor output to a normalized frequency.
double encode_tone(double actor_output);

struct ToneChannelSpec {
  int bins = 32;
  NoiseConfig noise;  // per-bin magnitude noise
};

// Unit peak at floor(bins * f) with triangular leakage into the two
// neighbours, plus optional Gaussian bin noise, clamped at 0.
std::vector<double> channel(double frequency, const ToneChannelSpec& spec,
                            std::mt19937_64& rng);

// Exact differential-drive arc step; positions clamped to the arena.
RobotPose kinematics_step(const RobotPose& pose, double phi_left, double phi_right,
                          const DriveSpec& drive, const ArenaSpec& arena);

struct LeadStepRecord {
  RobotPose pose;                    // before the step
  std::array<double, 2> tones{};     // normalized frequencies (comm mode)
  std::array<double, 2> wheels{};    // wheel angles actually applied
};

struct LeadTrace {
  RobotPose start;
  bool success = false;
  int steps = 0;
  std::vector<LeadStepRecord> records;
  std::vector<StepIO> sender_io, receiver_io;
  std::vector<TdStep> sender_td, receiver_td;
};

struct LeadConfig {
  ArenaSpec arena;
  DriveSpec drive;
  CameraSpec camera;
  ToneChannelSpec tone;
  int sender_hidden = 100;
  int receiver_hidden = 30;
  double sender_init_scale = 0.2;
  double receiver_init_scale = 0.1;
  TdConfig td;  // receiver learning rates; gamma and exploration shared
  // The sender runs smaller rates: its effective step scales with the squared
  // norm of the (inverted) image, roughly the goal-blob pixel count
  double sender_critic_lr = 5e-3;
  double sender_actor_lr = 1e-2;

  LeadConfig();

  TdConfig sender_td() const;
  NetSpec sender_spec() const;    // 1785 in -> hidden -> [actor, actor, critic]
  NetSpec receiver_spec() const;  // 2*bins in -> hidden -> [actor, actor, critic]
};

// Communication episode: image -> sender -> tones -> spectra -> receiver ->
// wheels. The receiver never sees the image; the sender never sees the
// spectra.
LeadTrace run_lead_episode(const NetParams& sender, const NetParams& receiver,
                           const RobotPose& start, const LeadConfig& cfg,
                           std::mt19937_64& rng, double explore_sigma);

// Preliminary phase: the sender's two actor outputs drive the wheels directly.
LeadTrace run_direct_episode(const NetParams& sender, const RobotPose& start,
                             const LeadConfig& cfg, std::mt19937_64& rng,
                             double explore_sigma);

// Copies input->hidden weights from the pretrained sender and re-draws the
// hidden->output layer (outputs change meaning from wheels to tones).
NetParams transfer_hidden(const NetParams& pretrained, std::uint64_t seed, double scale);

RobotPose random_pose(const ArenaSpec& arena, std::mt19937_64& rng);

class LeadTrainer {
 public:
  enum class Mode { Direct, Comm };

  LeadTrainer(LeadConfig cfg, Mode mode, std::uint64_t master_seed);

  // Provide nets explicitly (e.g. a transferred sender).
  void set_sender(NetParams sender) { sender_ = std::move(sender); }
  void set_receiver(NetParams receiver) { receiver_ = std::move(receiver); }

  const LeadTrace& run_episode(long total_episodes);
  long episode_index() const { return episode_; }

  NetParams& sender() { return sender_; }
  NetParams& receiver() { return receiver_; }
  const NetParams& sender() const { return sender_; }
  const NetParams& receiver() const { return receiver_; }
  Mode mode() const { return mode_; }

  std::string rng_state() const;
  void restore(const std::string& rng_state, long episode);

 private:
  LeadConfig cfg_;
  Mode mode_;
  NetParams sender_, receiver_;
  std::mt19937_64 rng_;
  long episode_ = 0;
  LeadTrace last_;
};

struct LeadEvalRow {
  int trial = 0;
  RobotPose start;
  int steps = 0;
  bool success = false;
};

struct LeadEvalResult {
  std::vector<LeadEvalRow> rows;
  double success_rate = 0.0;
  double mean_steps = 0.0;
};

LeadEvalResult eval_lead_pair(const NetParams& sender, const NetParams& receiver,
                              int trials, const LeadConfig& cfg, std::mt19937_64& rng);

// Scripted oracle agents for pipeline validation: the sender encodes bearing
// and distance into the two tones; the receiver decodes the spectra and
// steers. No learning anywhere.
std::array<double, 2> oracle_sender_tones(const RobotPose& pose, const ArenaSpec& arena);
std::array<double, 2> oracle_receiver_wheels(const std::vector<double>& spectra,
                                             const ToneChannelSpec& tone,
                                             const DriveSpec& drive);
LeadEvalResult run_oracle_pipeline(int trials, const LeadConfig& cfg, std::mt19937_64& rng);

}  // namespace emcom
