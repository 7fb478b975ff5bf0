// Minimal neural substrate: dense feedforward and Elman-style recurrent nets,
// forward evaluation, backpropagation through time, a finite-difference
// gradient oracle, and plain gradient-descent updates.
//
// A net is a stack of hidden layers followed by one output layer. When
// `recurrent` is set, the last hidden layer additionally receives its own
// previous activation through a square recurrent matrix; that activation is
// the state carried between time steps and is zero at episode start.
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace emcom {

enum class Activation { Sigmoid, Tanh, Identity };

double apply_activation(Activation kind, double z);
// Derivative expressed through the post-activation value a = act(z).
double activation_derivative(Activation kind, double a);

const char* activation_name(Activation kind);
Activation activation_from_name(const std::string& name);

struct NetSpec {
  int input_size = 1;
  std::vector<int> hidden_sizes;
  bool recurrent = false;
  Activation hidden_activation = Activation::Tanh;
  std::vector<Activation> output_activations;  // one entry per output unit

  int output_size() const { return static_cast<int>(output_activations.size()); }
  void validate() const;  // throws std::invalid_argument
  bool operator==(const NetSpec&) const = default;
};

// Uniform output activation convenience.
NetSpec make_spec(int input, std::vector<int> hidden, int output, bool recurrent,
                  Activation hidden_act, Activation output_act);

// Row-major dense matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  bool empty() const { return a.empty(); }
  bool operator==(const Matrix&) const = default;
};

struct LayerParams {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
  bool operator==(const LayerParams&) const = default;
};

struct NetParams {
  NetSpec spec;
  std::vector<LayerParams> layers;  // hidden layers in order, then the output layer
  Matrix recurrent;                 // square on the last hidden layer; empty if none

  size_t parameter_count() const;
  bool operator==(const NetParams&) const = default;
};

struct Gradients {
  std::vector<LayerParams> layers;
  Matrix recurrent;
};

// Activation of the recurrent hidden layer carried between steps.
// Empty vector means "zero state" (and is all a feedforward net ever needs).
struct RnnState {
  std::vector<double> h;
};

RnnState initial_state(const NetSpec& spec);

// Record of one forward pass, sufficient to replay it exactly and to run BPTT.
struct StepIO {
  int t = 0;
  std::vector<double> input;
  std::vector<double> prev_state;                // recurrent state before this step
  std::vector<std::vector<double>> activations;  // per layer, output layer last

  const std::vector<double>& output() const { return activations.back(); }
};

// Optional per-step training target. Inactive steps contribute only dynamics.
struct StepTargets {
  std::vector<double> value;  // per output unit; ignored where mask is 0
  std::vector<char> mask;     // empty == no target at this step

  bool active() const;
  static StepTargets none() { return {}; }
};

struct ForwardResult {
  std::vector<double> output;
  RnnState state;
  StepIO io;
};

// Weights i.i.d. uniform in [-scale, scale]; biases zero. Deterministic per seed.
NetParams init_params(const NetSpec& spec, std::uint64_t seed, double scale);

ForwardResult forward(const NetParams& params, const RnnState& state,
                      std::span<const double> input);

// Gradient of L = 1/2 * sum over masked (output - target)^2 for a whole episode,
// with error flowing backward through the recurrent matrix.
Gradients bptt(const NetParams& params, std::span<const StepIO> episode,
               std::span<const StepTargets> targets);

// Episode loss replayed from a zero initial state.
double episode_loss(const NetParams& params, std::span<const std::vector<double>> inputs,
                    std::span<const StepTargets> targets);

// Central-difference estimate of the same gradient; independent of bptt.
Gradients fd_gradient_oracle(NetParams params, std::span<const std::vector<double>> inputs,
                             std::span<const StepTargets> targets, double epsilon);

// params - learning_rate * grads, elementwise.
NetParams sgd_apply(NetParams params, const Gradients& grads, double learning_rate);

Gradients zero_gradients(const NetParams& params);

// Flat views over all trainable scalars, in the documented fixed order:
// per layer weight (row-major) then bias, hidden layers first, output layer,
// recurrent matrix last.
std::vector<double*> parameter_view(NetParams& params);
std::vector<double*> parameter_view(Gradients& grads, const NetParams& shape);

// --- checkpoint file (versioned text format, documented in the README) ---

void save_checkpoint(const std::string& path, const std::map<std::string, NetParams>& nets);
std::map<std::string, NetParams> load_checkpoint(const std::string& path);
NetParams load_net(const std::string& path, const std::string& name);

}  // namespace emcom
