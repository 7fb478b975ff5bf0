#include "emcom/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace emcom {

double apply_activation(Activation kind, double z) {
  switch (kind) {
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  throw std::logic_error("unknown activation");
}

double activation_derivative(Activation kind, double a) {
  switch (kind) {
    case Activation::Sigmoid: return a * (1.0 - a);
    case Activation::Tanh: return 1.0 - a * a;
    case Activation::Identity: return 1.0;
  }
  throw std::logic_error("unknown activation");
}

const char* activation_name(Activation kind) {
  switch (kind) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  throw std::logic_error("unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation name: " + name);
}

void NetSpec::validate() const {
  if (input_size < 1) throw std::invalid_argument("NetSpec: input_size must be >= 1");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("NetSpec: zero-size hidden layer");
  if (output_activations.empty())
    throw std::invalid_argument("NetSpec: output_size must be >= 1");
  if (recurrent && hidden_sizes.empty())
    throw std::invalid_argument("NetSpec: recurrence requires at least one hidden layer");
  if (hidden_activation == Activation::Identity)
    throw std::invalid_argument("NetSpec: hidden activation must be sigmoid or tanh");
}

NetSpec make_spec(int input, std::vector<int> hidden, int output, bool recurrent,
                  Activation hidden_act, Activation output_act) {
  NetSpec spec;
  spec.input_size = input;
  spec.hidden_sizes = std::move(hidden);
  spec.recurrent = recurrent;
  spec.hidden_activation = hidden_act;
  spec.output_activations.assign(static_cast<size_t>(output), output_act);
  return spec;
}

size_t NetParams::parameter_count() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.weight.a.size() + l.bias.size();
  n += recurrent.a.size();
  return n;
}

RnnState initial_state(const NetSpec& spec) {
  RnnState s;
  if (spec.recurrent) s.h.assign(static_cast<size_t>(spec.hidden_sizes.back()), 0.0);
  return s;
}

bool StepTargets::active() const {
  for (char m : mask)
    if (m) return true;
  return false;
}

NetParams init_params(const NetSpec& spec, std::uint64_t seed, double scale) {
  spec.validate();
  if (scale < 0.0) throw std::invalid_argument("init_params: scale must be >= 0");

  NetParams p;
  p.spec = spec;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  auto draw = [&]() { return scale == 0.0 ? 0.0 : dist(rng); };

  int in = spec.input_size;
  for (int h : spec.hidden_sizes) {
    LayerParams l;
    l.weight = Matrix(h, in);
    for (double& w : l.weight.a) w = draw();
    l.bias.assign(static_cast<size_t>(h), 0.0);
    p.layers.push_back(std::move(l));
    in = h;
  }
  LayerParams out;
  out.weight = Matrix(spec.output_size(), in);
  for (double& w : out.weight.a) w = draw();
  out.bias.assign(static_cast<size_t>(spec.output_size()), 0.0);
  p.layers.push_back(std::move(out));

  if (spec.recurrent) {
    int n = spec.hidden_sizes.back();
    p.recurrent = Matrix(n, n);
    for (double& w : p.recurrent.a) w = draw();
  }
  return p;
}

namespace {

// y += W x
void matvec_acc(const Matrix& w, std::span<const double> x, std::span<double> y) {
  for (int r = 0; r < w.rows; ++r) {
    const double* row = w.a.data() + static_cast<size_t>(r) * w.cols;
    double acc = 0.0;
    for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<size_t>(c)];
    y[static_cast<size_t>(r)] += acc;
  }
}

// y += W^T d
void matvec_transpose_acc(const Matrix& w, std::span<const double> d, std::span<double> y) {
  for (int r = 0; r < w.rows; ++r) {
    const double* row = w.a.data() + static_cast<size_t>(r) * w.cols;
    const double dr = d[static_cast<size_t>(r)];
    if (dr == 0.0) continue;
    for (int c = 0; c < w.cols; ++c) y[static_cast<size_t>(c)] += row[c] * dr;
  }
}

// W += d x^T
void outer_acc(Matrix& w, std::span<const double> d, std::span<const double> x) {
  for (int r = 0; r < w.rows; ++r) {
    double* row = w.a.data() + static_cast<size_t>(r) * w.cols;
    const double dr = d[static_cast<size_t>(r)];
    if (dr == 0.0) continue;
    for (int c = 0; c < w.cols; ++c) row[c] += dr * x[static_cast<size_t>(c)];
  }
}

}  // namespace

ForwardResult forward(const NetParams& params, const RnnState& state,
                      std::span<const double> input) {
  const NetSpec& spec = params.spec;
  if (static_cast<int>(input.size()) != spec.input_size)
    throw std::invalid_argument("forward: input size mismatch");

  const int rec_size = spec.recurrent ? spec.hidden_sizes.back() : 0;
  if (spec.recurrent && !state.h.empty() && static_cast<int>(state.h.size()) != rec_size)
    throw std::invalid_argument("forward: recurrent state size mismatch");
  const size_t last_hidden = spec.hidden_sizes.size() - 1;  // unused if no hiddens

  ForwardResult res;
  res.io.input.assign(input.begin(), input.end());
  if (spec.recurrent)
    res.io.prev_state = state.h.empty() ? std::vector<double>(rec_size, 0.0) : state.h;

  std::vector<double> cur = res.io.input;
  for (size_t l = 0; l < spec.hidden_sizes.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    std::vector<double> z = layer.bias;
    matvec_acc(layer.weight, cur, z);
    if (spec.recurrent && l == last_hidden) matvec_acc(params.recurrent, res.io.prev_state, z);
    for (double& v : z) v = apply_activation(spec.hidden_activation, v);
    res.io.activations.push_back(z);
    cur = std::move(z);
  }

  const LayerParams& out = params.layers.back();
  std::vector<double> z = out.bias;
  matvec_acc(out.weight, cur, z);
  for (size_t j = 0; j < z.size(); ++j) z[j] = apply_activation(spec.output_activations[j], z[j]);
  res.io.activations.push_back(std::move(z));
  res.output = res.io.activations.back();

  if (spec.recurrent) res.state.h = res.io.activations[last_hidden];
  return res;
}

Gradients zero_gradients(const NetParams& params) {
  Gradients g;
  for (const auto& l : params.layers) {
    LayerParams gl;
    gl.weight = Matrix(l.weight.rows, l.weight.cols);
    gl.bias.assign(l.bias.size(), 0.0);
    g.layers.push_back(std::move(gl));
  }
  if (!params.recurrent.empty()) g.recurrent = Matrix(params.recurrent.rows, params.recurrent.cols);
  return g;
}

Gradients bptt(const NetParams& params, std::span<const StepIO> episode,
               std::span<const StepTargets> targets) {
  const NetSpec& spec = params.spec;
  if (episode.empty()) throw std::invalid_argument("bptt: empty episode");
  if (targets.size() != episode.size())
    throw std::invalid_argument("bptt: one StepTargets entry per step required");
  const size_t out_size = static_cast<size_t>(spec.output_size());
  for (const StepTargets& t : targets) {
    if (t.mask.empty()) continue;
    if (t.mask.size() != out_size || t.value.size() != out_size)
      throw std::invalid_argument("bptt: target dimension mismatch");
  }

  const size_t n_hidden = spec.hidden_sizes.size();
  const size_t out_layer = n_hidden;
  Gradients g = zero_gradients(params);

  // dL/d(pre-activation of the recurrent layer at t+1), pulled back through R.
  std::vector<double> carry;
  if (spec.recurrent) carry.assign(static_cast<size_t>(spec.hidden_sizes.back()), 0.0);

  for (size_t ti = episode.size(); ti-- > 0;) {
    const StepIO& step = episode[ti];
    const std::vector<double>& y = step.output();

    std::vector<double> delta_out(out_size, 0.0);
    if (ti < targets.size() && targets[ti].active()) {
      const StepTargets& tgt = targets[ti];
      for (size_t j = 0; j < out_size; ++j) {
        if (!tgt.mask[j]) continue;
        delta_out[j] = (y[j] - tgt.value[j]) *
                       activation_derivative(spec.output_activations[j], y[j]);
      }
    }

    const std::vector<double>& out_in =
        n_hidden == 0 ? step.input : step.activations[n_hidden - 1];
    outer_acc(g.layers[out_layer].weight, delta_out, out_in);
    for (size_t j = 0; j < out_size; ++j) g.layers[out_layer].bias[j] += delta_out[j];

    if (n_hidden == 0) continue;

    // Error on the last hidden activation: from the output layer now, and from
    // the next step's recurrent pre-activation.
    std::vector<double> err(static_cast<size_t>(spec.hidden_sizes.back()), 0.0);
    matvec_transpose_acc(params.layers[out_layer].weight, delta_out, err);
    if (spec.recurrent)
      for (size_t j = 0; j < err.size(); ++j) err[j] += carry[j];

    for (size_t l = n_hidden; l-- > 0;) {
      const std::vector<double>& act = step.activations[l];
      std::vector<double> delta(act.size());
      for (size_t j = 0; j < act.size(); ++j)
        delta[j] = err[j] * activation_derivative(spec.hidden_activation, act[j]);

      if (spec.recurrent && l == n_hidden - 1) {
        outer_acc(g.recurrent, delta, step.prev_state);
        carry.assign(carry.size(), 0.0);
        matvec_transpose_acc(params.recurrent, delta, carry);
      }

      const std::vector<double>& below = l == 0 ? step.input : step.activations[l - 1];
      outer_acc(g.layers[l].weight, delta, below);
      for (size_t j = 0; j < delta.size(); ++j) g.layers[l].bias[j] += delta[j];

      if (l > 0) {
        err.assign(step.activations[l - 1].size(), 0.0);
        matvec_transpose_acc(params.layers[l].weight, delta, err);
      }
    }
  }
  return g;
}

double episode_loss(const NetParams& params, std::span<const std::vector<double>> inputs,
                    std::span<const StepTargets> targets) {
  if (inputs.size() != targets.size())
    throw std::invalid_argument("episode_loss: inputs/targets length mismatch");
  RnnState state = initial_state(params.spec);
  double loss = 0.0;
  for (size_t t = 0; t < inputs.size(); ++t) {
    ForwardResult r = forward(params, state, inputs[t]);
    state = std::move(r.state);
    if (!targets[t].active()) continue;
    for (size_t j = 0; j < r.output.size(); ++j) {
      if (!targets[t].mask[j]) continue;
      const double e = r.output[j] - targets[t].value[j];
      loss += 0.5 * e * e;
    }
  }
  return loss;
}

Gradients fd_gradient_oracle(NetParams params, std::span<const std::vector<double>> inputs,
                             std::span<const StepTargets> targets, double epsilon) {
  if (epsilon < 1e-7 || epsilon > 1e-3)
    throw std::invalid_argument("fd_gradient_oracle: epsilon out of [1e-7, 1e-3]");
  Gradients g = zero_gradients(params);
  std::vector<double*> ps = parameter_view(params);
  std::vector<double*> gs = parameter_view(g, params);
  for (size_t i = 0; i < ps.size(); ++i) {
    const double saved = *ps[i];
    *ps[i] = saved + epsilon;
    const double lp = episode_loss(params, inputs, targets);
    *ps[i] = saved - epsilon;
    const double lm = episode_loss(params, inputs, targets);
    *ps[i] = saved;
    *gs[i] = (lp - lm) / (2.0 * epsilon);
  }
  return g;
}

NetParams sgd_apply(NetParams params, const Gradients& grads, double learning_rate) {
  if (learning_rate <= 0.0) throw std::invalid_argument("sgd_apply: learning_rate must be > 0");
  if (grads.layers.size() != params.layers.size())
    throw std::invalid_argument("sgd_apply: shape mismatch");
  for (size_t l = 0; l < params.layers.size(); ++l) {
    LayerParams& pl = params.layers[l];
    const LayerParams& gl = grads.layers[l];
    if (gl.weight.a.size() != pl.weight.a.size() || gl.bias.size() != pl.bias.size())
      throw std::invalid_argument("sgd_apply: shape mismatch");
    for (size_t i = 0; i < pl.weight.a.size(); ++i) pl.weight.a[i] -= learning_rate * gl.weight.a[i];
    for (size_t i = 0; i < pl.bias.size(); ++i) pl.bias[i] -= learning_rate * gl.bias[i];
  }
  if (grads.recurrent.a.size() != params.recurrent.a.size())
    throw std::invalid_argument("sgd_apply: shape mismatch");
  for (size_t i = 0; i < params.recurrent.a.size(); ++i)
    params.recurrent.a[i] -= learning_rate * grads.recurrent.a[i];
  return params;
}

namespace {

template <class Layers, class Rec>
std::vector<double*> view_impl(Layers& layers, Rec& rec) {
  std::vector<double*> out;
  for (auto& l : layers) {
    for (double& w : l.weight.a) out.push_back(&w);
    for (double& b : l.bias) out.push_back(&b);
  }
  for (double& w : rec.a) out.push_back(&w);
  return out;
}

}  // namespace

std::vector<double*> parameter_view(NetParams& params) {
  return view_impl(params.layers, params.recurrent);
}

std::vector<double*> parameter_view(Gradients& grads, const NetParams& shape) {
  if (grads.layers.size() != shape.layers.size())
    throw std::invalid_argument("parameter_view: gradient shape mismatch");
  return view_impl(grads.layers, grads.recurrent);
}

// --- checkpoint format ---
//
//   emcom-checkpoint v1
//   net <name>
//   spec in=<n> hidden=<a,b,...|-> out=<n> recurrent=<0|1> hidden_act=<k> out_act=<k,k,...>
//   tensor <tensor-name> <rows> <cols>
//   <rows lines of cols %.17g values>
//   ...
//   end <name>
//
// Tensor names per net: layer<k>.weight, layer<k>.bias, recurrent.weight.

namespace {

void write_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  os << "tensor " << name << ' ' << m.rows << ' ' << m.cols << '\n';
  char buf[32];
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.at(r, c));
      os << buf << (c + 1 == m.cols ? "" : " ");
    }
    os << '\n';
  }
}

Matrix read_matrix(std::istream& is, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (!(is >> m.at(r, c))) throw std::runtime_error("checkpoint: truncated tensor");
  return m;
}

std::string spec_line(const NetSpec& s) {
  std::ostringstream os;
  os << "spec in=" << s.input_size << " hidden=";
  if (s.hidden_sizes.empty()) {
    os << "-";
  } else {
    for (size_t i = 0; i < s.hidden_sizes.size(); ++i)
      os << (i ? "," : "") << s.hidden_sizes[i];
  }
  os << " out=" << s.output_size() << " recurrent=" << (s.recurrent ? 1 : 0)
     << " hidden_act=" << activation_name(s.hidden_activation) << " out_act=";
  for (size_t i = 0; i < s.output_activations.size(); ++i)
    os << (i ? "," : "") << activation_name(s.output_activations[i]);
  return os.str();
}

std::string expect_kv(const std::string& tok, const std::string& key) {
  const std::string prefix = key + "=";
  if (tok.rfind(prefix, 0) != 0)
    throw std::runtime_error("checkpoint: expected " + key + "=..., got " + tok);
  return tok.substr(prefix.size());
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

NetSpec parse_spec_line(std::istream& is) {
  std::string in_tok, hid_tok, out_tok, rec_tok, hact_tok, oact_tok;
  if (!(is >> in_tok >> hid_tok >> out_tok >> rec_tok >> hact_tok >> oact_tok))
    throw std::runtime_error("checkpoint: malformed spec line");
  NetSpec s;
  s.input_size = std::stoi(expect_kv(in_tok, "in"));
  const std::string hidden = expect_kv(hid_tok, "hidden");
  if (hidden != "-")
    for (const std::string& part : split_commas(hidden)) s.hidden_sizes.push_back(std::stoi(part));
  const int out = std::stoi(expect_kv(out_tok, "out"));
  s.recurrent = expect_kv(rec_tok, "recurrent") == "1";
  s.hidden_activation = activation_from_name(expect_kv(hact_tok, "hidden_act"));
  for (const std::string& part : split_commas(expect_kv(oact_tok, "out_act")))
    s.output_activations.push_back(activation_from_name(part));
  if (s.output_size() != out) throw std::runtime_error("checkpoint: out size disagrees with out_act");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::map<std::string, NetParams>& nets) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os << "emcom-checkpoint v1\n";
  for (const auto& [name, p] : nets) {
    os << "net " << name << '\n' << spec_line(p.spec) << '\n';
    for (size_t l = 0; l < p.layers.size(); ++l) {
      write_matrix(os, "layer" + std::to_string(l) + ".weight", p.layers[l].weight);
      Matrix bias(1, static_cast<int>(p.layers[l].bias.size()));
      bias.a = p.layers[l].bias;
      write_matrix(os, "layer" + std::to_string(l) + ".bias", bias);
    }
    if (!p.recurrent.empty()) write_matrix(os, "recurrent.weight", p.recurrent);
    os << "end " << name << '\n';
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

std::map<std::string, NetParams> load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  std::string word;
  if (!(is >> word) || word != "emcom-checkpoint") throw std::runtime_error("checkpoint: bad magic");
  if (!(is >> word) || word != "v1") throw std::runtime_error("checkpoint: unsupported version");

  std::map<std::string, NetParams> nets;
  while (is >> word) {
    if (word != "net") throw std::runtime_error("checkpoint: expected 'net', got " + word);
    std::string name;
    if (!(is >> name)) throw std::runtime_error("checkpoint: missing net name");
    if (!(is >> word) || word != "spec") throw std::runtime_error("checkpoint: expected spec");
    NetParams p;
    p.spec = parse_spec_line(is);
    p.spec.validate();

    while (is >> word && word == "tensor") {
      std::string tname;
      int rows = 0, cols = 0;
      if (!(is >> tname >> rows >> cols)) throw std::runtime_error("checkpoint: bad tensor header");
      Matrix m = read_matrix(is, rows, cols);
      if (tname == "recurrent.weight") {
        p.recurrent = std::move(m);
      } else if (tname.rfind("layer", 0) == 0) {
        const size_t dot = tname.find('.');
        if (dot == std::string::npos) throw std::runtime_error("checkpoint: bad tensor name " + tname);
        const size_t idx = std::stoul(tname.substr(5, dot - 5));
        if (p.layers.size() <= idx) p.layers.resize(idx + 1);
        const std::string field = tname.substr(dot + 1);
        if (field == "weight") {
          p.layers[idx].weight = std::move(m);
        } else if (field == "bias") {
          if (m.rows != 1) throw std::runtime_error("checkpoint: bias must have 1 row");
          p.layers[idx].bias = std::move(m.a);
        } else {
          throw std::runtime_error("checkpoint: unknown tensor field " + field);
        }
      } else {
        throw std::runtime_error("checkpoint: unknown tensor " + tname);
      }
    }
    if (word != "end") throw std::runtime_error("checkpoint: expected 'end'");
    std::string end_name;
    if (!(is >> end_name) || end_name != name)
      throw std::runtime_error("checkpoint: mismatched end marker for " + name);

    const size_t expect_layers = p.spec.hidden_sizes.size() + 1;
    if (p.layers.size() != expect_layers)
      throw std::runtime_error("checkpoint: net " + name + " has wrong layer count");
    if (p.spec.recurrent && p.recurrent.empty())
      throw std::runtime_error("checkpoint: net " + name + " missing recurrent tensor");
    nets.emplace(name, std::move(p));
  }
  return nets;
}

NetParams load_net(const std::string& path, const std::string& name) {
  auto nets = load_checkpoint(path);
  auto it = nets.find(name);
  if (it == nets.end()) throw std::runtime_error("checkpoint: no net named " + name + " in " + path);
  return std::move(it->second);
}

}  // namespace emcom
