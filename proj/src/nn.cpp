#include "moec/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace moec::nn {

namespace {

struct LayerDims {
  int in, out;
  std::size_t w_off, b_off;
};

// Layer sizes and flat-vector offsets for a spec.
std::vector<LayerDims> layout(const MlpSpec& spec) {
  std::vector<LayerDims> ls;
  ls.reserve(spec.layer_count());
  int in = spec.input_dim;
  std::size_t off = 0;
  for (int k = 0; k < spec.layer_count(); ++k) {
    const int out = (k + 1 == spec.layer_count())
                        ? spec.output_dim
                        : spec.hidden_dims[static_cast<std::size_t>(k)];
    LayerDims d{in, out, off, off + static_cast<std::size_t>(in) * out};
    off = d.b_off + static_cast<std::size_t>(out);
    ls.push_back(d);
    in = out;
  }
  return ls;
}

void check_input(const MlpParams& p, std::span<const double> input) {
  if (static_cast<int>(input.size()) != p.spec.input_dim)
    throw ConfigError("mlp input length " + std::to_string(input.size()) +
                      " does not match input_dim " +
                      std::to_string(p.spec.input_dim));
  if (p.values.size() != p.spec.param_count())
    throw ConfigError("mlp parameter vector size mismatch");
}

}  // namespace

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  int in = input_dim;
  for (int k = 0; k < layer_count(); ++k) {
    const int out = (k + 1 == layer_count())
                        ? output_dim
                        : hidden_dims[static_cast<std::size_t>(k)];
    n += static_cast<std::size_t>(in) * out + out;
    in = out;
  }
  return n;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1)
    throw ConfigError("mlp dims must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("mlp hidden dims must be >= 1");
}

MlpParams zero_params(const MlpSpec& spec) {
  spec.validate();
  return MlpParams{spec, std::vector<double>(spec.param_count(), 0.0)};
}

MlpParams init_params(const MlpSpec& spec, Rng& rng,
                      std::span<const double> input_scales) {
  spec.validate();
  if (!input_scales.empty() &&
      static_cast<int>(input_scales.size()) != spec.input_dim)
    throw ConfigError("input_scales length must equal input_dim");
  MlpParams p = zero_params(spec);
  const auto ls = layout(spec);
  for (std::size_t k = 0; k < ls.size(); ++k) {
    const auto& d = ls[k];
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.in));
    for (int i = 0; i < d.out; ++i) {
      for (int j = 0; j < d.in; ++j) {
        double w = rng.uniform(-bound, bound);
        if (k == 0 && !input_scales.empty()) w /= input_scales[j];
        p.values[d.w_off + static_cast<std::size_t>(i) * d.in + j] = w;
      }
    }
    // biases stay zero
  }
  return p;
}

void forward(const MlpParams& p, std::span<const double> input,
             std::vector<double>& out, Workspace& ws) {
  check_input(p, input);
  const auto ls = layout(p.spec);
  const std::size_t n_layers = ls.size();
  if (ws.act.size() != n_layers + 1) ws.act.resize(n_layers + 1);
  ws.act[0].assign(input.begin(), input.end());
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto& d = ls[k];
    auto& a = ws.act[k + 1];
    a.resize(static_cast<std::size_t>(d.out));
    const double* x = ws.act[k].data();
    const bool last = (k + 1 == n_layers);
    for (int i = 0; i < d.out; ++i) {
      const double* row = &p.values[d.w_off + static_cast<std::size_t>(i) * d.in];
      double s = p.values[d.b_off + static_cast<std::size_t>(i)];
      for (int j = 0; j < d.in; ++j) s += row[j] * x[j];
      a[static_cast<std::size_t>(i)] = last ? s : std::tanh(s);
    }
  }
  out = ws.act[n_layers];
}

std::vector<double> forward(const MlpParams& p, std::span<const double> input) {
  Workspace ws;
  std::vector<double> out;
  forward(p, input, out, ws);
  return out;
}

void backward(const MlpParams& p, std::span<const double> input,
              std::span<const double> output_grad, std::span<double> param_grad,
              std::span<double> input_grad, Workspace& ws) {
  std::vector<double> out;
  backward(p, input, output_grad, param_grad, input_grad, out, ws);
}

void backward(const MlpParams& p, std::span<const double> input,
              std::span<const double> output_grad, std::span<double> param_grad,
              std::span<double> input_grad, std::vector<double>& output,
              Workspace& ws) {
  check_input(p, input);
  if (static_cast<int>(output_grad.size()) != p.spec.output_dim)
    throw ConfigError("output_grad length does not match output_dim");
  if (!param_grad.empty() && param_grad.size() != p.values.size())
    throw ConfigError("param_grad destination size mismatch");
  if (!input_grad.empty() &&
      static_cast<int>(input_grad.size()) != p.spec.input_dim)
    throw ConfigError("input_grad destination size mismatch");

  std::vector<double>& out = output;
  forward(p, input, out, ws);

  const auto ls = layout(p.spec);
  ws.delta.assign(output_grad.begin(), output_grad.end());
  for (int k = static_cast<int>(ls.size()) - 1; k >= 0; --k) {
    const auto& d = ls[static_cast<std::size_t>(k)];
    const auto& a_prev = ws.act[static_cast<std::size_t>(k)];
    // dW, db for this layer
    if (!param_grad.empty()) {
      for (int i = 0; i < d.out; ++i) {
        const double g = ws.delta[static_cast<std::size_t>(i)];
        if (g == 0.0) continue;
        double* dst = &param_grad[d.w_off + static_cast<std::size_t>(i) * d.in];
        for (int j = 0; j < d.in; ++j) dst[j] += g * a_prev[static_cast<std::size_t>(j)];
        param_grad[d.b_off + static_cast<std::size_t>(i)] += g;
      }
    }
    const bool need_prev = (k > 0) || !input_grad.empty();
    if (!need_prev) break;
    ws.delta_next.assign(static_cast<std::size_t>(d.in), 0.0);
    for (int i = 0; i < d.out; ++i) {
      const double g = ws.delta[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      const double* row = &p.values[d.w_off + static_cast<std::size_t>(i) * d.in];
      for (int j = 0; j < d.in; ++j) ws.delta_next[static_cast<std::size_t>(j)] += g * row[j];
    }
    if (k > 0) {
      // chain through the tanh of the previous layer: tanh' = 1 - a^2
      for (int j = 0; j < d.in; ++j) {
        const double a = a_prev[static_cast<std::size_t>(j)];
        ws.delta_next[static_cast<std::size_t>(j)] *= (1.0 - a * a);
      }
      std::swap(ws.delta, ws.delta_next);
    } else {
      for (int j = 0; j < d.in; ++j) input_grad[static_cast<std::size_t>(j)] += ws.delta_next[static_cast<std::size_t>(j)];
    }
  }
}

std::vector<double> backward_params(const MlpParams& p,
                                    std::span<const double> input,
                                    std::span<const double> output_grad) {
  Workspace ws;
  std::vector<double> grad(p.values.size(), 0.0);
  backward(p, input, output_grad, grad, {}, ws);
  return grad;
}

std::vector<double> backward_input(const MlpParams& p,
                                   std::span<const double> input,
                                   std::span<const double> output_grad) {
  Workspace ws;
  std::vector<double> grad(static_cast<std::size_t>(p.spec.input_dim), 0.0);
  backward(p, input, output_grad, {}, grad, ws);
  return grad;
}

AdamState make_adam_state(std::size_t param_count, double step_size) {
  AdamState st;
  st.m.assign(param_count, 0.0);
  st.v.assign(param_count, 0.0);
  st.step_size = step_size;
  return st;
}

bool adam_step(MlpParams& params, std::span<const double> grads, AdamState& st) {
  if (grads.size() != params.values.size() || st.m.size() != grads.size())
    throw ConfigError("adam_step shape mismatch");
  if (!st.param_scale.empty() && st.param_scale.size() != grads.size())
    throw ConfigError("adam_step param_scale size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) return false;
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  const bool scaled = !st.param_scale.empty();
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double inv_s = scaled ? 1.0 / st.param_scale[i] : 1.0;
    const double g = grads[i] * inv_s;
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params.values[i] -= st.step_size * mhat / (std::sqrt(vhat) + st.epsilon) * inv_s;
  }
  return true;
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  if (target.values.size() != online.values.size() ||
      !(target.spec == online.spec))
    throw ConfigError("soft_update shape mismatch");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0,1]");
  for (std::size_t i = 0; i < target.values.size(); ++i)
    target.values[i] = tau * online.values[i] + (1.0 - tau) * target.values[i];
}

namespace {

std::string dims_to_string(const std::vector<int>& dims) {
  std::string s;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(dims[i]);
  }
  return s;
}

std::vector<int> dims_from_string(const std::string& s) {
  std::vector<int> dims;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) dims.push_back(std::stoi(tok));
  return dims;
}

void write_le_doubles(std::ofstream& out, std::span<const double> vals) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(vals.data()),
              static_cast<std::streamsize>(vals.size() * 8));
  } else {
    for (double v : vals) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(b, 8);
    }
  }
}

void read_le_doubles(std::ifstream& in, std::span<double> vals) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * 8));
  } else {
    for (double& v : vals) {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      std::memcpy(&v, &bits, 8);
    }
  }
}

}  // namespace

void save_params(const MlpParams& p, const std::filesystem::path& prefix,
                 std::uint64_t seed) {
  const auto manifest_path = prefix.string() + ".manifest";
  const auto blob_path = prefix.string() + ".bin";
  std::ofstream mf(manifest_path);
  if (!mf) throw DataError("cannot write " + manifest_path);
  mf << "format=moec-mlp-v1\n"
     << "input_dim=" << p.spec.input_dim << "\n"
     << "hidden_dims=" << dims_to_string(p.spec.hidden_dims) << "\n"
     << "output_dim=" << p.spec.output_dim << "\n"
     << "activation=tanh\n"
     << "param_count=" << p.values.size() << "\n"
     << "seed=" << seed << "\n";
  mf.close();
  std::ofstream bf(blob_path, std::ios::binary);
  if (!bf) throw DataError("cannot write " + blob_path);
  write_le_doubles(bf, p.values);
}

MlpParams load_params(const std::filesystem::path& prefix) {
  const auto manifest_path = prefix.string() + ".manifest";
  const auto blob_path = prefix.string() + ".bin";
  std::ifstream mf(manifest_path);
  if (!mf) throw DataError("cannot open " + manifest_path);
  MlpSpec spec;
  std::size_t count = 0;
  std::string line;
  while (std::getline(mf, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    if (key == "input_dim") spec.input_dim = std::stoi(val);
    else if (key == "hidden_dims") spec.hidden_dims = dims_from_string(val);
    else if (key == "output_dim") spec.output_dim = std::stoi(val);
    else if (key == "param_count") count = std::stoull(val);
    else if (key == "activation" && val != "tanh")
      throw DataError("unsupported activation in checkpoint: " + val);
  }
  spec.validate();
  if (count != spec.param_count())
    throw DataError("checkpoint param_count disagrees with spec in " +
                    manifest_path);
  MlpParams p{spec, std::vector<double>(count)};
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw DataError("cannot open " + blob_path);
  read_le_doubles(bf, p.values);
  if (!bf) throw DataError("checkpoint blob truncated: " + blob_path);
  return p;
}

}  // namespace moec::nn
