#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "moec/common.hpp"

namespace moec::nn {

enum class Activation { kTanh };

// Fixed MLP topology: tanh hidden layers, linear output.
struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_dims{256, 256, 256};
  int output_dim = 1;
  Activation activation = Activation::kTanh;

  int layer_count() const { return static_cast<int>(hidden_dims.size()) + 1; }
  std::size_t param_count() const;
  void validate() const;  // throws ConfigError on non-positive dims
  bool operator==(const MlpSpec&) const = default;
};

// All weights and biases as one flat vector. Per-layer layout:
// weight matrix (out x in, row-major) followed by the bias vector.
struct MlpParams {
  MlpSpec spec;
  std::vector<double> values;
};

MlpParams zero_params(const MlpSpec& spec);

// Uniform init in +-1/sqrt(fan_in), zero biases. `input_scales`, when given,
// divides the first-layer columns by the typical magnitude of each input
// feature so raw (unnormalized) observations do not saturate the tanh units.
MlpParams init_params(const MlpSpec& spec, Rng& rng,
                      std::span<const double> input_scales = {});

// Reusable scratch for the hot loops; forward/backward never allocate when
// handed one that has been used with the same spec before.
struct Workspace {
  std::vector<std::vector<double>> act;  // act[0] = input, act[k] = layer k out
  std::vector<double> delta, delta_next;
};

void forward(const MlpParams& p, std::span<const double> input,
             std::vector<double>& out, Workspace& ws);
std::vector<double> forward(const MlpParams& p, std::span<const double> input);

// Reverse-mode gradients for the scalar loss whose gradient w.r.t. the
// network output is `output_grad`. Either destination may be null; non-null
// destinations are accumulated into (+=) and must be pre-sized and zeroed by
// the caller on first use.
void backward(const MlpParams& p, std::span<const double> input,
              std::span<const double> output_grad, std::span<double> param_grad,
              std::span<double> input_grad, Workspace& ws);
// As above, also handing back the forward output computed on the way.
void backward(const MlpParams& p, std::span<const double> input,
              std::span<const double> output_grad, std::span<double> param_grad,
              std::span<double> input_grad, std::vector<double>& output,
              Workspace& ws);

std::vector<double> backward_params(const MlpParams& p,
                                    std::span<const double> input,
                                    std::span<const double> output_grad);
std::vector<double> backward_input(const MlpParams& p,
                                   std::span<const double> input,
                                   std::span<const double> output_grad);

struct AdamState {
  std::vector<double> m, v;  // first/second moment, zero-initialized
  std::int64_t step = 0;
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Optional reparameterization: when set, the optimizer treats
  // param[i] * param_scale[i] as the trainable quantity. Equivalent to
  // normalizing the corresponding input column; keeps the stored parameters
  // and the forward pass a plain MLP.
  std::vector<double> param_scale;
};

AdamState make_adam_state(std::size_t param_count, double step_size);

// Standard Adam update. Returns false (and leaves params and state untouched,
// except nothing) when the gradient contains a non-finite entry.
bool adam_step(MlpParams& params, std::span<const double> grads, AdamState& st);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

// Checkpoint: <prefix>.manifest (text key-value) + <prefix>.bin
// (little-endian float64 blob). Round-trips bit-exactly.
void save_params(const MlpParams& p, const std::filesystem::path& prefix,
                 std::uint64_t seed = 0);
MlpParams load_params(const std::filesystem::path& prefix);

}  // namespace moec::nn
