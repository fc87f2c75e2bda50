#pragma once

// Fully connected networks with ReLU hidden layers, hand-written backward
// passes and Adam. Float64 throughout.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "softcap/kernels.hpp"

namespace softcap::nn {

/// Raised when a loss, gradient or weight stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on shape mismatches between parameters, caches and batches.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OutputActivation { kLinear, kTanh };

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct DenseParams {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
  /// {in, hidden..., out}
  std::vector<std::size_t> sizes() const;
  std::size_t parameter_count() const;
  /// Same shapes, all zeros.
  DenseParams zeros_like() const;

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

/// Calls fn(span<double>) on every weight and bias buffer, in layer order.
template <typename Params, typename Fn>
void for_each_buffer(Params& p, Fn&& fn) {
  for (auto& l : p.layers) {
    fn(std::span(l.weight.data));
    fn(std::span(l.bias));
  }
}

/// Weights uniform in +-sqrt(1/fan_in), zero biases.
DenseParams init_params(std::uint64_t seed, std::span<const std::size_t> sizes);

struct ForwardCache {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
  OutputActivation output_activation = OutputActivation::kLinear;
};

Matrix forward(const DenseParams& params, const Matrix& input, OutputActivation output_activation,
               ForwardCache* cache = nullptr);

struct Gradients {
  DenseParams params;
  Matrix input;
};

Gradients backward(const DenseParams& params, const ForwardCache& cache, const Matrix& d_output);

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  DenseParams m;
  DenseParams v;
  std::int64_t t = 0;

  static AdamState for_params(const DenseParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// Bias-corrected Adam. Rejects non-finite gradients before touching any state.
void adam_step(DenseParams& params, const DenseParams& grads, AdamState& state, const AdamConfig& config = {});

/// Single-scalar Adam (used for the entropy temperature).
struct ScalarAdam {
  double m = 0.0;
  double v = 0.0;
  std::int64_t t = 0;

  void step(double& value, double grad, const AdamConfig& config = {});
};

bool all_finite(const DenseParams& p);

/// Binary layout: "SCNN", u32 version, u32 layer count, (u32 out, u32 in) per
/// layer, then per layer the row-major weights and the bias, all as
/// little-endian IEEE-754 float64.
void write_params(std::ostream& os, const DenseParams& params);
DenseParams read_params(std::istream& is);

inline constexpr std::uint32_t kParamsVersion = 1;

}  // namespace softcap::nn
