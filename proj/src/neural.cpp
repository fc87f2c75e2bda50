#include "softcap/neural.hpp"

#include <cmath>
#include <random>

#include "softcap/binary_io.hpp"

namespace softcap::nn {

std::vector<std::size_t> DenseParams::sizes() const {
  std::vector<std::size_t> s;
  if (layers.empty()) return s;
  s.push_back(in_dim());
  for (const auto& l : layers) s.push_back(l.weight.rows);
  return s;
}

std::size_t DenseParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.size();
  return n;
}

DenseParams DenseParams::zeros_like() const {
  DenseParams z;
  for (const auto& l : layers) z.layers.push_back({Matrix(l.weight.rows, l.weight.cols), std::vector<double>(l.bias.size())});
  return z;
}

DenseParams init_params(std::uint64_t seed, std::span<const std::size_t> sizes) {
  if (sizes.size() < 2) throw ShapeError("init_params: need at least input and output sizes");
  for (auto s : sizes)
    if (s < 1) throw ShapeError("init_params: layer sizes must be >= 1");
  std::mt19937_64 rng(seed);
  DenseParams p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = std::sqrt(1.0 / static_cast<double>(sizes[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(sizes[l + 1], sizes[l]), std::vector<double>(sizes[l + 1], 0.0)};
    for (double& w : layer.weight.data) w = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

Matrix forward(const DenseParams& params, const Matrix& input, OutputActivation output_activation,
               ForwardCache* cache) {
  if (params.layers.empty()) throw ShapeError("forward: empty network");
  if (input.cols != params.in_dim()) throw ShapeError("forward: input width does not match first layer");
  if (cache) {
    cache->inputs.clear();
    cache->pre.clear();
    cache->output_activation = output_activation;
  }
  Matrix x = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix z;
    kernels::affine_forward(x, layer.weight, layer.bias, z);
    if (cache) {
      cache->inputs.push_back(std::move(x));
      cache->pre.push_back(z);
    }
    const bool last = l + 1 == params.layers.size();
    if (!last) {
      for (double& v : z.data) v = v > 0.0 ? v : 0.0;
    } else if (output_activation == OutputActivation::kTanh) {
      for (double& v : z.data) v = std::tanh(v);
    }
    x = std::move(z);
  }
  if (cache) cache->output = x;
  return x;
}

Gradients backward(const DenseParams& params, const ForwardCache& cache, const Matrix& d_output) {
  const std::size_t depth = params.layers.size();
  if (cache.inputs.size() != depth || cache.pre.size() != depth) throw ShapeError("backward: cache does not match network");
  if (d_output.rows != cache.output.rows || d_output.cols != cache.output.cols)
    throw ShapeError("backward: output gradient shape mismatch");
  for (std::size_t l = 0; l < depth; ++l) {
    if (cache.inputs[l].cols != params.layers[l].weight.cols || cache.pre[l].cols != params.layers[l].weight.rows)
      throw ShapeError("backward: cache does not match network");
  }

  Gradients g;
  g.params = params.zeros_like();
  Matrix delta = d_output;
  if (cache.output_activation == OutputActivation::kTanh) {
    for (std::size_t i = 0; i < delta.data.size(); ++i) {
      const double y = cache.output.data[i];
      delta.data[i] *= 1.0 - y * y;
    }
  }
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = params.layers[l];
    kernels::affine_backward_params(delta, cache.inputs[l], g.params.layers[l].weight, g.params.layers[l].bias);
    Matrix d_in;
    kernels::affine_backward_input(delta, layer.weight, d_in);
    if (l > 0) {
      const Matrix& z = cache.pre[l - 1];
      for (std::size_t i = 0; i < d_in.data.size(); ++i)
        if (!(z.data[i] > 0.0)) d_in.data[i] = 0.0;
    }
    delta = std::move(d_in);
  }
  g.input = std::move(delta);
  return g;
}

bool all_finite(const DenseParams& p) {
  bool ok = true;
  for_each_buffer(p, [&](std::span<const double> buf) {
    for (double v : buf)
      if (!std::isfinite(v)) ok = false;
  });
  return ok;
}

void adam_step(DenseParams& params, const DenseParams& grads, AdamState& state, const AdamConfig& config) {
  if (grads.sizes() != params.sizes() || state.m.sizes() != params.sizes() || state.v.sizes() != params.sizes())
    throw ShapeError("adam_step: shape mismatch");
  if (!all_finite(grads)) throw NonFiniteError("adam_step: non-finite gradient, update rejected");

  state.t += 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
        p[i] -= config.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.eps);
      }
    };
    update(params.layers[l].weight.data, grads.layers[l].weight.data, state.m.layers[l].weight.data,
           state.v.layers[l].weight.data);
    update(params.layers[l].bias, grads.layers[l].bias, state.m.layers[l].bias, state.v.layers[l].bias);
  }
}

void ScalarAdam::step(double& value, double grad, const AdamConfig& config) {
  if (!std::isfinite(grad)) throw NonFiniteError("ScalarAdam: non-finite gradient, update rejected");
  t += 1;
  m = config.beta1 * m + (1.0 - config.beta1) * grad;
  v = config.beta2 * v + (1.0 - config.beta2) * grad * grad;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  value -= config.lr * (m / c1) / (std::sqrt(v / c2) + config.eps);
}

void write_params(std::ostream& os, const DenseParams& params) {
  os.write("SCNN", 4);
  io::write_u32(os, kParamsVersion);
  io::write_u32(os, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    io::write_u32(os, static_cast<std::uint32_t>(l.weight.rows));
    io::write_u32(os, static_cast<std::uint32_t>(l.weight.cols));
  }
  for (const auto& l : params.layers) {
    io::write_f64s(os, l.weight.data);
    io::write_f64s(os, l.bias);
  }
}

DenseParams read_params(std::istream& is) {
  io::expect_magic(is, "SCNN");
  const auto version = io::read_u32(is);
  if (version != kParamsVersion) throw io::FormatError("unsupported network version " + std::to_string(version));
  const auto count = io::read_u32(is);
  if (count == 0 || count > 64) throw io::FormatError("implausible layer count");
  DenseParams p;
  std::size_t prev_out = 0;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto out = io::read_u32(is);
    const auto in = io::read_u32(is);
    if (out == 0 || in == 0 || out > (1u << 16) || in > (1u << 16)) throw io::FormatError("implausible layer shape");
    if (l > 0 && in != prev_out) throw io::FormatError("layer shapes do not chain");
    prev_out = out;
    p.layers.push_back({Matrix(out, in), std::vector<double>(out)});
  }
  for (auto& l : p.layers) {
    io::read_f64s(is, l.weight.data);
    io::read_f64s(is, l.bias);
  }
  return p;
}

}  // namespace softcap::nn
