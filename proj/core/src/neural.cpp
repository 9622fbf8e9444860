#include "penbias/neural.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "penbias/rng.hpp"

namespace penbias {

namespace {

double apply_hidden(Activation act, double z) {
  return act == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

// derivative expressed through the activation output a
double hidden_deriv(Activation act, double a) {
  return act == Activation::Tanh ? 1.0 - a * a : (a > 0.0 ? 1.0 : 0.0);
}

double apply_output(OutputActivation act, double z) {
  if (act == OutputActivation::Linear) return z;
  // logistic; large |z| saturates cleanly to 0 or 1
  return 1.0 / (1.0 + std::exp(-z));
}

double output_deriv(OutputActivation act, double y) {
  return act == OutputActivation::Linear ? 1.0 : y * (1.0 - y);
}

void check_net(const NetworkParams& net) {
  if (net.layer_sizes.size() < 2 || net.layers.size() != net.layer_sizes.size() - 1) {
    throw std::invalid_argument("network: layer_sizes and layers are inconsistent");
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    if (layer.weights.rows != net.layer_sizes[l + 1] ||
        layer.weights.cols != net.layer_sizes[l] ||
        layer.biases.size() != net.layer_sizes[l + 1]) {
      throw std::invalid_argument("network: layer " + std::to_string(l) +
                                  " has mismatched shapes");
    }
  }
}

std::vector<Layer> zero_like(const NetworkParams& net) {
  std::vector<Layer> out(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    out[l].weights = Matrix(net.layers[l].weights.rows, net.layers[l].weights.cols);
    out[l].biases.assign(net.layers[l].biases.size(), 0.0);
  }
  return out;
}

}  // namespace

NetworkParams net_init(std::span<const std::size_t> layer_sizes, std::uint64_t seed,
                       Activation activation, OutputActivation output_activation) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("net_init: need at least input and output layers");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("net_init: zero-width layer");
  }

  NetworkParams net;
  net.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  net.activation = activation;
  net.output_activation = output_activation;

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    Layer layer;
    layer.weights = Matrix(layer_sizes[l + 1], layer_sizes[l]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer_sizes[l]));
    for (double& w : layer.weights.data) {
      w = rng.uniform(-scale, scale);
    }
    layer.biases.assign(layer_sizes[l + 1], 0.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

std::vector<double> net_forward(const NetworkParams& net, std::span<const double> input,
                                ForwardCache* cache) {
  check_net(net);
  if (input.size() != net.input_size()) {
    throw std::invalid_argument("net_forward: expected " +
                                std::to_string(net.input_size()) + " inputs, got " +
                                std::to_string(input.size()));
  }

  std::vector<double> a(input.begin(), input.end());
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(a);
  }

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const bool last = (l + 1 == net.layers.size());
    std::vector<double> next(layer.weights.rows);
    for (std::size_t o = 0; o < layer.weights.rows; ++o) {
      double z = layer.biases[o];
      const double* w = &layer.weights.data[o * layer.weights.cols];
      for (std::size_t i = 0; i < layer.weights.cols; ++i) {
        z += w[i] * a[i];
      }
      next[o] = last ? apply_output(net.output_activation, z)
                     : apply_hidden(net.activation, z);
    }
    a = std::move(next);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

NetGradients net_backward(const NetworkParams& net, const ForwardCache& cache,
                          std::span<const double> d_output) {
  check_net(net);
  if (cache.activations.size() != net.layers.size() + 1) {
    throw std::invalid_argument("net_backward: cache does not match the network");
  }
  if (d_output.size() != net.output_size()) {
    throw std::invalid_argument("net_backward: d_output has wrong size");
  }

  NetGradients grads;
  grads.layers = zero_like(net);

  // delta starts as dL/dz at the output layer
  std::vector<double> delta(d_output.size());
  const std::vector<double>& y = cache.activations.back();
  for (std::size_t o = 0; o < delta.size(); ++o) {
    delta[o] = d_output[o] * output_deriv(net.output_activation, y[o]);
  }

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const Layer& layer = net.layers[l];
    const std::vector<double>& a_in = cache.activations[l];

    Layer& g = grads.layers[l];
    for (std::size_t o = 0; o < layer.weights.rows; ++o) {
      g.biases[o] = delta[o];
      double* gw = &g.weights.data[o * layer.weights.cols];
      for (std::size_t i = 0; i < layer.weights.cols; ++i) {
        gw[i] = delta[o] * a_in[i];
      }
    }

    std::vector<double> prev(layer.weights.cols, 0.0);
    for (std::size_t o = 0; o < layer.weights.rows; ++o) {
      const double* w = &layer.weights.data[o * layer.weights.cols];
      for (std::size_t i = 0; i < layer.weights.cols; ++i) {
        prev[i] += delta[o] * w[i];
      }
    }
    if (l > 0) {
      for (std::size_t i = 0; i < prev.size(); ++i) {
        prev[i] *= hidden_deriv(net.activation, a_in[i]);
      }
    }
    delta = std::move(prev);
  }

  grads.d_input = std::move(delta);
  return grads;
}

Matrix net_forward_batch(const NetworkParams& net, const Matrix& inputs,
                         BatchCache* cache) {
  check_net(net);
  if (inputs.cols != net.input_size()) {
    throw std::invalid_argument("net_forward_batch: input width mismatch");
  }

  Matrix a = inputs;
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(a);
  }

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const bool last = (l + 1 == net.layers.size());
    Matrix next(a.rows, layer.weights.rows);
    for (std::size_t b = 0; b < a.rows; ++b) {
      const double* row = &a.data[b * a.cols];
      double* out = &next.data[b * next.cols];
      for (std::size_t o = 0; o < layer.weights.rows; ++o) {
        double z = layer.biases[o];
        const double* w = &layer.weights.data[o * layer.weights.cols];
        for (std::size_t i = 0; i < layer.weights.cols; ++i) {
          z += w[i] * row[i];
        }
        out[o] = last ? apply_output(net.output_activation, z)
                      : apply_hidden(net.activation, z);
      }
    }
    a = std::move(next);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

NetGradients net_backward_batch(const NetworkParams& net, const BatchCache& cache,
                                const Matrix& d_outputs) {
  check_net(net);
  if (cache.activations.size() != net.layers.size() + 1) {
    throw std::invalid_argument("net_backward_batch: cache does not match the network");
  }
  const Matrix& y = cache.activations.back();
  if (d_outputs.rows != y.rows || d_outputs.cols != y.cols) {
    throw std::invalid_argument("net_backward_batch: d_outputs has wrong shape");
  }

  NetGradients grads;
  grads.layers = zero_like(net);

  Matrix delta(d_outputs.rows, d_outputs.cols);
  for (std::size_t idx = 0; idx < delta.data.size(); ++idx) {
    delta.data[idx] =
        d_outputs.data[idx] * output_deriv(net.output_activation, y.data[idx]);
  }

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const Layer& layer = net.layers[l];
    const Matrix& a_in = cache.activations[l];
    Layer& g = grads.layers[l];

    // dW[o,i] = sum_b delta[b,o] * a_in[b,i]; db[o] = sum_b delta[b,o];
    // accumulation runs in row order so it matches the per-sample path
    for (std::size_t b = 0; b < delta.rows; ++b) {
      const double* drow = &delta.data[b * delta.cols];
      const double* arow = &a_in.data[b * a_in.cols];
      for (std::size_t o = 0; o < layer.weights.rows; ++o) {
        const double d = drow[o];
        g.biases[o] += d;
        double* gw = &g.weights.data[o * layer.weights.cols];
        for (std::size_t i = 0; i < layer.weights.cols; ++i) {
          gw[i] += d * arow[i];
        }
      }
    }

    Matrix prev(delta.rows, layer.weights.cols);
    for (std::size_t b = 0; b < delta.rows; ++b) {
      const double* drow = &delta.data[b * delta.cols];
      double* prow = &prev.data[b * prev.cols];
      for (std::size_t o = 0; o < layer.weights.rows; ++o) {
        const double d = drow[o];
        const double* w = &layer.weights.data[o * layer.weights.cols];
        for (std::size_t i = 0; i < layer.weights.cols; ++i) {
          prow[i] += d * w[i];
        }
      }
      if (l > 0) {
        const double* arow = &a_in.data[b * a_in.cols];
        for (std::size_t i = 0; i < prev.cols; ++i) {
          prow[i] *= hidden_deriv(net.activation, arow[i]);
        }
      }
    }
    delta = std::move(prev);
  }

  // d_input of the whole batch is rarely needed; return the row sum
  grads.d_input.assign(delta.cols, 0.0);
  for (std::size_t b = 0; b < delta.rows; ++b) {
    for (std::size_t i = 0; i < delta.cols; ++i) {
      grads.d_input[i] += delta(b, i);
    }
  }
  return grads;
}

AdamState make_adam_state(const NetworkParams& net) {
  check_net(net);
  AdamState state;
  state.m = zero_like(net);
  state.v = zero_like(net);
  return state;
}

void adam_step(NetworkParams& net, const NetGradients& grads, AdamState& state,
               double learning_rate) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  if (grads.layers.size() != net.layers.size()) {
    throw std::invalid_argument("adam_step: gradient/parameter shape mismatch");
  }
  state.step += 1;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto update = [&](double& p, double g, double& m, double& v) {
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g * g;
      p -= learning_rate * (m / c1) / (std::sqrt(v / c2) + kEps);
    };
    Layer& layer = net.layers[l];
    const Layer& g = grads.layers[l];
    if (g.weights.data.size() != layer.weights.data.size() ||
        g.biases.size() != layer.biases.size()) {
      throw std::invalid_argument("adam_step: layer " + std::to_string(l) +
                                  " gradient shape mismatch");
    }
    for (std::size_t idx = 0; idx < layer.weights.data.size(); ++idx) {
      update(layer.weights.data[idx], g.weights.data[idx],
             state.m[l].weights.data[idx], state.v[l].weights.data[idx]);
    }
    for (std::size_t idx = 0; idx < layer.biases.size(); ++idx) {
      update(layer.biases[idx], g.biases[idx], state.m[l].biases[idx],
             state.v[l].biases[idx]);
    }
  }
}

std::vector<double> standardize(std::span<const double> features, const FeatureStats& stats) {
  if (features.size() != stats.mean.size() || features.size() != stats.std.size()) {
    throw std::invalid_argument("standardize: feature/stats length mismatch");
  }
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    out[i] = (features[i] - stats.mean[i]) / stats.std[i];
  }
  return out;
}

FeatureStats compute_feature_stats(const Matrix& rows) {
  if (rows.rows == 0 || rows.cols == 0) {
    throw std::invalid_argument("compute_feature_stats: empty matrix");
  }
  FeatureStats stats;
  stats.mean.assign(rows.cols, 0.0);
  stats.std.assign(rows.cols, 0.0);

  const double n = static_cast<double>(rows.rows);
  for (std::size_t b = 0; b < rows.rows; ++b) {
    for (std::size_t j = 0; j < rows.cols; ++j) {
      stats.mean[j] += rows(b, j);
    }
  }
  for (double& m : stats.mean) m /= n;

  for (std::size_t b = 0; b < rows.rows; ++b) {
    for (std::size_t j = 0; j < rows.cols; ++j) {
      const double d = rows(b, j) - stats.mean[j];
      stats.std[j] += d * d;
    }
  }
  for (double& s : stats.std) {
    s = std::sqrt(s / n);
    if (s < 1e-8) s = 1e-8;
  }
  return stats;
}

}  // namespace penbias
