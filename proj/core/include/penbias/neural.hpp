#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace penbias {

enum class Activation { Tanh, Relu };
enum class OutputActivation { Linear, UnitIntervalSquash };

// Dense row-major matrix; the only shape the net needs.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// weights are (fan_out x fan_in); biases fan_out
struct Layer {
  Matrix weights;
  std::vector<double> biases;
};

struct NetworkParams {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<Layer> layers;             // layer_sizes.size() - 1 entries
  Activation activation = Activation::Tanh;
  OutputActivation output_activation = OutputActivation::Linear;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
};

// Per-feature standardization statistics; std is floored at 1e-8 so constant
// features pass through instead of dividing by zero.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;
};

// Deterministic init: weights uniform in +-1/sqrt(fan_in) drawn in layer
// order, biases zero. Identical seed gives bit-identical parameters.
NetworkParams net_init(std::span<const std::size_t> layer_sizes, std::uint64_t seed,
                       Activation activation = Activation::Tanh,
                       OutputActivation output_activation = OutputActivation::Linear);

// activations[l] is the output of layer l, with activations[0] the input;
// everything backward needs (tanh' and squash' are functions of the outputs,
// relu' of their sign)
struct ForwardCache {
  std::vector<std::vector<double>> activations;
};

std::vector<double> net_forward(const NetworkParams& net, std::span<const double> input,
                                ForwardCache* cache = nullptr);

// gradients mirror Layer shapes; d_input is the loss gradient at the input
struct NetGradients {
  std::vector<Layer> layers;
  std::vector<double> d_input;
};

NetGradients net_backward(const NetworkParams& net, const ForwardCache& cache,
                          std::span<const double> d_output);

// Batched equivalents used by the training loop. Rows are samples.
// backward returns gradients summed over rows in row order, so results are
// reproducible and match summing net_backward over the batch.
struct BatchCache {
  std::vector<Matrix> activations;
};

Matrix net_forward_batch(const NetworkParams& net, const Matrix& inputs,
                         BatchCache* cache = nullptr);

NetGradients net_backward_batch(const NetworkParams& net, const BatchCache& cache,
                                const Matrix& d_outputs);

struct AdamState {
  std::uint64_t step = 0;
  std::vector<Layer> m;  // first moments, same shapes as the parameters
  std::vector<Layer> v;  // second moments
};

AdamState make_adam_state(const NetworkParams& net);

// beta1 = 0.9, beta2 = 0.999, eps = 1e-8, with bias correction
void adam_step(NetworkParams& net, const NetGradients& grads, AdamState& state,
               double learning_rate);

std::vector<double> standardize(std::span<const double> features, const FeatureStats& stats);

// population mean/std per column, std floored at 1e-8
FeatureStats compute_feature_stats(const Matrix& rows);

}  // namespace penbias
