#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "penbias/dataset.hpp"
#include "penbias/forward.hpp"
#include "penbias/neural.hpp"

namespace penbias {

// hybrid kinds squash the net output into a profile-parameter box and push it
// through the physics; pure_mlp regresses the bias directly
enum class ModelKind { HybridExp, HybridWeibull, PureMlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// input feature order, fixed everywhere:
// [gamma_mag, phase_vol, kz, incidence, backscatter_db]
inline constexpr std::size_t kFeatureCount = 5;
std::array<double, kFeatureCount> sample_features(const PixelSample& s);

struct PredictionModel {
  ModelKind kind = ModelKind::HybridExp;
  NetworkParams network;
  FeatureStats feature_stats;            // from the training split only
  std::vector<ParamRange> param_ranges;  // affine map targets; empty for PureMlp
};

// fresh, untrained model with the canonical 5-64-64-out layout
PredictionModel make_model(ModelKind kind, std::uint64_t seed);

// The physics block hybrids chain through: bias and its gradient w.r.t. the
// profile parameters (analytic for the exponential, quadrature-accumulated
// for the weibull; identity passthrough for PureMlp). Expects 1 parameter
// for HybridExp/PureMlp and 2 for HybridWeibull.
struct PhysicalEval {
  double bias = 0.0;
  std::array<double, 2> dbias_dparam{0.0, 0.0};
};

PhysicalEval physical_layer(ModelKind kind, std::span<const double> params, double kz,
                            const ForwardOptions& opts = {}, bool with_grad = true);

// profile parameters for one sample (hybrids only; PureMlp has none).
// Squash + affine keeps them inside param_ranges by construction.
std::vector<double> predict_params(const PredictionModel& model, const PixelSample& s);

double predict_bias(const PredictionModel& model, const PixelSample& s,
                    const ForwardOptions& opts = {});

std::vector<double> predict_bias_batch(const PredictionModel& model,
                                       std::span<const PixelSample> samples,
                                       const ForwardOptions& opts = {});

// mean squared error against reference_bias over the batch, plus gradients
// with respect to every network parameter
struct LossGrad {
  double loss = 0.0;
  NetGradients grads;
};

LossGrad loss_and_grad(const PredictionModel& model, std::span<const PixelSample> batch,
                       const ForwardOptions& opts = {});

double loss_value(const PredictionModel& model, std::span<const PixelSample> batch,
                  const ForwardOptions& opts = {});

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 1024;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;  // epochs without validation improvement
  bool verbose = false;       // one stderr line per epoch
};

struct EpochStats {
  std::size_t epoch;         // 1-based
  double train_mse;          // mean over the epoch's batches
  double val_mse;
  double best_val_mse;       // best seen up to and including this epoch
};

struct TrainResult {
  PredictionModel model;  // parameters from the best-validation epoch
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

// Adam + early stopping. Deterministic in (inputs, config, seed): the seed
// fixes the init and the per-epoch batch shuffle, and all reductions run in
// a fixed order. Throws TrainingError on empty inputs or non-finite loss.
TrainResult train_model(ModelKind kind, std::span<const PixelSample> train_set,
                        std::span<const PixelSample> val_set, const TrainConfig& config,
                        std::uint64_t seed);

// Provenance echoed into the model file; evaluate reuses it to rebuild the
// exact split the model never saw.
struct TrainingProvenance {
  std::string scenario = "all";
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double interp_lo = 50.0;
  double interp_hi = 60.0;
  double extrap_above = 70.0;
  double learning_rate = 1e-3;
  std::uint64_t batch_size = 1024;
  std::uint64_t max_epochs = 200;
  std::uint64_t patience = 20;
  bool clamp_coherence = false;
};

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON with exact double round-trip. Serialization is canonical
// (sorted keys, shortest round-trip numbers), so identical models produce
// byte-identical files.
void save_model(const PredictionModel& model, const TrainingProvenance& provenance,
                std::uint64_t seed, const std::filesystem::path& path);

struct LoadedModel {
  PredictionModel model;
  TrainingProvenance provenance;
  std::uint64_t seed = 0;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace penbias
