#include "penbias/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "penbias/errors.hpp"
#include "penbias/rng.hpp"

namespace penbias {

namespace {

using nlohmann::json;

constexpr std::size_t kHiddenWidth = 64;

std::size_t output_size_for(ModelKind kind) {
  return kind == ModelKind::HybridWeibull ? 2 : 1;
}

std::vector<ParamRange> ranges_for(ModelKind kind) {
  switch (kind) {
    case ModelKind::HybridExp:
      return {{kPenDepthMin, kPenDepthMax}};
    case ModelKind::HybridWeibull:
      return {{kWeibullScaleMin, kWeibullScaleMax}, {kWeibullShapeMin, kWeibullShapeMax}};
    case ModelKind::PureMlp:
      return {};
  }
  return {};
}

// standardized feature rows for a span of samples
Matrix feature_matrix(std::span<const PixelSample> samples, const FeatureStats& stats) {
  Matrix x(samples.size(), kFeatureCount);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const std::array<double, kFeatureCount> f = sample_features(samples[b]);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      x(b, j) = (f[j] - stats.mean[j]) / stats.std[j];
    }
  }
  return x;
}

void map_outputs_to_params(const PredictionModel& model, const double* y, double* params) {
  if (model.kind == ModelKind::PureMlp) {
    params[0] = y[0];
    return;
  }
  for (std::size_t j = 0; j < model.param_ranges.size(); ++j) {
    const ParamRange& r = model.param_ranges[j];
    params[j] = r.lo + (r.hi - r.lo) * y[j];
  }
}

void check_model(const PredictionModel& model) {
  if (model.feature_stats.mean.size() != model.network.input_size() ||
      model.feature_stats.std.size() != model.network.input_size()) {
    throw std::invalid_argument("model: feature_stats do not match the network input");
  }
  if (model.param_ranges.size() != ranges_for(model.kind).size()) {
    throw std::invalid_argument("model: param_ranges do not match the model kind");
  }
  if (model.network.output_size() != output_size_for(model.kind)) {
    throw std::invalid_argument("model: network output width does not match the kind");
  }
}

}  // namespace

PhysicalEval physical_layer(ModelKind kind, std::span<const double> params, double kz,
                            const ForwardOptions& opts, bool with_grad) {
  const std::size_t need = kind == ModelKind::HybridWeibull ? 2 : 1;
  if (params.size() < need) {
    throw std::invalid_argument("physical_layer: expected " + std::to_string(need) +
                                " parameter(s), got " + std::to_string(params.size()));
  }
  PhysicalEval out;
  switch (kind) {
    case ModelKind::HybridExp: {
      const double d = params[0];
      out.bias = phase_to_bias(gamma_vol_exponential(ExponentialProfile{d, 1.0}, kz, opts), kz);
      if (with_grad) {
        const double half_kd = 0.5 * kz * d;
        out.dbias_dparam[0] = -0.5 / (1.0 + half_kd * half_kd);
      }
      return out;
    }
    case ModelKind::HybridWeibull: {
      if (with_grad) {
        const WeibullBiasGradient g =
            gamma_vol_weibull_grad(params[0], params[1], kz, opts);
        out.bias = phase_to_bias(g.coherence, kz);
        out.dbias_dparam = {g.dbias_dlambda, g.dbias_dk};
      } else {
        out.bias = phase_to_bias(
            gamma_vol_weibull_params(params[0], params[1], kz, opts), kz);
      }
      return out;
    }
    case ModelKind::PureMlp:
      out.bias = params[0];
      if (with_grad) out.dbias_dparam[0] = 1.0;
      return out;
  }
  return out;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::HybridExp:
      return "hybrid_exp";
    case ModelKind::HybridWeibull:
      return "hybrid_weibull";
    case ModelKind::PureMlp:
      return "pure_mlp";
  }
  return "hybrid_exp";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "hybrid_exp") return ModelKind::HybridExp;
  if (name == "hybrid_weibull") return ModelKind::HybridWeibull;
  if (name == "pure_mlp") return ModelKind::PureMlp;
  throw std::invalid_argument("unknown model kind '" + name +
                              "' (expected hybrid_exp, hybrid_weibull or pure_mlp)");
}

std::array<double, kFeatureCount> sample_features(const PixelSample& s) {
  return {s.gamma_mag, s.phase_vol, s.kz, s.incidence, s.backscatter_db};
}

PredictionModel make_model(ModelKind kind, std::uint64_t seed) {
  PredictionModel model;
  model.kind = kind;
  const std::size_t sizes[4] = {kFeatureCount, kHiddenWidth, kHiddenWidth,
                                output_size_for(kind)};
  const OutputActivation out_act = kind == ModelKind::PureMlp
                                       ? OutputActivation::Linear
                                       : OutputActivation::UnitIntervalSquash;
  model.network = net_init(sizes, seed, Activation::Tanh, out_act);
  model.param_ranges = ranges_for(kind);
  // identity stats until training data fixes them
  model.feature_stats.mean.assign(kFeatureCount, 0.0);
  model.feature_stats.std.assign(kFeatureCount, 1.0);
  return model;
}

std::vector<double> predict_params(const PredictionModel& model, const PixelSample& s) {
  check_model(model);
  if (model.kind == ModelKind::PureMlp) {
    throw std::invalid_argument("predict_params: pure_mlp has no profile parameters");
  }
  const std::array<double, kFeatureCount> f = sample_features(s);
  const std::vector<double> x = standardize(f, model.feature_stats);
  const std::vector<double> y = net_forward(model.network, x);
  std::vector<double> params(y.size());
  map_outputs_to_params(model, y.data(), params.data());
  return params;
}

double predict_bias(const PredictionModel& model, const PixelSample& s,
                    const ForwardOptions& opts) {
  check_model(model);
  const std::array<double, kFeatureCount> f = sample_features(s);
  const std::vector<double> x = standardize(f, model.feature_stats);
  const std::vector<double> y = net_forward(model.network, x);
  double params[2];
  map_outputs_to_params(model, y.data(), params);
  return physical_layer(model.kind, params, s.kz, opts, false).bias;
}

std::vector<double> predict_bias_batch(const PredictionModel& model,
                                       std::span<const PixelSample> samples,
                                       const ForwardOptions& opts) {
  check_model(model);
  std::vector<double> out(samples.size());
  if (samples.empty()) return out;

  const Matrix x = feature_matrix(samples, model.feature_stats);
  const Matrix y = net_forward_batch(model.network, x);
  for (std::size_t b = 0; b < samples.size(); ++b) {
    double params[2];
    map_outputs_to_params(model, &y.data[b * y.cols], params);
    out[b] = physical_layer(model.kind, params, samples[b].kz, opts, false).bias;
  }
  return out;
}

LossGrad loss_and_grad(const PredictionModel& model, std::span<const PixelSample> batch,
                       const ForwardOptions& opts) {
  check_model(model);
  if (batch.empty()) {
    throw std::invalid_argument("loss_and_grad: empty batch");
  }

  const Matrix x = feature_matrix(batch, model.feature_stats);
  BatchCache cache;
  const Matrix y = net_forward_batch(model.network, x, &cache);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Matrix d_outputs(y.rows, y.cols);
  double loss = 0.0;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double* yrow = &y.data[b * y.cols];
    double params[2];
    map_outputs_to_params(model, yrow, params);
    const PhysicalEval phys =
        physical_layer(model.kind, params, batch[b].kz, opts, true);

    const double residual = phys.bias - reference_bias(batch[b]);
    loss += residual * residual;

    const double d_bias = 2.0 * residual * inv_n;
    double* drow = &d_outputs.data[b * y.cols];
    if (model.kind == ModelKind::PureMlp) {
      drow[0] = d_bias;
    } else {
      for (std::size_t j = 0; j < model.param_ranges.size(); ++j) {
        const ParamRange& r = model.param_ranges[j];
        drow[j] = d_bias * phys.dbias_dparam[j] * (r.hi - r.lo);
      }
    }
  }

  LossGrad out;
  out.loss = loss * inv_n;
  out.grads = net_backward_batch(model.network, cache, d_outputs);
  return out;
}

double loss_value(const PredictionModel& model, std::span<const PixelSample> batch,
                  const ForwardOptions& opts) {
  if (batch.empty()) {
    throw std::invalid_argument("loss_value: empty batch");
  }
  const std::vector<double> pred = predict_bias_batch(model, batch, opts);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double r = pred[b] - reference_bias(batch[b]);
    loss += r * r;
  }
  return loss / static_cast<double>(batch.size());
}

TrainResult train_model(ModelKind kind, std::span<const PixelSample> train_set,
                        std::span<const PixelSample> val_set, const TrainConfig& config,
                        std::uint64_t seed) {
  if (train_set.empty()) throw TrainingError("train_model: empty training set");
  if (val_set.empty()) throw TrainingError("train_model: empty validation set");
  if (!(config.learning_rate > 0.0)) throw TrainingError("train_model: learning_rate must be > 0");
  if (config.batch_size == 0) throw TrainingError("train_model: batch_size must be >= 1");
  if (config.max_epochs == 0) throw TrainingError("train_model: max_epochs must be >= 1");

  PredictionModel model = make_model(kind, seed);

  // standardization statistics come from the training split only
  Matrix raw(train_set.size(), kFeatureCount);
  for (std::size_t b = 0; b < train_set.size(); ++b) {
    const std::array<double, kFeatureCount> f = sample_features(train_set[b]);
    std::copy(f.begin(), f.end(), &raw.data[b * kFeatureCount]);
  }
  model.feature_stats = compute_feature_stats(raw);

  AdamState adam = make_adam_state(model.network);
  Rng shuffle_rng(seed ^ 0x9E3779B97F4A7C15ULL);  // distinct stream from net_init

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  NetworkParams best_params = model.network;
  std::size_t since_best = 0;

  std::vector<PixelSample> batch;
  batch.reserve(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, order.size());
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(train_set[order[i]]);
      }

      const LossGrad lg = loss_and_grad(model, batch);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("train_model: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch starting at sample " +
                            std::to_string(start) + " (diverged; lower the learning rate)");
      }
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      adam_step(model.network, lg.grads, adam, config.learning_rate);
    }
    epoch_loss /= static_cast<double>(order.size());

    const double val_mse = loss_value(model, val_set);
    if (!std::isfinite(val_mse)) {
      throw TrainingError("train_model: non-finite validation loss at epoch " +
                          std::to_string(epoch));
    }

    if (val_mse < best_val) {
      best_val = val_mse;
      best_params = model.network;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }

    result.history.push_back(EpochStats{epoch, epoch_loss, val_mse, best_val});
    if (config.verbose) {
      std::fprintf(stderr, "epoch %3zu  train_mse %.6f  val_mse %.6f  best %.6f\n",
                   epoch, epoch_loss, val_mse, best_val);
    }

    if (since_best > config.patience) break;
  }

  model.network = std::move(best_params);
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// model file I/O
// ---------------------------------------------------------------------------

namespace {

json layer_weights_to_json(const Layer& layer) {
  json rows = json::array();
  for (std::size_t o = 0; o < layer.weights.rows; ++o) {
    json row = json::array();
    for (std::size_t i = 0; i < layer.weights.cols; ++i) {
      row.push_back(layer.weights(o, i));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double finite_number(const json& j, const std::string& what) {
  if (!j.is_number()) {
    throw SerializationError("model file: " + what + " is not a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    throw SerializationError("model file: " + what + " is not finite");
  }
  return v;
}

}  // namespace

void save_model(const PredictionModel& model, const TrainingProvenance& provenance,
                std::uint64_t seed, const std::filesystem::path& path) {
  check_model(model);

  json root;
  root["format_version"] = kModelFormatVersion;
  root["model_kind"] = to_string(model.kind);
  root["layer_sizes"] = model.network.layer_sizes;
  root["activation"] = model.network.activation == Activation::Tanh ? "tanh" : "relu";

  json weights = json::array();
  json biases = json::array();
  for (const Layer& layer : model.network.layers) {
    weights.push_back(layer_weights_to_json(layer));
    biases.push_back(layer.biases);
  }
  root["weights"] = std::move(weights);
  root["biases"] = std::move(biases);

  root["feature_stats"] = {{"mean", model.feature_stats.mean},
                           {"std", model.feature_stats.std}};

  json ranges = json::array();
  for (const ParamRange& r : model.param_ranges) {
    ranges.push_back(json::array({r.lo, r.hi}));
  }
  root["param_ranges"] = std::move(ranges);

  root["training_config"] = {{"scenario", provenance.scenario},
                             {"train_fraction", provenance.train_fraction},
                             {"val_fraction", provenance.val_fraction},
                             {"interp_lo", provenance.interp_lo},
                             {"interp_hi", provenance.interp_hi},
                             {"extrap_above", provenance.extrap_above},
                             {"learning_rate", provenance.learning_rate},
                             {"batch_size", provenance.batch_size},
                             {"max_epochs", provenance.max_epochs},
                             {"patience", provenance.patience},
                             {"clamp_coherence", provenance.clamp_coherence}};
  root["seed"] = seed;

  std::ofstream out(path);
  if (!out) {
    throw SerializationError("save_model: cannot open " + path.string() + " for writing");
  }
  out << root.dump(2) << '\n';
  if (!out) {
    throw SerializationError("save_model: write failed for " + path.string());
  }
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw SerializationError("load_model: cannot open " + path.string());
  }

  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw SerializationError("load_model: " + path.string() + " is not valid JSON: " +
                             e.what());
  }

  try {
    const int version = root.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw SerializationError("load_model: " + path.string() + " has format_version " +
                               std::to_string(version) + ", this build reads version " +
                               std::to_string(kModelFormatVersion));
    }

    LoadedModel loaded;
    loaded.model.kind = model_kind_from_string(root.at("model_kind").get<std::string>());

    NetworkParams& net = loaded.model.network;
    net.layer_sizes = root.at("layer_sizes").get<std::vector<std::size_t>>();
    if (net.layer_sizes.size() < 2) {
      throw SerializationError("load_model: layer_sizes needs at least 2 entries");
    }
    if (net.layer_sizes.front() != kFeatureCount) {
      throw SerializationError("load_model: model expects " +
                               std::to_string(net.layer_sizes.front()) +
                               " input features, this build provides " +
                               std::to_string(kFeatureCount));
    }
    if (net.layer_sizes.back() != output_size_for(loaded.model.kind)) {
      throw SerializationError("load_model: output width does not match model_kind");
    }

    const std::string act = root.at("activation").get<std::string>();
    if (act == "tanh") {
      net.activation = Activation::Tanh;
    } else if (act == "relu") {
      net.activation = Activation::Relu;
    } else {
      throw SerializationError("load_model: unknown activation '" + act + "'");
    }
    net.output_activation = loaded.model.kind == ModelKind::PureMlp
                                ? OutputActivation::Linear
                                : OutputActivation::UnitIntervalSquash;

    const json& weights = root.at("weights");
    const json& biases = root.at("biases");
    const std::size_t n_layers = net.layer_sizes.size() - 1;
    if (weights.size() != n_layers || biases.size() != n_layers) {
      throw SerializationError("load_model: weights/biases do not match layer_sizes");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
      Layer layer;
      const std::size_t rows = net.layer_sizes[l + 1];
      const std::size_t cols = net.layer_sizes[l];
      layer.weights = Matrix(rows, cols);
      if (weights[l].size() != rows) {
        throw SerializationError("load_model: layer " + std::to_string(l) +
                                 " weight row count mismatch");
      }
      for (std::size_t o = 0; o < rows; ++o) {
        if (weights[l][o].size() != cols) {
          throw SerializationError("load_model: layer " + std::to_string(l) +
                                   " weight column count mismatch");
        }
        for (std::size_t i = 0; i < cols; ++i) {
          layer.weights(o, i) = finite_number(weights[l][o][i], "weight");
        }
      }
      if (biases[l].size() != rows) {
        throw SerializationError("load_model: layer " + std::to_string(l) +
                                 " bias count mismatch");
      }
      layer.biases.resize(rows);
      for (std::size_t o = 0; o < rows; ++o) {
        layer.biases[o] = finite_number(biases[l][o], "bias");
      }
      net.layers.push_back(std::move(layer));
    }

    const json& stats = root.at("feature_stats");
    loaded.model.feature_stats.mean = stats.at("mean").get<std::vector<double>>();
    loaded.model.feature_stats.std = stats.at("std").get<std::vector<double>>();
    if (loaded.model.feature_stats.mean.size() != net.layer_sizes.front() ||
        loaded.model.feature_stats.std.size() != net.layer_sizes.front()) {
      throw SerializationError("load_model: feature_stats length mismatch");
    }
    for (double s : loaded.model.feature_stats.std) {
      if (!(s > 0.0)) {
        throw SerializationError("load_model: feature std must be > 0");
      }
    }

    const json& ranges = root.at("param_ranges");
    const std::size_t expected_ranges = ranges_for(loaded.model.kind).size();
    if (ranges.size() != expected_ranges) {
      throw SerializationError("load_model: param_ranges count does not match model_kind");
    }
    for (const json& r : ranges) {
      if (r.size() != 2) {
        throw SerializationError("load_model: param_ranges entries must be [lo, hi]");
      }
      const double lo = finite_number(r[0], "param range lo");
      const double hi = finite_number(r[1], "param range hi");
      if (!(lo < hi)) {
        throw SerializationError("load_model: param range must have lo < hi");
      }
      loaded.model.param_ranges.push_back(ParamRange{lo, hi});
    }

    const json& tc = root.at("training_config");
    TrainingProvenance& prov = loaded.provenance;
    prov.scenario = tc.at("scenario").get<std::string>();
    scenario_from_string(prov.scenario);  // validate the name
    prov.train_fraction = finite_number(tc.at("train_fraction"), "train_fraction");
    prov.val_fraction = finite_number(tc.at("val_fraction"), "val_fraction");
    prov.interp_lo = finite_number(tc.at("interp_lo"), "interp_lo");
    prov.interp_hi = finite_number(tc.at("interp_hi"), "interp_hi");
    prov.extrap_above = finite_number(tc.at("extrap_above"), "extrap_above");
    prov.learning_rate = finite_number(tc.at("learning_rate"), "learning_rate");
    prov.batch_size = tc.at("batch_size").get<std::uint64_t>();
    prov.max_epochs = tc.at("max_epochs").get<std::uint64_t>();
    prov.patience = tc.at("patience").get<std::uint64_t>();
    prov.clamp_coherence = tc.at("clamp_coherence").get<bool>();

    loaded.seed = root.at("seed").get<std::uint64_t>();

    check_model(loaded.model);
    return loaded;
  } catch (const SerializationError&) {
    throw;
  } catch (const json::exception& e) {
    throw SerializationError("load_model: " + path.string() +
                             " does not match the model schema: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw SerializationError("load_model: " + path.string() + ": " + e.what());
  }
}

}  // namespace penbias
