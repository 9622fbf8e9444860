// Command line front end: simulate / invert-uv / train / evaluate / report.
// Exit codes: 0 success, 1 runtime failure (I/O, bad data, diverged training),
// 2 usage errors (unknown flags, malformed config).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "penbias/dataset.hpp"
#include "penbias/errors.hpp"
#include "penbias/evaluation.hpp"
#include "penbias/forward.hpp"
#include "penbias/geometry.hpp"
#include "penbias/inversion.hpp"
#include "penbias/models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace penbias;

namespace {

// bad config files are usage errors (exit 2), like bad flags
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

// expand files/directories into an ordered list of sample CSVs
std::vector<fs::path> resolve_sample_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const std::string& input : inputs) {
    const fs::path p(input);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() &&
            entry.path().filename().string().ends_with("_samples.csv")) {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      if (found.empty()) {
        throw DatasetError("no *_samples.csv files in directory " + p.string());
      }
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw DatasetError("sample input does not exist: " + p.string());
    }
  }
  return files;
}

struct LoadedSet {
  std::vector<PixelSample> samples;
  std::vector<std::string> files;
  std::size_t clamped = 0;
};

LoadedSet load_sample_set(const std::vector<std::string>& inputs, bool clamp) {
  LoadedSet set;
  const LoadOptions opts{clamp};
  for (const fs::path& file : resolve_sample_files(inputs)) {
    LoadResult r = load_samples(file, opts);
    set.clamped += r.clamped;
    set.files.push_back(file.string());
    set.samples.insert(set.samples.end(), std::make_move_iterator(r.samples.begin()),
                       std::make_move_iterator(r.samples.end()));
  }
  if (set.samples.empty()) {
    throw DatasetError("no samples loaded");
  }
  if (set.clamped > 0) {
    std::fprintf(stderr, "note: clamped gamma_mag on %zu row(s)\n", set.clamped);
  }
  return set;
}

// per-scene running index in load order; generated files keep pixel order,
// so this matches the truth sidecar's pixel_index
std::vector<std::size_t> assign_pixel_indices(std::span<const PixelSample> samples) {
  std::map<std::string, std::size_t> counters;
  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    idx[i] = counters[samples[i].scene_id]++;
  }
  return idx;
}

void ensure_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DatasetError("cannot create output directory " + dir.string() + ": " +
                       ec.message());
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
  if (!out) {
    throw DatasetError("write failed for " + path.string());
  }
}

void write_meta(const fs::path& dir, const json& meta) {
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void write_predictions(const fs::path& path, std::span<const PixelSample> samples,
                       std::span<const double> bias) {
  const std::vector<std::size_t> idx = assign_pixel_indices(samples);
  std::string body = "scene_id,pixel_index,bias\n";
  char buf[64];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(buf, sizeof(buf), ",%zu,%.17g\n", idx[i], bias[i]);
    body += samples[i].scene_id;
    body += buf;
  }
  write_text(path, body);
}

std::string metrics_csv(const ReportRow& row) {
  return comparison_report(std::span<const ReportRow>(&row, 1)).csv;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateConfig {
  std::uint64_t seed = 0;
  std::size_t n_pixels = 0;
  double incidence_deg = 0.0;
  ProfileKind profile = ProfileKind::Exponential;
  std::vector<double> hoa_list;
  ParamRange param1{0.0, 0.0};
  ParamRange param2{1.0, 1.0};
  double coherence_noise_std = 0.0;
  double elevation_noise_std = 0.0;
  ParamRange ref_elevation{100.0, 3000.0};
  std::string scene_prefix = "scene";
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

SimulateConfig parse_simulate_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }

  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
  }

  const std::set<std::string> known = {
      "seed",          "n_pixels",           "incidence_deg",      "profile",
      "hoa_list",      "param1_min",         "param1_max",         "param2_min",
      "param2_max",    "coherence_noise_std", "elevation_noise_std",
      "ref_elevation_min", "ref_elevation_max", "scene_prefix"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) {
      throw ConfigError(path.string() + ": unknown key '" + key + "'");
    }
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw ConfigError(path.string() + ": missing required key '" + key + "'");
    }
    return it->second;
  };
  auto to_double = [&](const std::string& key, const std::string& text) {
    double v;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
      throw ConfigError(path.string() + ": key '" + key + "' is not a number: '" +
                        text + "'");
    }
    return v;
  };
  auto opt_double = [&](const std::string& key, double fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : to_double(key, it->second);
  };

  SimulateConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(to_double("seed", require("seed")));
  cfg.n_pixels = static_cast<std::size_t>(to_double("n_pixels", require("n_pixels")));
  cfg.incidence_deg = to_double("incidence_deg", require("incidence_deg"));

  const std::string profile = require("profile");
  if (profile == "exponential") {
    cfg.profile = ProfileKind::Exponential;
  } else if (profile == "weibull") {
    cfg.profile = ProfileKind::Weibull;
  } else {
    throw ConfigError(path.string() + ": profile must be exponential or weibull, got '" +
                      profile + "'");
  }

  const std::string hoa_text = require("hoa_list");
  std::size_t start = 0;
  while (start <= hoa_text.size()) {
    const std::size_t comma = hoa_text.find(',', start);
    const std::string item = trim(hoa_text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    cfg.hoa_list.push_back(to_double("hoa_list", item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (cfg.hoa_list.empty()) {
    throw ConfigError(path.string() + ": hoa_list is empty");
  }

  cfg.param1 = {to_double("param1_min", require("param1_min")),
                to_double("param1_max", require("param1_max"))};
  if (cfg.profile == ProfileKind::Weibull) {
    cfg.param2 = {to_double("param2_min", require("param2_min")),
                  to_double("param2_max", require("param2_max"))};
  } else if (kv.count("param2_min") || kv.count("param2_max")) {
    throw ConfigError(path.string() + ": param2_* only applies to weibull profiles");
  }

  cfg.coherence_noise_std = opt_double("coherence_noise_std", 0.0);
  cfg.elevation_noise_std = opt_double("elevation_noise_std", 0.0);
  cfg.ref_elevation = {opt_double("ref_elevation_min", 100.0),
                       opt_double("ref_elevation_max", 3000.0)};
  if (auto it = kv.find("scene_prefix"); it != kv.end()) {
    cfg.scene_prefix = it->second;
  }
  return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
  const SimulateConfig cfg = parse_simulate_config(config_path);
  ensure_out_dir(out_dir);

  json meta;
  meta["command"] = "simulate";
  meta["config"] = config_path;
  meta["seed"] = cfg.seed;
  meta["n_pixels"] = cfg.n_pixels;
  meta["profile"] = cfg.profile == ProfileKind::Exponential ? "exponential" : "weibull";
  meta["hoa_list"] = cfg.hoa_list;
  json scenes = json::array();

  for (std::size_t i = 0; i < cfg.hoa_list.size(); ++i) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_%03zu", i);
    SyntheticSceneConfig scene_cfg;
    scene_cfg.scene_id = cfg.scene_prefix + suffix;
    // large odd stride keeps per-scene streams disjoint for any scene count
    scene_cfg.seed = cfg.seed + 1000003ULL * i;
    scene_cfg.n_pixels = cfg.n_pixels;
    scene_cfg.hoa_m = cfg.hoa_list[i];
    scene_cfg.incidence_deg = cfg.incidence_deg;
    scene_cfg.profile = cfg.profile;
    scene_cfg.param1 = cfg.param1;
    scene_cfg.param2 = cfg.param2;
    scene_cfg.coherence_noise_std = cfg.coherence_noise_std;
    scene_cfg.elevation_noise_std = cfg.elevation_noise_std;
    scene_cfg.ref_elevation = cfg.ref_elevation;

    const SceneData scene = synthesize_scene(scene_cfg);
    const fs::path samples_path = fs::path(out_dir) / (scene_cfg.scene_id + "_samples.csv");
    const fs::path truth_path = fs::path(out_dir) / (scene_cfg.scene_id + "_truth.csv");
    save_samples(scene.samples, samples_path);
    save_ground_truth(scene.truth, truth_path);

    double bias_sum = 0.0;
    for (const GroundTruthRow& r : scene.truth) bias_sum += r.true_bias;
    std::printf("%s  hoa %.6g m  kz %.6g rad/m  %zu pixels  mean bias %.3f m\n",
                scene_cfg.scene_id.c_str(), scene_cfg.hoa_m, hoa_to_kz(scene_cfg.hoa_m),
                scene.samples.size(), bias_sum / static_cast<double>(scene.truth.size()));

    scenes.push_back({{"scene_id", scene_cfg.scene_id},
                      {"seed", scene_cfg.seed},
                      {"hoa_m", scene_cfg.hoa_m},
                      {"samples", samples_path.string()},
                      {"truth", truth_path.string()}});
  }
  meta["scenes"] = std::move(scenes);
  write_meta(out_dir, meta);
  return 0;
}

// ---------------------------------------------------------------------------
// invert-uv
// ---------------------------------------------------------------------------

int cmd_invert_uv(const std::vector<std::string>& inputs, const std::string& out_dir,
                  bool clamp) {
  const LoadedSet set = load_sample_set(inputs, clamp);
  ensure_out_dir(out_dir);

  std::vector<double> reference(set.samples.size());
  std::vector<double> uv(set.samples.size());
  std::vector<double> zero(set.samples.size(), 0.0);
  std::size_t saturated = 0;
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    const PixelSample& s = set.samples[i];
    reference[i] = reference_bias(s);
    if (s.gamma_mag == 0.0) {
      // fully decorrelated pixel: the estimate saturates at a quarter fringe
      uv[i] = -0.5 * kPi / s.kz;
      ++saturated;
    } else {
      uv[i] = uv_bias(s.gamma_mag, s.kz);
    }
  }
  if (saturated > 0) {
    std::fprintf(stderr, "note: %zu pixel(s) with zero coherence saturated the estimate\n",
                 saturated);
  }

  const std::vector<ReportRow> rows = {
      {"uncorrected", "-", compute_metrics(zero, reference)},
      {"uv", "-", compute_metrics(uv, reference)},
  };
  const ComparisonReport report = comparison_report(rows);

  write_predictions(fs::path(out_dir) / "uv_predictions.csv", set.samples, uv);
  write_text(fs::path(out_dir) / "metrics.csv", report.csv);

  json meta;
  meta["command"] = "invert-uv";
  meta["inputs"] = set.files;
  meta["clamp_coherence"] = clamp;
  meta["n_samples"] = set.samples.size();
  meta["saturated"] = saturated;
  write_meta(out_dir, meta);

  std::fputs(report.text.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

constexpr std::uint64_t kValSplitSalt = 0xC2B2AE3D27D4EB4FULL;

struct TrainFlags {
  std::string kind;
  std::string scenario = "all";
  std::vector<std::string> inputs;
  std::string out_path;
  std::uint64_t seed = 1;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double lr = 1e-3;
  std::size_t batch = 1024;
  std::size_t epochs = 200;
  std::size_t patience = 20;
  double interp_lo = 50.0, interp_hi = 60.0, extrap_above = 70.0;
  bool clamp = false;
  bool verbose = false;
};

ScenarioSpec spec_from(const std::string& scenario, double lo, double hi, double above) {
  ScenarioSpec spec;
  spec.kind = scenario_from_string(scenario);
  spec.interp_lo = lo;
  spec.interp_hi = hi;
  spec.extrap_above = above;
  return spec;
}

int cmd_train(const TrainFlags& f) {
  const LoadedSet set = load_sample_set(f.inputs, f.clamp);
  const ScenarioSpec spec = spec_from(f.scenario, f.interp_lo, f.interp_hi, f.extrap_above);

  const SplitResult split = scenario_split(set.samples, spec, f.train_fraction, f.seed);
  // carve validation out of the train pool, scene-stratified, leaving the
  // test split untouched
  const SplitResult fit_val = scenario_split(split.train, ScenarioSpec{},
                                             1.0 - f.val_fraction, f.seed ^ kValSplitSalt);
  const auto& fit = fit_val.train;
  const auto& val = fit_val.test;

  std::printf("samples %zu  fit %zu  val %zu  test %zu  excluded %zu\n",
              set.samples.size(), fit.size(), val.size(), split.test.size(),
              split.excluded.size());

  TrainConfig config;
  config.learning_rate = f.lr;
  config.batch_size = f.batch;
  config.max_epochs = f.epochs;
  config.patience = f.patience;
  config.verbose = f.verbose;

  const ModelKind kind = model_kind_from_string(f.kind);
  const TrainResult result = train_model(kind, fit, val, config, f.seed);

  TrainingProvenance prov;
  prov.scenario = f.scenario;
  prov.train_fraction = f.train_fraction;
  prov.val_fraction = f.val_fraction;
  prov.interp_lo = f.interp_lo;
  prov.interp_hi = f.interp_hi;
  prov.extrap_above = f.extrap_above;
  prov.learning_rate = f.lr;
  prov.batch_size = f.batch;
  prov.max_epochs = f.epochs;
  prov.patience = f.patience;
  prov.clamp_coherence = f.clamp;
  save_model(result.model, prov, f.seed, f.out_path);

  const EpochStats& last = result.history.back();
  std::printf("trained %s for %zu epoch(s); best epoch %zu  best val_mse %.6g\n",
              f.kind.c_str(), result.history.size(), result.best_epoch,
              last.best_val_mse);
  std::printf("model written to %s\n", f.out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateFlags {
  std::string model_path;
  std::vector<std::string> inputs;
  std::string subset = "test";
  std::string out_dir;
  double bin_width = 200.0;
  double hist_width = 0.1;
};

int cmd_evaluate(const EvaluateFlags& f) {
  const LoadedModel loaded = load_model(f.model_path);
  const TrainingProvenance& prov = loaded.provenance;
  const LoadedSet set = load_sample_set(f.inputs, prov.clamp_coherence);

  const ScenarioSpec spec =
      spec_from(prov.scenario, prov.interp_lo, prov.interp_hi, prov.extrap_above);
  SplitResult split = scenario_split(set.samples, spec, prov.train_fraction, loaded.seed);

  std::vector<PixelSample> subset;
  if (f.subset == "test") {
    subset = std::move(split.test);
  } else if (f.subset == "excluded") {
    subset = std::move(split.excluded);
    if (subset.empty()) {
      throw DatasetError("subset 'excluded' is empty: scenario '" + prov.scenario +
                         "' holds out no scenes on this data");
    }
  } else if (f.subset == "all") {
    subset = std::move(split.test);
    subset.insert(subset.end(), std::make_move_iterator(split.excluded.begin()),
                  std::make_move_iterator(split.excluded.end()));
  } else {
    throw ConfigError("subset must be test, excluded or all, got '" + f.subset + "'");
  }
  if (subset.empty()) {
    throw DatasetError("evaluation subset is empty");
  }

  const std::vector<double> predictions = predict_bias_batch(loaded.model, subset);
  std::vector<double> reference(subset.size());
  std::vector<double> errors(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    reference[i] = reference_bias(subset[i]);
    errors[i] = predictions[i] - reference[i];
  }

  ReportRow row;
  row.approach = to_string(loaded.model.kind);
  row.scenario = f.subset == "test" ? prov.scenario : prov.scenario + ":" + f.subset;
  row.metrics = compute_metrics(predictions, reference);

  ensure_out_dir(f.out_dir);
  const fs::path dir(f.out_dir);
  write_predictions(dir / "predictions.csv", subset, predictions);
  write_text(dir / "metrics.csv", metrics_csv(row));

  std::string hist = "lo,hi,count\n";
  char buf[128];
  for (const HistogramBin& b : error_histogram(errors, f.hist_width)) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu\n", b.lo, b.hi, b.count);
    hist += buf;
  }
  write_text(dir / "error_histogram.csv", hist);

  std::string bins = "lo,hi,mu,sigma,n\n";
  for (const ElevationBin& b : elevation_binned_errors(subset, errors, f.bin_width)) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%zu\n", b.lo, b.hi, b.mu,
                  b.sigma, b.n);
    bins += buf;
  }
  write_text(dir / "elevation_bins.csv", bins);

  json meta;
  meta["command"] = "evaluate";
  meta["model"] = f.model_path;
  meta["model_kind"] = to_string(loaded.model.kind);
  meta["scenario"] = prov.scenario;
  meta["subset"] = f.subset;
  meta["inputs"] = set.files;
  meta["bin_width"] = f.bin_width;
  meta["hist_width"] = f.hist_width;
  meta["n_samples"] = subset.size();
  meta["seed"] = loaded.seed;
  write_meta(dir, meta);

  std::fputs(comparison_report(std::span<const ReportRow>(&row, 1)).text.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

std::vector<ReportRow> parse_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetError(path.string() + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "approach,scenario,me,mae,mape,rmse,r2,mu,sigma,n") {
    throw DatasetError(path.string() + " has an unexpected metrics header: " + line);
  }

  std::vector<ReportRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 10) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) +
                         ": expected 10 fields");
    }

    ReportRow row;
    row.approach = fields[0];
    row.scenario = fields[1];
    double* numeric[7] = {&row.metrics.me, &row.metrics.mae,  &row.metrics.mape_percent,
                          &row.metrics.rmse, &row.metrics.r2, &row.metrics.mu,
                          &row.metrics.sigma};
    for (int i = 0; i < 7; ++i) {
      if (fields[static_cast<std::size_t>(i) + 2] == "nan") {
        *numeric[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const std::string& text = fields[static_cast<std::size_t>(i) + 2];
      const char* last = text.data() + text.size();
      auto [ptr, ec] = std::from_chars(text.data(), last, *numeric[i]);
      if (ec != std::errc{} || ptr != last) {
        throw DatasetError(path.string() + ":" + std::to_string(line_no) +
                           ": bad number '" + text + "'");
      }
    }
    row.metrics.n = std::stoull(fields[9]);
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
  std::vector<ReportRow> rows;
  std::optional<double> bin_width;

  for (const std::string& input : inputs) {
    const fs::path dir(input);
    const fs::path metrics = dir / "metrics.csv";
    if (!fs::is_regular_file(metrics)) {
      throw DatasetError("no metrics.csv in " + dir.string());
    }
    const std::vector<ReportRow> found = parse_metrics_csv(metrics);
    rows.insert(rows.end(), found.begin(), found.end());

    // evaluation outputs must agree on binning before they are compared
    const fs::path meta_path = dir / "meta.json";
    if (fs::is_regular_file(meta_path)) {
      std::ifstream in(meta_path);
      json meta;
      try {
        in >> meta;
      } catch (const json::exception& e) {
        throw DatasetError(meta_path.string() + " is not valid JSON: " + e.what());
      }
      if (meta.contains("bin_width")) {
        const double w = meta["bin_width"].get<double>();
        if (bin_width && *bin_width != w) {
          throw DatasetError("inconsistent elevation bin widths across inputs: " +
                             std::to_string(*bin_width) + " vs " + std::to_string(w) +
                             " (" + dir.string() + ")");
        }
        bin_width = w;
      }
    }
  }
  if (rows.empty()) {
    throw DatasetError("report: no metric rows found");
  }

  const ComparisonReport report = comparison_report(rows);
  ensure_out_dir(out_dir);
  write_text(fs::path(out_dir) / "report.csv", report.csv);
  write_text(fs::path(out_dir) / "report.txt", report.text);

  json meta;
  meta["command"] = "report";
  meta["inputs"] = inputs;
  meta["rows"] = rows.size();
  if (bin_width) meta["bin_width"] = *bin_width;
  write_meta(out_dir, meta);

  std::fputs(report.text.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar penetration-bias modeling, inversion and correction"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic scenes from a config");
  std::string sim_config, sim_out;
  simulate->add_option("--config", sim_config, "key = value config file")->required();
  simulate->add_option("--out", sim_out, "output directory")->required();

  // invert-uv
  auto* invert = app.add_subcommand(
      "invert-uv", "Training-free bias estimate from coherence magnitude");
  std::vector<std::string> uv_inputs;
  std::string uv_out;
  bool uv_clamp = false;
  invert->add_option("--samples", uv_inputs, "sample CSVs or directories")
      ->required()
      ->expected(-1);
  invert->add_option("--out", uv_out, "output directory")->required();
  invert->add_flag("--clamp-coherence", uv_clamp,
                   "clamp slightly super-unit coherence magnitudes to 1");

  // train
  auto* train = app.add_subcommand("train", "Train a bias prediction model");
  TrainFlags tf;
  train->add_option("--kind", tf.kind, "hybrid_exp, hybrid_weibull or pure_mlp")
      ->required()
      ->check(CLI::IsMember({"hybrid_exp", "hybrid_weibull", "pure_mlp"}));
  train->add_option("--scenario", tf.scenario, "all, interpolation or extrapolation")
      ->check(CLI::IsMember({"all", "interpolation", "extrapolation"}));
  train->add_option("--samples", tf.inputs, "sample CSVs or directories")
      ->required()
      ->expected(-1);
  train->add_option("--out", tf.out_path, "model JSON path")->required();
  train->add_option("--seed", tf.seed, "seed for init, shuffling and splits");
  train->add_option("--train-fraction", tf.train_fraction, "train share per scene")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));
  train->add_option("--val-fraction", tf.val_fraction,
                    "validation share carved from the train pool")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));
  train->add_option("--lr", tf.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  train->add_option("--batch", tf.batch, "batch size")->check(CLI::PositiveNumber);
  train->add_option("--epochs", tf.epochs, "max epochs")->check(CLI::PositiveNumber);
  train->add_option("--patience", tf.patience, "early-stopping patience, epochs");
  train->add_option("--interp-lo", tf.interp_lo, "interpolation exclusion low edge, m");
  train->add_option("--interp-hi", tf.interp_hi, "interpolation exclusion high edge, m");
  train->add_option("--extrap-above", tf.extrap_above, "extrapolation exclusion edge, m");
  train->add_flag("--clamp-coherence", tf.clamp,
                  "clamp slightly super-unit coherence magnitudes to 1");
  train->add_flag("--verbose", tf.verbose, "log one line per epoch to stderr");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on a split");
  EvaluateFlags ef;
  evaluate->add_option("--model", ef.model_path, "model JSON path")->required();
  evaluate->add_option("--samples", ef.inputs, "sample CSVs or directories")
      ->required()
      ->expected(-1);
  evaluate->add_option("--subset", ef.subset,
                       "test (in-scenario held-out pixels), excluded (held-out "
                       "scenes) or all (their union)")
      ->check(CLI::IsMember({"test", "excluded", "all"}));
  evaluate->add_option("--out", ef.out_dir, "output directory")->required();
  evaluate->add_option("--bin-width", ef.bin_width, "elevation bin width, m")
      ->check(CLI::PositiveNumber);
  evaluate->add_option("--hist-width", ef.hist_width, "error histogram bin width, m")
      ->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "Merge evaluation outputs into one table");
  std::vector<std::string> report_inputs;
  std::string report_out;
  report->add_option("--out", report_out, "output directory")->required();
  report->add_option("inputs", report_inputs, "evaluation/inversion output directories")
      ->required()
      ->expected(-1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim_config, sim_out);
    if (invert->parsed()) return cmd_invert_uv(uv_inputs, uv_out, uv_clamp);
    if (train->parsed()) return cmd_train(tf);
    if (evaluate->parsed()) return cmd_evaluate(ef);
    if (report->parsed()) return cmd_report(report_inputs, report_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
