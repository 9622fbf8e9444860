#include "penbias/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "penbias/errors.hpp"
#include "penbias/forward.hpp"
#include "penbias/geometry.hpp"
#include "penbias/rng.hpp"

namespace penbias {

namespace {

constexpr const char* kSampleHeader =
    "scene_id,gamma_mag,phase_vol,kz,incidence,backscatter_db,h_insar,h_ref";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

// %.17g guarantees the double parses back bit-identically
void append_double(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

struct RowIssues {
  std::size_t count = 0;
  std::string text;

  void add(const std::filesystem::path& path, std::size_t line_no, const std::string& what) {
    ++count;
    if (count <= 8) {
      text += "\n  " + path.string() + ":" + std::to_string(line_no) + ": " + what;
    }
  }
};

bool valid_scene_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') return false;
  }
  return true;
}

// smooth field on [0, 1]: sum of 8 seeded Gaussian bumps
struct BumpField {
  double center[8];
  double width[8];
  double amp[8];

  static BumpField draw(Rng& rng) {
    BumpField f;
    for (int k = 0; k < 8; ++k) {
      f.center[k] = rng.unit();
      f.width[k] = rng.uniform(0.05, 0.3);
      f.amp[k] = rng.uniform(-1.0, 1.0);
    }
    return f;
  }

  double operator()(double s) const {
    double v = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double d = (s - center[k]) / width[k];
      v += amp[k] * std::exp(-0.5 * d * d);
    }
    return v;
  }
};

// evaluate a field at every pixel and rescale min/max onto [lo, hi]
std::vector<double> rescaled_field(const BumpField& field, std::size_t n, double lo,
                                   double hi) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = field((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
  const double mn = *mn_it, mx = *mx_it;
  if (!(mx - mn > 1e-12) || lo == hi) {
    std::fill(v.begin(), v.end(), 0.5 * (lo + hi));
    return v;
  }
  for (double& x : v) {
    x = lo + (hi - lo) * (x - mn) / (mx - mn);
  }
  return v;
}

}  // namespace

LoadResult load_samples(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("load_samples: cannot open " + path.string());
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetError("load_samples: " + path.string() + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSampleHeader) {
    throw DatasetError("load_samples: " + path.string() +
                       " has an unexpected header\n  expected: " + kSampleHeader +
                       "\n  found:    " + line);
  }

  LoadResult result;
  RowIssues issues;
  std::size_t line_no = 1;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    if (fields.size() != 8) {
      issues.add(path, line_no,
                 "expected 8 fields, got " + std::to_string(fields.size()));
      continue;
    }

    PixelSample s;
    if (!valid_scene_id(fields[0])) {
      issues.add(path, line_no, "invalid scene_id");
      continue;
    }
    s.scene_id.assign(fields[0]);

    double* numeric[7] = {&s.gamma_mag, &s.phase_vol, &s.kz,     &s.incidence,
                          &s.backscatter_db, &s.h_insar, &s.h_ref};
    const char* names[7] = {"gamma_mag", "phase_vol", "kz",    "incidence",
                            "backscatter_db", "h_insar", "h_ref"};
    bool ok = true;
    for (int f = 0; f < 7; ++f) {
      if (!parse_double(fields[f + 1], *numeric[f])) {
        issues.add(path, line_no, std::string(names[f]) + " is not a finite number: '" +
                                      std::string(fields[f + 1]) + "'");
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    if (s.gamma_mag < 0.0 || s.gamma_mag > 1.0) {
      // tolerate slight super-unit magnitudes (estimator noise) when asked to
      if (opts.clamp_coherence && s.gamma_mag >= 0.0 && s.gamma_mag <= 1.0 + 1e-6) {
        s.gamma_mag = 1.0;
        ++result.clamped;
      } else {
        issues.add(path, line_no,
                   "gamma_mag out of [0, 1]: " + std::to_string(s.gamma_mag));
        continue;
      }
    }
    if (!(s.phase_vol > -kPi) || !(s.phase_vol <= kPi)) {
      issues.add(path, line_no, "phase_vol out of (-pi, pi]");
      continue;
    }
    if (!(s.kz > 0.0)) {
      issues.add(path, line_no, "kz must be > 0");
      continue;
    }
    if (!(s.incidence > 0.0) || !(s.incidence < kPi / 2.0)) {
      issues.add(path, line_no, "incidence out of (0, pi/2) rad");
      continue;
    }

    result.samples.push_back(std::move(s));
  }

  if (issues.count > 0) {
    std::string msg = "load_samples: " + std::to_string(issues.count) +
                      " malformed row(s) in " + path.string() + issues.text;
    if (issues.count > 8) {
      msg += "\n  ... and " + std::to_string(issues.count - 8) + " more";
    }
    throw DatasetError(msg);
  }
  return result;
}

void save_samples(std::span<const PixelSample> samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DatasetError("save_samples: cannot open " + path.string() + " for writing");
  }
  out << kSampleHeader << '\n';

  std::string line;
  for (const PixelSample& s : samples) {
    if (!valid_scene_id(s.scene_id)) {
      throw DatasetError("save_samples: invalid scene_id '" + s.scene_id + "'");
    }
    line.clear();
    line += s.scene_id;
    const double values[7] = {s.gamma_mag, s.phase_vol,      s.kz,      s.incidence,
                              s.backscatter_db, s.h_insar, s.h_ref};
    for (double v : values) {
      line += ',';
      append_double(line, v);
    }
    out << line << '\n';
  }
  if (!out) {
    throw DatasetError("save_samples: write failed for " + path.string());
  }
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::All:
      return "all";
    case ScenarioKind::Interpolation:
      return "interpolation";
    case ScenarioKind::Extrapolation:
      return "extrapolation";
  }
  return "all";
}

ScenarioKind scenario_from_string(const std::string& name) {
  if (name == "all") return ScenarioKind::All;
  if (name == "interpolation") return ScenarioKind::Interpolation;
  if (name == "extrapolation") return ScenarioKind::Extrapolation;
  throw std::invalid_argument("unknown scenario '" + name +
                              "' (expected all, interpolation or extrapolation)");
}

bool ScenarioSpec::excludes_hoa(double hoa) const {
  switch (kind) {
    case ScenarioKind::All:
      return false;
    case ScenarioKind::Interpolation:
      return hoa >= interp_lo && hoa <= interp_hi;
    case ScenarioKind::Extrapolation:
      return hoa > extrap_above;
  }
  return false;
}

SplitResult scenario_split(std::span<const PixelSample> samples, const ScenarioSpec& spec,
                           double train_fraction, std::uint64_t seed) {
  if (samples.empty()) {
    throw DatasetError("scenario_split: no samples");
  }
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
    throw std::invalid_argument("scenario_split: train_fraction must be in (0, 1), got " +
                                std::to_string(train_fraction));
  }
  if (spec.kind == ScenarioKind::Interpolation && !(spec.interp_lo <= spec.interp_hi)) {
    throw std::invalid_argument("scenario_split: interpolation band is empty");
  }

  // scenes iterate in id order so the shuffle stream is independent of row order
  std::map<std::string, std::vector<std::size_t>> scenes;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    scenes[samples[i].scene_id].push_back(i);
  }

  SplitResult result;
  Rng rng(seed);
  bool any_kept = false;

  for (auto& [id, idx] : scenes) {
    double hoa_sum = 0.0;
    for (std::size_t i : idx) {
      hoa_sum += 2.0 * kPi / samples[i].kz;
    }
    const double hoa_mean = hoa_sum / static_cast<double>(idx.size());

    if (spec.excludes_hoa(hoa_mean)) {
      for (std::size_t i : idx) result.excluded.push_back(samples[i]);
      continue;
    }
    any_kept = true;

    std::vector<std::size_t> order = idx;
    rng.shuffle(order);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(order.size())));
    n_train = std::min(n_train, order.size());

    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    for (std::size_t i : train_idx) result.train.push_back(samples[i]);
    for (std::size_t i : test_idx) result.test.push_back(samples[i]);
  }

  if (!any_kept) {
    throw DatasetError("scenario_split: the " + to_string(spec.kind) +
                       " exclusion removed every scene");
  }
  return result;
}

SceneData synthesize_scene(const SyntheticSceneConfig& config) {
  if (!valid_scene_id(config.scene_id)) {
    throw std::invalid_argument("synthesize_scene: invalid scene_id");
  }
  if (config.n_pixels == 0) {
    throw std::invalid_argument("synthesize_scene: n_pixels must be >= 1");
  }
  if (!(config.hoa_m > 0.0)) {
    throw std::invalid_argument("synthesize_scene: hoa_m must be > 0");
  }
  if (!(config.incidence_deg > 0.0) || !(config.incidence_deg < 90.0)) {
    throw std::invalid_argument("synthesize_scene: incidence_deg must be in (0, 90)");
  }
  if (!(config.param1.lo <= config.param1.hi) || !(config.param2.lo <= config.param2.hi)) {
    throw std::invalid_argument("synthesize_scene: parameter range has lo > hi");
  }
  if (config.coherence_noise_std < 0.0 || config.elevation_noise_std < 0.0) {
    throw std::invalid_argument("synthesize_scene: noise std must be >= 0");
  }
  if (config.profile == ProfileKind::Exponential) {
    if (!(config.param1.lo > 0.0)) {
      throw std::invalid_argument("synthesize_scene: d_pen range must be > 0");
    }
  } else {
    // surface the box violation now rather than mid-generation
    make_weibull(config.param1.lo, config.param2.lo);
    make_weibull(config.param1.hi, config.param2.hi);
  }

  const double kz = hoa_to_kz(config.hoa_m);
  const double incidence = deg_to_rad(config.incidence_deg);
  const std::size_t n = config.n_pixels;

  Rng rng(config.seed);

  // field draws first, in a fixed order, then per-pixel noise
  const BumpField f1 = BumpField::draw(rng);
  std::vector<double> param1 = rescaled_field(f1, n, config.param1.lo, config.param1.hi);
  std::vector<double> param2;
  if (config.profile == ProfileKind::Weibull) {
    const BumpField f2 = BumpField::draw(rng);
    param2 = rescaled_field(f2, n, config.param2.lo, config.param2.hi);
  }
  const BumpField fe = BumpField::draw(rng);
  std::vector<double> h_ref =
      rescaled_field(fe, n, config.ref_elevation.lo, config.ref_elevation.hi);

  SceneData scene;
  scene.samples.reserve(n);
  scene.truth.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    VolumeCoherence gamma;
    double depth_scale;  // two-way-equivalent depth driving the backscatter proxy
    GroundTruthRow truth;
    truth.scene_id = config.scene_id;
    truth.pixel_index = i;

    if (config.profile == ProfileKind::Exponential) {
      gamma = gamma_vol_exponential(ExponentialProfile{param1[i], 1.0}, kz);
      depth_scale = param1[i];
      truth.params = {param1[i]};
    } else {
      gamma = gamma_vol_weibull_params(param1[i], param2[i], kz);
      // mean Weibull depth 2 * Gamma(1 + 1/k) / lambda, matching the
      // exponential convention d_pen = 2 / lambda at k = 1
      depth_scale = 2.0 * std::tgamma(1.0 + 1.0 / param2[i]) / param1[i];
      truth.params = {param1[i], param2[i]};
    }
    truth.true_bias = phase_to_bias(gamma, kz);

    const double eps_coh = rng.normal(0.0, config.coherence_noise_std);
    const double eps_elev = rng.normal(0.0, config.elevation_noise_std);
    const double eps_back = rng.normal(0.0, 0.5);

    PixelSample s;
    s.scene_id = config.scene_id;
    s.gamma_mag = std::clamp(gamma.magnitude * (1.0 + eps_coh), 0.0, 1.0);
    s.phase_vol = gamma.phase;
    s.kz = kz;
    s.incidence = incidence;
    s.backscatter_db = -5.0 - 0.8 * depth_scale + eps_back;
    s.h_ref = h_ref[i];
    s.h_insar = h_ref[i] + truth.true_bias + eps_elev;

    scene.samples.push_back(std::move(s));
    scene.truth.push_back(std::move(truth));
  }
  return scene;
}

void save_ground_truth(std::span<const GroundTruthRow> rows,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw DatasetError("save_ground_truth: cannot open " + path.string() +
                       " for writing");
  }

  const std::size_t n_params = rows.empty() ? 1 : rows.front().params.size();
  out << (n_params == 2 ? "scene_id,pixel_index,param1,param2,true_bias"
                        : "scene_id,pixel_index,param1,true_bias")
      << '\n';

  std::string line;
  for (const GroundTruthRow& r : rows) {
    if (r.params.size() != n_params) {
      throw DatasetError("save_ground_truth: inconsistent parameter count");
    }
    line.clear();
    line += r.scene_id;
    line += ',';
    line += std::to_string(r.pixel_index);
    for (double p : r.params) {
      line += ',';
      append_double(line, p);
    }
    line += ',';
    append_double(line, r.true_bias);
    out << line << '\n';
  }
  if (!out) {
    throw DatasetError("save_ground_truth: write failed for " + path.string());
  }
}

}  // namespace penbias
