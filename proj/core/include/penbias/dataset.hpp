#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "penbias/profiles.hpp"

namespace penbias {

// One pixel of an interferometric scene plus its reference elevation.
// Invariants enforced on load: gamma_mag in [0, 1], phase_vol in (-pi, pi],
// kz > 0, incidence in (0, pi/2) rad.
struct PixelSample {
  std::string scene_id;
  double gamma_mag;        // volume coherence magnitude
  double phase_vol;        // volume coherence phase, rad
  double kz;               // vertical wavenumber, rad/m
  double incidence;        // incidence angle, rad
  double backscatter_db;   // sigma0, dB
  double h_insar;          // uncorrected interferometric elevation, m
  double h_ref;            // reference elevation, m
};

// Regression target: the measured penetration bias h_insar - h_ref. Computed,
// never stored in the files.
inline double reference_bias(const PixelSample& s) { return s.h_insar - s.h_ref; }

// ---------------------------------------------------------------------------
// sample CSV I/O
// header: scene_id,gamma_mag,phase_vol,kz,incidence,backscatter_db,h_insar,h_ref
// ---------------------------------------------------------------------------

struct LoadOptions {
  // clamp gamma_mag into [0, 1] instead of rejecting the row; out-of-range
  // magnitudes beyond 1 + 1e-6 are rejected either way
  bool clamp_coherence = false;
};

struct LoadResult {
  std::vector<PixelSample> samples;
  std::size_t clamped = 0;  // rows whose gamma_mag was clamped
};

// Throws DatasetError on malformed files; the message carries the file name,
// 1-based line number and offending field of every bad row (up to a cap).
LoadResult load_samples(const std::filesystem::path& path, const LoadOptions& opts = {});

void save_samples(std::span<const PixelSample> samples, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// scenario splits
// ---------------------------------------------------------------------------

enum class ScenarioKind { All, Interpolation, Extrapolation };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_from_string(const std::string& name);

// Which scenes are held out entirely, keyed on the scene-mean height of
// ambiguity 2*pi/kz:
//   All            nothing held out
//   Interpolation  hoa in [lo, hi] held out (defaults [50, 60] m)
//   Extrapolation  hoa > above held out (default 70 m)
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::All;
  double interp_lo = 50.0;
  double interp_hi = 60.0;
  double extrap_above = 70.0;

  bool excludes_hoa(double hoa) const;
};

struct SplitResult {
  std::vector<PixelSample> train;
  std::vector<PixelSample> test;
  std::vector<PixelSample> excluded;  // entire scenes, for unseen-HoA evaluation
};

// Scene-held-out exclusion followed by a per-scene pixel shuffle that puts
// train_fraction of every remaining scene into train (rounded to nearest, so
// the global fraction holds to within one pixel per scene). Deterministic in
// (samples order, spec, train_fraction, seed). Throws DatasetError when the
// exclusion empties the remainder.
SplitResult scenario_split(std::span<const PixelSample> samples, const ScenarioSpec& spec,
                           double train_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// synthetic scenes
// ---------------------------------------------------------------------------

struct ParamRange {
  double lo = 0.0, hi = 0.0;
};

struct SyntheticSceneConfig {
  std::string scene_id;
  std::uint64_t seed = 0;
  std::size_t n_pixels = 0;
  double hoa_m = 60.0;              // scene height of ambiguity, fixes kz
  double incidence_deg = 45.0;
  ProfileKind profile = ProfileKind::Exponential;
  ParamRange param1{4.0, 12.0};     // d_pen (m) or lambda_w (1/m)
  ParamRange param2{1.0, 1.0};      // k_w, weibull only
  double coherence_noise_std = 0.0; // multiplicative, on gamma_mag
  double elevation_noise_std = 0.0; // additive on h_insar, m
  ParamRange ref_elevation{100.0, 3000.0};
};

struct GroundTruthRow {
  std::string scene_id;
  std::size_t pixel_index;
  std::vector<double> params;  // d_pen, or lambda_w,k_w
  double true_bias;            // noiseless phase_to_bias, m
};

struct SceneData {
  std::vector<PixelSample> samples;
  std::vector<GroundTruthRow> truth;
};

// Smooth per-scene parameter and elevation fields (sum of seeded Gaussian
// bumps rescaled into the requested ranges) plus per-pixel noise. With both
// noise levels at zero the stored gamma_mag / h_insar reproduce the forward
// model exactly. Deterministic in the config seed.
SceneData synthesize_scene(const SyntheticSceneConfig& config);

// sidecar CSV: scene_id,pixel_index,param1[,param2],true_bias
void save_ground_truth(std::span<const GroundTruthRow> rows,
                       const std::filesystem::path& path);

}  // namespace penbias
