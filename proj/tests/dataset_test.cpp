#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "penbias/dataset.hpp"
#include "penbias/errors.hpp"
#include "penbias/forward.hpp"
#include "penbias/geometry.hpp"
#include "penbias/rng.hpp"
#include "support/oracles.hpp"

using namespace penbias;
using testing_oracles::rel_diff;

namespace {

namespace fs = std::filesystem;

// unique scratch path; tests clean up after themselves
fs::path scratch_file(const std::string& name) {
  return fs::temp_directory_path() / ("penbias_test_" + name);
}

std::vector<PixelSample> make_fixture(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PixelSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PixelSample s;
    s.scene_id = "scene_" + std::to_string(i % 3);
    s.gamma_mag = rng.uniform(0.05, 1.0);
    s.phase_vol = rng.uniform(-3.0, 3.0);
    s.kz = rng.uniform(0.02, 0.5);
    s.incidence = rng.uniform(0.3, 1.2);
    s.backscatter_db = rng.uniform(-25.0, 0.0);
    s.h_ref = rng.uniform(100.0, 3000.0);
    s.h_insar = s.h_ref + rng.uniform(-8.0, 0.0);
    out.push_back(std::move(s));
  }
  return out;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const std::string& l : lines) out << l << "\n";
}

const std::string kHeader =
    "scene_id,gamma_mag,phase_vol,kz,incidence,backscatter_db,h_insar,h_ref";

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("samples survive a save/load round trip without drift") {
  const std::vector<PixelSample>fixture = make_fixture(200, 4);
  const fs::path path = scratch_file("roundtrip.csv");
  save_samples(fixture, path);
  const LoadResult r = load_samples(path);
  fs::remove(path);

  REQUIRE(r.samples.size() == fixture.size());
  CHECK(r.clamped == 0);
  for (std::size_t i = 0; i < fixture.size(); ++i) {
    CHECK(r.samples[i].scene_id == fixture[i].scene_id);
    CHECK(r.samples[i].gamma_mag == fixture[i].gamma_mag);
    CHECK(r.samples[i].phase_vol == fixture[i].phase_vol);
    CHECK(r.samples[i].kz == fixture[i].kz);
    CHECK(r.samples[i].incidence == fixture[i].incidence);
    CHECK(r.samples[i].backscatter_db == fixture[i].backscatter_db);
    CHECK(r.samples[i].h_insar == fixture[i].h_insar);
    CHECK(r.samples[i].h_ref == fixture[i].h_ref);
  }
}

TEST_CASE("malformed files are rejected with location diagnostics") {
  const fs::path path = scratch_file("malformed.csv");

  SUBCASE("wrong header") {
    write_lines(path, {"scene,gamma", "a,1"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
  }
  SUBCASE("wrong field count") {
    write_lines(path, {kHeader, "s,0.9,0.1,0.1,0.7,-10,100"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
  }
  SUBCASE("non-numeric field carries file and line") {
    write_lines(path, {kHeader, "s,abc,0.1,0.1,0.7,-10,100,99"});
    try {
      load_samples(path);
      FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(path.filename().string()) != std::string::npos);
      CHECK(msg.find(":2") != std::string::npos);
    }
  }
  SUBCASE("nan and inf are rejected") {
    write_lines(path, {kHeader, "s,nan,0.1,0.1,0.7,-10,100,99"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
    write_lines(path, {kHeader, "s,0.9,inf,0.1,0.7,-10,100,99"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
  }
  SUBCASE("out-of-range physics") {
    // negative coherence magnitude
    write_lines(path, {kHeader, "s,-0.1,0.1,0.1,0.7,-10,100,99"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
    // phase exactly -pi is outside (-pi, pi]
    write_lines(path, {kHeader, "s,0.9,-3.14159265358979323846,0.1,0.7,-10,100,99"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
    // kz must be positive
    write_lines(path, {kHeader, "s,0.9,0.1,0,0.7,-10,100,99"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
    // incidence outside (0, pi/2)
    write_lines(path, {kHeader, "s,0.9,0.1,0.1,1.6,-10,100,99"});
    CHECK_THROWS_AS(load_samples(path), DatasetError);
  }
  fs::remove(path);
}

TEST_CASE("slightly super-unit coherence is clamped only on request") {
  const fs::path path = scratch_file("clamp.csv");
  write_lines(path, {kHeader, "s,1.0000000008,0.1,0.1,0.7,-10,100,99"});

  CHECK_THROWS_AS(load_samples(path), DatasetError);

  LoadOptions opts;
  opts.clamp_coherence = true;
  const LoadResult r = load_samples(path, opts);
  CHECK(r.clamped == 1);
  CHECK(r.samples[0].gamma_mag == 1.0);

  // beyond the tolerance it is a data error even with clamping on
  write_lines(path, {kHeader, "s,1.01,0.1,0.1,0.7,-10,100,99"});
  CHECK_THROWS_AS(load_samples(path, opts), DatasetError);
  fs::remove(path);
}

TEST_CASE("scenario exclusion windows") {
  ScenarioSpec interp;
  interp.kind = ScenarioKind::Interpolation;
  CHECK(interp.excludes_hoa(50.0));  // inclusive edges
  CHECK(interp.excludes_hoa(55.0));
  CHECK(interp.excludes_hoa(60.0));
  CHECK_FALSE(interp.excludes_hoa(49.999));
  CHECK_FALSE(interp.excludes_hoa(60.001));

  ScenarioSpec extrap;
  extrap.kind = ScenarioKind::Extrapolation;
  CHECK_FALSE(extrap.excludes_hoa(70.0));  // strictly above
  CHECK(extrap.excludes_hoa(70.001));
  CHECK(extrap.excludes_hoa(300.0));

  ScenarioSpec all;
  CHECK_FALSE(all.excludes_hoa(55.0));
  CHECK_FALSE(all.excludes_hoa(1e6));

  CHECK(scenario_from_string("interpolation") == ScenarioKind::Interpolation);
  CHECK(to_string(ScenarioKind::Extrapolation) == "extrapolation");
  CHECK_THROWS_AS(scenario_from_string("sideways"), std::invalid_argument);
}

TEST_CASE("scenario split partitions every scene at the requested fraction") {
  // three scenes with hoa 40, 55, 90 via kz = 2 pi / hoa
  std::vector<PixelSample> samples;
  const std::map<std::string, double> scene_hoa{
      {"a", 40.0}, {"b", 55.0}, {"c", 90.0}};
  Rng rng(9);
  for (const auto& [id, hoa] : scene_hoa) {
    for (int i = 0; i < 101; ++i) {  // odd count exercises the rounding
      PixelSample s;
      s.scene_id = id;
      s.gamma_mag = rng.uniform(0.2, 0.95);
      s.phase_vol = rng.uniform(-1.0, 0.0);
      s.kz = hoa_to_kz(hoa);
      s.incidence = 0.7;
      s.backscatter_db = -10.0;
      s.h_ref = rng.uniform(200.0, 1000.0);
      s.h_insar = s.h_ref - 2.0;
      samples.push_back(std::move(s));
    }
  }

  SUBCASE("all: no exclusions, per-scene fraction honoured") {
    const SplitResult r = scenario_split(samples, ScenarioSpec{}, 0.6, 12);
    CHECK(r.excluded.empty());
    CHECK(r.train.size() + r.test.size() == samples.size());

    std::map<std::string, std::size_t> train_counts;
    for (const PixelSample& s : r.train) ++train_counts[s.scene_id];
    for (const auto& [id, count] : train_counts) {
      CHECK(count == 61);  // llround(0.6 * 101)
    }

    // no sample lost or duplicated: compare multisets of a unique-ish key
    std::multiset<double> in, out;
    for (const PixelSample& s : samples) in.insert(s.h_ref);
    for (const PixelSample& s : r.train) out.insert(s.h_ref);
    for (const PixelSample& s : r.test) out.insert(s.h_ref);
    CHECK(in == out);
  }

  SUBCASE("interpolation holds out the mid scene entirely") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Interpolation;
    const SplitResult r = scenario_split(samples, spec, 0.6, 12);
    CHECK(r.excluded.size() == 101);
    for (const PixelSample& s : r.excluded) CHECK(s.scene_id == "b");
    for (const PixelSample& s : r.train) CHECK(s.scene_id != "b");
    for (const PixelSample& s : r.test) CHECK(s.scene_id != "b");
  }

  SUBCASE("extrapolation holds out the far scene") {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Extrapolation;
    const SplitResult r = scenario_split(samples, spec, 0.6, 12);
    CHECK(r.excluded.size() == 101);
    for (const PixelSample& s : r.excluded) CHECK(s.scene_id == "c");
  }

  SUBCASE("deterministic in the seed, sensitive to it") {
    const SplitResult r1 = scenario_split(samples, ScenarioSpec{}, 0.6, 12);
    const SplitResult r2 = scenario_split(samples, ScenarioSpec{}, 0.6, 12);
    REQUIRE(r1.train.size() == r2.train.size());
    bool same = true;
    for (std::size_t i = 0; i < r1.train.size(); ++i) {
      same = same && r1.train[i].h_ref == r2.train[i].h_ref;
    }
    CHECK(same);

    const SplitResult r3 = scenario_split(samples, ScenarioSpec{}, 0.6, 13);
    bool differs = r1.train.size() != r3.train.size();
    for (std::size_t i = 0; !differs && i < r1.train.size(); ++i) {
      differs = r1.train[i].h_ref != r3.train[i].h_ref;
    }
    CHECK(differs);
  }

  SUBCASE("scene file order does not change the membership") {
    // same scenes concatenated c, a, b instead of a, b, c: the shuffle is
    // keyed on scene id, so which pixels land in train must not move
    std::vector<PixelSample> reordered;
    for (const char* id : {"c", "a", "b"}) {
      for (const PixelSample& s : samples) {
        if (s.scene_id == id) reordered.push_back(s);
      }
    }
    const SplitResult r1 = scenario_split(samples, ScenarioSpec{}, 0.6, 12);
    const SplitResult r2 = scenario_split(reordered, ScenarioSpec{}, 0.6, 12);
    std::multiset<double> a, b;
    for (const PixelSample& s : r1.train) a.insert(s.h_ref);
    for (const PixelSample& s : r2.train) b.insert(s.h_ref);
    CHECK(a == b);
  }

  SUBCASE("degenerate requests are rejected") {
    CHECK_THROWS_AS(scenario_split(samples, ScenarioSpec{}, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(scenario_split(samples, ScenarioSpec{}, 1.0, 1), std::invalid_argument);

    // a window that swallows every scene leaves nothing to train on
    ScenarioSpec greedy;
    greedy.kind = ScenarioKind::Interpolation;
    greedy.interp_lo = 1.0;
    greedy.interp_hi = 1e9;
    CHECK_THROWS_AS(scenario_split(samples, greedy, 0.6, 1), DatasetError);
  }
}

TEST_CASE("synthetic scenes reproduce the forward model when noiseless") {
  SyntheticSceneConfig cfg;
  cfg.scene_id = "synth";
  cfg.seed = 77;
  cfg.n_pixels = 400;
  cfg.hoa_m = 45.0;
  cfg.incidence_deg = 39.0;
  cfg.profile = ProfileKind::Exponential;
  cfg.param1 = {2.0, 11.0};

  const SceneData scene = synthesize_scene(cfg);
  REQUIRE(scene.samples.size() == 400);
  REQUIRE(scene.truth.size() == 400);

  const double kz = hoa_to_kz(45.0);
  for (std::size_t i = 0; i < scene.samples.size(); i += 17) {
    const PixelSample& s = scene.samples[i];
    const GroundTruthRow& t = scene.truth[i];
    REQUIRE(t.params.size() == 1);

    CHECK(s.kz == kz);
    CHECK(s.scene_id == "synth");
    CHECK(t.params[0] >= 2.0);
    CHECK(t.params[0] <= 11.0);
    CHECK(s.h_ref >= cfg.ref_elevation.lo);
    CHECK(s.h_ref <= cfg.ref_elevation.hi);

    // with zero noise the stored observables equal the forward model exactly
    const VolumeCoherence g = gamma_vol_exponential(make_exponential(t.params[0]), kz);
    CHECK(s.gamma_mag == g.magnitude);
    CHECK(s.phase_vol == g.phase);
    CHECK(rel_diff(t.true_bias, phase_to_bias(g, kz)) < 1e-15);
    CHECK(rel_diff(s.h_insar, s.h_ref + t.true_bias) < 1e-15);
  }
}

TEST_CASE("noise enters the observables, never the truth sidecar") {
  SyntheticSceneConfig cfg;
  cfg.scene_id = "noisy";
  cfg.seed = 5;
  cfg.n_pixels = 600;
  cfg.hoa_m = 60.0;
  cfg.profile = ProfileKind::Exponential;
  cfg.param1 = {3.0, 9.0};
  cfg.coherence_noise_std = 0.02;
  cfg.elevation_noise_std = 0.3;

  const SceneData noisy = synthesize_scene(cfg);
  SyntheticSceneConfig clean_cfg = cfg;
  clean_cfg.coherence_noise_std = 0.0;
  clean_cfg.elevation_noise_std = 0.0;
  const SceneData clean = synthesize_scene(clean_cfg);

  // same seed => same parameter fields => identical truth
  double max_bias_diff = 0.0;
  double elev_rms = 0.0;
  for (std::size_t i = 0; i < 600; ++i) {
    max_bias_diff = std::max(
        max_bias_diff, std::abs(noisy.truth[i].true_bias - clean.truth[i].true_bias));
    const double d = (noisy.samples[i].h_insar - noisy.samples[i].h_ref) -
                     (clean.samples[i].h_insar - clean.samples[i].h_ref);
    elev_rms += d * d;
  }
  elev_rms = std::sqrt(elev_rms / 600.0);
  CHECK(max_bias_diff == 0.0);
  CHECK(elev_rms > 0.2);   // the 0.3 m noise is present
  CHECK(elev_rms < 0.4);

  // magnitudes stay physical under multiplicative noise
  for (const PixelSample& s : noisy.samples) {
    CHECK(s.gamma_mag >= 0.0);
    CHECK(s.gamma_mag <= 1.0);
  }
}

TEST_CASE("weibull scenes carry two parameters and obey the box") {
  SyntheticSceneConfig cfg;
  cfg.scene_id = "wb";
  cfg.seed = 21;
  cfg.n_pixels = 120;
  cfg.hoa_m = 52.0;
  cfg.profile = ProfileKind::Weibull;
  cfg.param1 = {0.05, 0.5};
  cfg.param2 = {0.9, 1.4};

  const SceneData scene = synthesize_scene(cfg);
  const double kz = hoa_to_kz(52.0);
  for (std::size_t i = 0; i < scene.truth.size(); i += 13) {
    const GroundTruthRow& t = scene.truth[i];
    REQUIRE(t.params.size() == 2);
    CHECK(t.params[0] >= 0.05);
    CHECK(t.params[0] <= 0.5);
    CHECK(t.params[1] >= 0.9);
    CHECK(t.params[1] <= 1.4);

    const VolumeCoherence g =
        gamma_vol_weibull(make_weibull(t.params[0], t.params[1]), kz);
    CHECK(rel_diff(scene.samples[i].gamma_mag, g.magnitude) < 1e-12);
    CHECK(rel_diff(scene.samples[i].phase_vol, g.phase) < 1e-12);
  }

  // parameter ranges poking outside the box are configuration errors
  SyntheticSceneConfig bad = cfg;
  bad.param2 = {0.7, 1.4};
  CHECK_THROWS_AS(synthesize_scene(bad), std::domain_error);
}

TEST_CASE("backscatter tracks the effective penetration depth") {
  SyntheticSceneConfig cfg;
  cfg.scene_id = "sigma";
  cfg.seed = 13;
  cfg.n_pixels = 2000;
  cfg.hoa_m = 48.0;
  cfg.profile = ProfileKind::Exponential;
  cfg.param1 = {1.0, 15.0};

  const SceneData scene = synthesize_scene(cfg);
  // deeper penetration -> weaker backscatter; correlation must be clearly
  // negative despite the 0.5 dB scatter
  double sum_d = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) {
    sum_d += scene.truth[i].params[0];
    sum_b += scene.samples[i].backscatter_db;
  }
  const double mean_d = sum_d / 2000.0, mean_b = sum_b / 2000.0;
  double cov = 0.0, var_d = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) {
    const double dd = scene.truth[i].params[0] - mean_d;
    const double db = scene.samples[i].backscatter_db - mean_b;
    cov += dd * db;
    var_d += dd * dd;
    var_b += db * db;
  }
  CHECK(cov / std::sqrt(var_d * var_b) < -0.9);
}

TEST_CASE("ground truth sidecar format") {
  SyntheticSceneConfig cfg;
  cfg.scene_id = "gt";
  cfg.seed = 3;
  cfg.n_pixels = 50;
  cfg.hoa_m = 70.0;
  cfg.profile = ProfileKind::Weibull;
  cfg.param1 = {0.1, 0.4};
  cfg.param2 = {1.0, 1.2};

  const SceneData scene = synthesize_scene(cfg);
  const fs::path path = scratch_file("truth.csv");
  save_ground_truth(scene.truth, path);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "scene_id,pixel_index,param1,param2,true_bias");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 50);
  in.close();
  fs::remove(path);
}

}  // TEST_SUITE
