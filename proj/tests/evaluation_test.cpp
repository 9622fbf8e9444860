#include <doctest.h>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "penbias/dataset.hpp"
#include "penbias/evaluation.hpp"
#include "penbias/rng.hpp"
#include "support/oracles.hpp"

using namespace penbias;
using testing_oracles::rel_diff;

TEST_SUITE("evaluation") {

TEST_CASE("hand-computed fixture is reproduced exactly") {
  const std::array<double, 3> predicted{2.0, 3.0, 4.0};
  const std::array<double, 3> reference{1.0, 2.0, 3.0};
  const MetricsReport m = compute_metrics(predicted, reference);

  CHECK(m.me == 1.0);
  CHECK(m.mae == 1.0);
  CHECK(m.rmse == 1.0);
  CHECK(m.r2 == -0.5);
  CHECK(rel_diff(m.mape_percent, 61.111111111111111) < 1e-14);
  CHECK(m.mu == -1.0);
  CHECK(m.sigma == 0.0);
  CHECK(m.n == 3);
  CHECK(m.mape_excluded == 0);
}

TEST_CASE("perfect predictions score perfectly") {
  const std::array<double, 4> y{-3.0, -1.5, -0.5, -4.0};
  const MetricsReport m = compute_metrics(y, y);
  CHECK(m.me == 0.0);
  CHECK(m.mae == 0.0);
  CHECK(m.rmse == 0.0);
  CHECK(m.r2 == 1.0);
  CHECK(m.mape_percent == 0.0);
  CHECK(m.sigma == 0.0);
}

TEST_CASE("decomposition rmse^2 == me^2 + sigma^2 holds on random data") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.below(40);
    std::vector<double> pred(n), ref(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.uniform(-6.0, 0.0);
      ref[i] = rng.uniform(-6.0, 0.0);
    }
    const MetricsReport m = compute_metrics(pred, ref);
    CHECK(rel_diff(m.rmse * m.rmse, m.me * m.me + m.sigma * m.sigma) < 1e-10);
  }
}

TEST_CASE("mape excludes near-zero references") {
  const std::array<double, 3> pred{1.0, 5.0, 2.0};
  const std::array<double, 3> ref{0.0, 4.0, 2.0};  // first is excluded
  const MetricsReport m = compute_metrics(pred, ref);
  CHECK(m.mape_excluded == 1);
  // remaining: |1|/4 and 0 -> mean 12.5%
  CHECK(rel_diff(m.mape_percent, 12.5) < 1e-14);

  const std::array<double, 2> all_zero_ref{0.0, 1e-9};
  const std::array<double, 2> p2{1.0, 1.0};
  const MetricsReport m2 = compute_metrics(p2, all_zero_ref);
  CHECK(m2.mape_excluded == 2);
  CHECK(std::isnan(m2.mape_percent));
}

TEST_CASE("r2 is undefined for constant references") {
  const std::array<double, 3> pred{1.0, 2.0, 3.0};
  const std::array<double, 3> ref{2.0, 2.0, 2.0};
  CHECK(std::isnan(compute_metrics(pred, ref).r2));
}

TEST_CASE("size mismatch and empty input are rejected") {
  const std::array<double, 2> two{1.0, 2.0};
  const std::array<double, 3> three{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(compute_metrics(two, three), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics(std::span<const double>{}, std::span<const double>{}),
                  std::invalid_argument);
}

TEST_CASE("dem error statistics are population moments") {
  const std::array<double, 4> corrected{101.0, 99.0, 102.0, 98.0};
  const std::array<double, 4> reference{100.0, 100.0, 100.0, 100.0};
  const DemErrorStats s = dem_error_stats(corrected, reference);
  CHECK(s.mu == 0.0);
  CHECK(rel_diff(s.sigma, std::sqrt(2.5)) < 1e-15);  // population, divides by n
}

TEST_CASE("elevation bins group by reference height and skip empty bins") {
  std::vector<PixelSample> samples(5);
  std::vector<double> errors{0.5, 1.5, -0.5, 2.0, 3.0};
  samples[0].h_ref = 110.0;   // bin [0, 200)
  samples[1].h_ref = 150.0;   // bin [0, 200)
  samples[2].h_ref = 190.0;   // bin [0, 200)
  samples[3].h_ref = 950.0;   // bin [800, 1000)
  samples[4].h_ref = 1000.0;  // bin [1000, 1200)

  const std::vector<ElevationBin> bins = elevation_binned_errors(samples, errors, 200.0);
  REQUIRE(bins.size() == 3);

  CHECK(bins[0].lo == 0.0);
  CHECK(bins[0].hi == 200.0);
  CHECK(bins[0].n == 3);
  CHECK(rel_diff(bins[0].mu, 0.5) < 1e-15);
  // population std of {0.5, 1.5, -0.5}
  CHECK(rel_diff(bins[0].sigma, std::sqrt(2.0 / 3.0)) < 1e-15);

  CHECK(bins[1].lo == 800.0);
  CHECK(bins[1].n == 1);
  CHECK(bins[1].sigma == 0.0);

  CHECK(bins[2].lo == 1000.0);  // edge value falls into the upper bin
  CHECK(bins[2].n == 1);

  // adjacent metadata: bins share edges exactly when contiguous
  const std::vector<double> more_errors{1.0, 2.0};
  std::vector<PixelSample> adjacent(2);
  adjacent[0].h_ref = 150.0;
  adjacent[1].h_ref = 250.0;
  const std::vector<ElevationBin> pair = elevation_binned_errors(adjacent, more_errors, 200.0);
  REQUIRE(pair.size() == 2);
  CHECK(pair[0].hi == pair[1].lo);
}

TEST_CASE("error histogram keeps empty interior bins and aligned edges") {
  const std::array<double, 6> errors{-0.25, -0.22, 0.15, 0.18, 0.19, -0.01};
  const std::vector<HistogramBin> bins = error_histogram(errors, 0.1);

  // floor(-0.25 / 0.1) = -3, floor(0.19 / 0.1) = 1 -> five bins
  REQUIRE(bins.size() == 5);
  CHECK(rel_diff(bins[0].lo, -0.3) < 1e-15);
  CHECK(bins[0].count == 2);
  CHECK(bins[1].count == 0);  // empty interior bin preserved
  CHECK(bins[2].count == 1);  // -0.01 lands in [-0.1, 0)
  CHECK(bins[3].count == 0);
  CHECK(bins[4].count == 3);

  std::size_t total = 0;
  for (const HistogramBin& b : bins) total += b.count;
  CHECK(total == errors.size());
  for (std::size_t i = 1; i < bins.size(); ++i) {
    CHECK(bins[i].lo == bins[i - 1].hi);
  }

  CHECK(error_histogram(std::span<const double>{}, 0.1).empty());
  CHECK_THROWS_AS(error_histogram(errors, 0.0), std::invalid_argument);
}

TEST_CASE("comparison report renders csv and an aligned table") {
  std::vector<ReportRow> rows(2);
  rows[0].approach = "uv";
  rows[0].scenario = "all";
  rows[0].metrics = compute_metrics(std::array{2.0, 3.0, 4.0}, std::array{1.0, 2.0, 3.0});
  rows[1].approach = "hybrid_exp";
  rows[1].scenario = "all";
  rows[1].metrics = rows[0].metrics;

  const ComparisonReport rep = comparison_report(rows);
  CHECK(rep.csv.starts_with("approach,scenario,me,mae,mape,rmse,r2,mu,sigma,n\n"));
  CHECK(rep.csv.find("uv,all,1,1,61.1111,1,-0.5,-1,0,3") != std::string::npos);
  CHECK(rep.text.find("hybrid_exp") != std::string::npos);

  // duplicate labels are disambiguated deterministically
  std::vector<ReportRow> dupes(3, rows[0]);
  const ComparisonReport d = comparison_report(dupes);
  CHECK(d.csv.find("uv,all,") != std::string::npos);
  CHECK(d.csv.find("uv#2,all,") != std::string::npos);
  CHECK(d.csv.find("uv#3,all,") != std::string::npos);
}

}  // TEST_SUITE
