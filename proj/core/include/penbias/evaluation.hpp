#pragma once

#include <span>
#include <string>
#include <vector>

#include "penbias/dataset.hpp"

namespace penbias {

// Regression metrics of predicted vs reference bias plus the population
// mean/std of the corrected-DEM error (reference - predicted). MAPE excludes
// references with |y| < 1e-6 m and reports how many were dropped.
struct MetricsReport {
  double me = 0.0;            // mean error, m
  double mae = 0.0;           // mean absolute error, m
  double mape_percent = 0.0;  // NaN when every reference was excluded
  double rmse = 0.0;          // m
  double r2 = 0.0;            // 1 - SS_res / SS_tot; NaN for constant references
  double mu = 0.0;            // mean corrected-DEM error, m
  double sigma = 0.0;         // std of corrected-DEM error (population), m
  std::size_t n = 0;
  std::size_t mape_excluded = 0;
};

MetricsReport compute_metrics(std::span<const double> predicted,
                              std::span<const double> reference);

// population mean/std of (corrected - reference) elevations
struct DemErrorStats {
  double mu = 0.0;
  double sigma = 0.0;
};

DemErrorStats dem_error_stats(std::span<const double> corrected,
                              std::span<const double> reference);

// residual statistics bucketed by reference elevation; empty bins are omitted
struct ElevationBin {
  double lo = 0.0, hi = 0.0;  // bin edges, m
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t n = 0;
};

std::vector<ElevationBin> elevation_binned_errors(std::span<const PixelSample> samples,
                                                  std::span<const double> errors,
                                                  double bin_width);

// fixed-width histogram over [floor(min/w)*w, ...]; empty interior bins kept
// so the shape plots correctly
struct HistogramBin {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
};

std::vector<HistogramBin> error_histogram(std::span<const double> errors, double bin_width);

// one approach/scenario row of the comparison table
struct ReportRow {
  std::string approach;
  std::string scenario;
  MetricsReport metrics;
};

struct ComparisonReport {
  std::string csv;   // approach,scenario,me,mae,mape,rmse,r2,mu,sigma,n
  std::string text;  // aligned table for the terminal
};

// Rows keep their input order; duplicate (approach, scenario) labels are
// suffixed "#2", "#3", ... deterministically.
ComparisonReport comparison_report(std::span<const ReportRow> rows);

}  // namespace penbias
