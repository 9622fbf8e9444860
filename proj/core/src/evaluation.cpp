#include "penbias/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace penbias {

namespace {

constexpr double kMapeFloor = 1e-6;  // |reference| below this is excluded from MAPE

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

MetricsReport compute_metrics(std::span<const double> predicted,
                              std::span<const double> reference) {
  if (predicted.size() != reference.size()) {
    throw std::invalid_argument("compute_metrics: size mismatch");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("compute_metrics: no samples");
  }

  const double n = static_cast<double>(predicted.size());
  MetricsReport m;
  m.n = predicted.size();

  double sum_err = 0.0, sum_abs = 0.0, sum_sq = 0.0;
  double sum_ref = 0.0;
  double mape_sum = 0.0;
  std::size_t mape_n = 0;

  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - reference[i];
    sum_err += e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
    sum_ref += reference[i];
    if (std::abs(reference[i]) >= kMapeFloor) {
      mape_sum += std::abs(e / reference[i]);
      ++mape_n;
    }
  }

  m.me = sum_err / n;
  m.mae = sum_abs / n;
  m.rmse = std::sqrt(sum_sq / n);
  m.mape_excluded = predicted.size() - mape_n;
  m.mape_percent = mape_n > 0 ? 100.0 * mape_sum / static_cast<double>(mape_n)
                              : std::numeric_limits<double>::quiet_NaN();

  const double ref_mean = sum_ref / n;
  double ss_tot = 0.0;
  for (const double r : reference) {
    ss_tot += (r - ref_mean) * (r - ref_mean);
  }
  m.r2 = ss_tot > 0.0 ? 1.0 - sum_sq / ss_tot
                      : std::numeric_limits<double>::quiet_NaN();

  // corrected-DEM error is reference - predicted, the negated residual
  m.mu = -m.me;
  double var = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = (reference[i] - predicted[i]) - m.mu;
    var += d * d;
  }
  m.sigma = std::sqrt(var / n);
  return m;
}

DemErrorStats dem_error_stats(std::span<const double> corrected,
                              std::span<const double> reference) {
  if (corrected.size() != reference.size()) {
    throw std::invalid_argument("dem_error_stats: size mismatch");
  }
  if (corrected.empty()) {
    throw std::invalid_argument("dem_error_stats: no samples");
  }
  const double n = static_cast<double>(corrected.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    mean += corrected[i] - reference[i];
  }
  mean /= n;
  double var = 0.0;
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    const double d = (corrected[i] - reference[i]) - mean;
    var += d * d;
  }
  return DemErrorStats{mean, std::sqrt(var / n)};
}

std::vector<ElevationBin> elevation_binned_errors(std::span<const PixelSample> samples,
                                                  std::span<const double> errors,
                                                  double bin_width) {
  if (samples.size() != errors.size()) {
    throw std::invalid_argument("elevation_binned_errors: size mismatch");
  }
  if (!(bin_width > 0.0)) {
    throw std::invalid_argument("elevation_binned_errors: bin_width must be > 0");
  }

  // two-pass per bin: mean then variance, keyed by floor(h_ref / width)
  std::map<long long, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const long long key = static_cast<long long>(std::floor(samples[i].h_ref / bin_width));
    auto& [sum, count] = sums[key];
    sum += errors[i];
    ++count;
  }

  std::map<long long, double> var_sums;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const long long key = static_cast<long long>(std::floor(samples[i].h_ref / bin_width));
    const auto& [sum, count] = sums[key];
    const double d = errors[i] - sum / static_cast<double>(count);
    var_sums[key] += d * d;
  }

  std::vector<ElevationBin> bins;
  bins.reserve(sums.size());
  for (const auto& [key, sc] : sums) {
    ElevationBin b;
    b.lo = static_cast<double>(key) * bin_width;
    b.hi = static_cast<double>(key + 1) * bin_width;
    b.n = sc.second;
    b.mu = sc.first / static_cast<double>(sc.second);
    b.sigma = std::sqrt(var_sums[key] / static_cast<double>(sc.second));
    bins.push_back(b);
  }
  return bins;
}

std::vector<HistogramBin> error_histogram(std::span<const double> errors, double bin_width) {
  if (!(bin_width > 0.0)) {
    throw std::invalid_argument("error_histogram: bin_width must be > 0");
  }
  if (errors.empty()) return {};

  const auto [mn_it, mx_it] = std::minmax_element(errors.begin(), errors.end());
  const long long first = static_cast<long long>(std::floor(*mn_it / bin_width));
  const long long last = static_cast<long long>(std::floor(*mx_it / bin_width));

  std::vector<HistogramBin> bins(static_cast<std::size_t>(last - first + 1));
  for (std::size_t i = 0; i < bins.size(); ++i) {
    // both edges from the integer index, so adjacent bins share the edge exactly
    bins[i].lo = static_cast<double>(first + static_cast<long long>(i)) * bin_width;
    bins[i].hi = static_cast<double>(first + static_cast<long long>(i) + 1) * bin_width;
  }
  for (const double e : errors) {
    long long key = static_cast<long long>(std::floor(e / bin_width)) - first;
    key = std::clamp<long long>(key, 0, static_cast<long long>(bins.size()) - 1);
    ++bins[static_cast<std::size_t>(key)].count;
  }
  return bins;
}

ComparisonReport comparison_report(std::span<const ReportRow> rows) {
  // deterministic de-duplication of repeated labels
  std::map<std::pair<std::string, std::string>, int> seen;
  std::vector<std::pair<std::string, std::string>> labels;
  labels.reserve(rows.size());
  for (const ReportRow& row : rows) {
    auto key = std::make_pair(row.approach, row.scenario);
    const int count = ++seen[key];
    if (count > 1) {
      key.first += "#" + std::to_string(count);
    }
    labels.push_back(std::move(key));
  }

  ComparisonReport out;
  out.csv = "approach,scenario,me,mae,mape,rmse,r2,mu,sigma,n\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MetricsReport& m = rows[i].metrics;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%zu\n",
                  labels[i].first.c_str(), labels[i].second.c_str(), m.me, m.mae,
                  m.mape_percent, m.rmse, m.r2, m.mu, m.sigma, m.n);
    out.csv += buf;
  }

  // aligned text table
  const char* headers[10] = {"approach", "scenario", "me",    "mae", "mape",
                             "rmse",     "r2",       "mu",    "sigma", "n"};
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MetricsReport& m = rows[i].metrics;
    cells.push_back({labels[i].first, labels[i].second, format_number(m.me),
                     format_number(m.mae), format_number(m.mape_percent),
                     format_number(m.rmse), format_number(m.r2), format_number(m.mu),
                     format_number(m.sigma), std::to_string(m.n)});
  }

  std::size_t widths[10];
  for (int c = 0; c < 10; ++c) {
    widths[c] = std::string(headers[c]).size();
    for (const auto& row : cells) {
      widths[c] = std::max(widths[c], row[static_cast<std::size_t>(c)].size());
    }
  }

  auto append_row = [&](const std::vector<std::string>& row) {
    for (int c = 0; c < 10; ++c) {
      const std::string& cell = row[static_cast<std::size_t>(c)];
      // labels left-aligned, numbers right-aligned
      if (c < 2) {
        out.text += cell + std::string(widths[c] - cell.size(), ' ');
      } else {
        out.text += std::string(widths[c] - cell.size(), ' ') + cell;
      }
      out.text += c == 9 ? "" : "  ";
    }
    out.text += '\n';
  };

  std::vector<std::string> header_row(headers, headers + 10);
  append_row(header_row);
  std::size_t total = 2 * 9;  // column separators
  for (std::size_t w : widths) total += w;
  out.text += std::string(total, '-') + '\n';
  for (const auto& row : cells) append_row(row);

  return out;
}

}  // namespace penbias
