// Slow, independent reference implementations the unit tests compare the
// library against. Nothing here shares code with the library's numerics.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace testing_oracles {

// scale-aware distance: relative for large values, absolute below 1
inline double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

inline double rel_diff(std::complex<double> a, std::complex<double> b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

// Volume coherence by brute-force midpoint Riemann sums with Kahan
// compensation: gamma = int g(t) e^{-i kz t} dt / int g(t) dt over [0, t_max].
// O(n) and deliberately naive; n around 2e6 gives ~1e-9 on smooth profiles.
inline std::complex<double> gamma_riemann(const std::function<double(double)>& g,
                                          double kz, double t_max, std::size_t n) {
  std::complex<double> num(0.0, 0.0);
  double den = 0.0;
  std::complex<double> num_c(0.0, 0.0);
  double den_c = 0.0;
  const double h = t_max / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * h;
    const double gt = g(t);
    const std::complex<double> term =
        gt * std::complex<double>(std::cos(kz * t), -std::sin(kz * t));

    const std::complex<double> y = term - num_c;
    const std::complex<double> s = num + y;
    num_c = (s - num) - y;
    num = s;

    const double yd = gt - den_c;
    const double sd = den + yd;
    den_c = (sd - den) - yd;
    den = sd;
  }
  return num / den;
}

// symmetric difference quotient with the usual cube-root step heuristic
inline double central_diff(const std::function<double(double)>& f, double x,
                           double step = 0.0) {
  const double h = step > 0.0 ? step : std::cbrt(2.2e-16) * std::max(1.0, std::abs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace testing_oracles
