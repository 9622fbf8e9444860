#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "penbias/errors.hpp"

namespace penbias {

struct QuadOptions {
  double rel_tol = 1e-9;
  int max_subdivisions = 200;  // extra panel bisections beyond the seed panels
};

struct QuadResult {
  std::complex<double> value{};
  double error_estimate = 0.0;  // absolute, summed over panels
  double resabs = 0.0;          // integral of |f|, for scale-aware tolerances
  int panels = 0;
};

namespace detail {

// 15-point Kronrod extension of 7-point Gauss on [-1, 1].
// Standard published abscissae/weights; nodes are symmetric, only the
// non-negative half is stored.
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGk15Weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

// Gauss-7 weights aligned with the odd Kronrod nodes (indices 1,3,5,7).
inline constexpr double kGauss7Weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  std::complex<double> value;
  double error;
  double resabs;

  // worst error first; ties broken on the interval start so the refinement
  // order never depends on heap internals
  bool operator<(const Panel& o) const {
    if (error != o.error) return error < o.error;
    return a < o.a;
  }
};

template <typename F>
Panel eval_panel(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);

  std::complex<double> kronrod{0.0, 0.0};
  std::complex<double> gauss{0.0, 0.0};
  double resabs = 0.0;

  for (int i = 0; i < 8; ++i) {
    const double dx = half * kGk15Nodes[i];
    if (i == 7) {
      const std::complex<double> fc = f(mid);
      kronrod += kGk15Weights[7] * fc;
      gauss += kGauss7Weights[3] * fc;
      resabs += kGk15Weights[7] * std::abs(fc);
      break;
    }
    const std::complex<double> flo = f(mid - dx);
    const std::complex<double> fhi = f(mid + dx);
    kronrod += kGk15Weights[i] * (flo + fhi);
    resabs += kGk15Weights[i] * (std::abs(flo) + std::abs(fhi));
    if (i % 2 == 1) {
      gauss += kGauss7Weights[i / 2] * (flo + fhi);
    }
  }

  return Panel{a, b, kronrod * half, std::abs(kronrod - gauss) * std::abs(half),
               resabs * std::abs(half)};
}

}  // namespace detail

// Adaptive Gauss-Kronrod over a pre-split interval. `breakpoints` must be
// sorted and have at least two entries; the seed panels let callers cap
// oscillatory integrands at a fraction of a period per panel so the G7/K15
// error estimate is trustworthy from the first pass.
// Throws QuadratureError if the tolerance is unreachable within the
// subdivision budget.
template <typename F>
QuadResult integrate_adaptive(F&& f, std::span<const double> breakpoints,
                              const QuadOptions& opts = {}) {
  if (breakpoints.size() < 2) {
    throw QuadratureError("integrate_adaptive: need at least 2 breakpoints");
  }
  if (!(opts.rel_tol > 0.0)) {
    throw QuadratureError("integrate_adaptive: rel_tol must be > 0");
  }

  std::priority_queue<detail::Panel> queue;
  std::complex<double> total{0.0, 0.0};
  double total_err = 0.0;
  double total_resabs = 0.0;

  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (!(breakpoints[i] < breakpoints[i + 1])) {
      throw QuadratureError("integrate_adaptive: breakpoints must be strictly increasing");
    }
    detail::Panel p = detail::eval_panel(f, breakpoints[i], breakpoints[i + 1]);
    total += p.value;
    total_err += p.error;
    total_resabs += p.resabs;
    queue.push(p);
  }

  const double span = breakpoints.back() - breakpoints.front();
  const double min_width = 1e-14 * span;

  int subdivisions = 0;
  auto tolerance = [&] {
    // never chase error below the rounding floor of the |f| mass
    return std::max(opts.rel_tol * std::abs(total), 50.0 * 1e-16 * total_resabs);
  };

  while (total_err > tolerance()) {
    if (subdivisions >= opts.max_subdivisions) {
      throw QuadratureError(
          "integrate_adaptive: tolerance " + std::to_string(opts.rel_tol) +
          " not reached after " + std::to_string(subdivisions) +
          " subdivisions (err=" + std::to_string(total_err) + ")");
    }
    detail::Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (worst.b - worst.a < min_width || mid <= worst.a || mid >= worst.b) {
      throw QuadratureError(
          "integrate_adaptive: panel shrank to rounding width near t=" +
          std::to_string(worst.a) + " without meeting tolerance");
    }
    total -= worst.value;
    total_err -= worst.error;
    total_resabs -= worst.resabs;

    detail::Panel left = detail::eval_panel(f, worst.a, mid);
    detail::Panel right = detail::eval_panel(f, mid, worst.b);
    total += left.value + right.value;
    total_err += left.error + right.error;
    total_resabs += left.resabs + right.resabs;
    queue.push(left);
    queue.push(right);
    ++subdivisions;
  }

  return QuadResult{total, total_err, total_resabs,
                    static_cast<int>(breakpoints.size()) - 1 + subdivisions};
}

}  // namespace penbias
