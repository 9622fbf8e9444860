#include "penbias/forward.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <queue>
#include <string>
#include <vector>

#include "penbias/errors.hpp"
#include "penbias/geometry.hpp"
#include "penbias/quadrature.hpp"

namespace penbias {

namespace {

// wrap to (-pi, pi]
double wrap_pi(double x) {
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void validate_options(const ForwardOptions& opts) {
  if (!(opts.quad_rel_tol > 0.0) || !(opts.quad_rel_tol <= 1e-3)) {
    throw std::invalid_argument("ForwardOptions: quad_rel_tol must be in (0, 1e-3], got " +
                                std::to_string(opts.quad_rel_tol));
  }
  if (opts.quad_max_subdivisions < 10) {
    throw std::invalid_argument("ForwardOptions: quad_max_subdivisions must be >= 10, got " +
                                std::to_string(opts.quad_max_subdivisions));
  }
}

void validate_kz(double kz, const char* where) {
  if (!(kz > 0.0) || !std::isfinite(kz)) {
    throw std::domain_error(std::string(where) + ": kz must be finite and > 0, got " +
                            std::to_string(kz));
  }
}

// ---------------------------------------------------------------------------
// Weibull coherence on a rotated contour.
//
// Substituting u = (lambda_w t)^k_w into the coherence integral gives
//   I = int_0^inf exp(-u) exp(-j c u^p) du,  c = kz / lambda_w,  p = 1 / k_w,
// and gamma = exp(j kz z0) * I (the denominator integral is exactly 1).
// On the ray u = r exp(-j theta) with theta = pi/4 the integrand becomes
//   exp(-j theta) * exp(-(r cos t + c sin(p t) r^p) + j (r sin t - c cos(p t) r^p))
// which decays in both terms and carries a total phase variation bounded by
// a fixed multiple of the decay budget, independent of c. Validity requires
// p * theta < pi/2, i.e. k_w > 0.5.
// ---------------------------------------------------------------------------

constexpr double kTheta = kPi / 4.0;
constexpr double kDecayCut = 42.0;  // e-folds retained: exp(-42) ~ 6e-19

struct ContourTerms {
  double c, p;
  double ct, st;    // cos/sin of theta
  double cpt, spt;  // cos/sin of p*theta

  double decay(double r) const { return r * ct + c * spt * std::pow(r, p); }
  double decay_deriv(double r) const {
    return ct + c * spt * p * std::pow(r, p - 1.0);
  }
};

// radius where the integrand magnitude has fallen kDecayCut e-folds
double solve_decay_radius(const ContourTerms& t, double target) {
  // the smaller single-term root already has decay >= target, so Newton
  // walks down onto the true root from above
  double start = target / t.ct;
  if (t.c > 0.0) {
    start = std::min(start, std::pow(target / (t.c * t.spt), 1.0 / t.p));
  }
  double r = start;
  for (int i = 0; i < 48; ++i) {
    const double f = t.decay(r) - target;
    if (std::abs(f) <= 1e-9 * target) break;
    double next = r - f / t.decay_deriv(r);
    if (!(next > 0.0)) next = 0.5 * r;
    if (next > start) next = start;
    r = next;
  }
  return r;
}

// Seed panels bounding the per-panel variation of the integrand: at most ~5
// decay e-folds plus ~1.1*pi radians of each phase term, which keeps the
// G7/K15 estimate reliable so the adaptive pass only has to polish. Fine
// candidates come from each exponent term separately; a greedy merge then
// drops candidates that interleave without adding variation.
std::vector<double> contour_breakpoints(const ContourTerms& t, double r_max) {
  std::vector<double> cand;

  // quarter-period / 1.5-e-fold granularity per term
  const double linear_steps[2] = {0.5 * kPi / t.st, 1.5 / t.ct};
  for (double step : linear_steps) {
    for (double r = step; r < r_max; r += step) cand.push_back(r);
  }
  const double power_coefs[2] = {t.c * t.cpt, t.c * t.spt};
  const double power_steps[2] = {0.5 * kPi, 1.5};
  for (int fam = 0; fam < 2; ++fam) {
    if (power_coefs[fam] <= 0.0) continue;
    const double top = power_coefs[fam] * std::pow(r_max, t.p);
    const int count = static_cast<int>(top / power_steps[fam]);
    for (int n = 1; n <= count; ++n) {
      const double r = std::pow(n * power_steps[fam] / power_coefs[fam], 1.0 / t.p);
      if (r < r_max) cand.push_back(r);
    }
  }
  std::sort(cand.begin(), cand.end());

  std::vector<double> out{0.0};
  double last_rp = 0.0;
  double last_decay = 0.0;
  double last_r = 0.0;
  for (double r : cand) {
    if (r - last_r <= 1e-6 * r_max) continue;
    const double rp = std::pow(r, t.p);
    const double decay = r * t.ct + t.c * t.spt * rp;
    // |phase change| <= linear term + power term (each monotone)
    const double budget = (decay - last_decay) / 5.0 +
                          ((r - last_r) * t.st + t.c * t.cpt * (rp - last_rp)) / (1.1 * kPi);
    if (budget >= 1.0) {
      out.push_back(r);
      last_r = r;
      last_rp = rp;
      last_decay = decay;
    }
  }
  if (r_max - last_r > 1e-6 * r_max || out.size() == 1) {
    out.push_back(r_max);
  } else {
    out.back() = r_max;
  }
  return out;
}

struct ContourEval {
  std::complex<double> value{};
  std::complex<double> d_dc{};  // derivative of I w.r.t. c
  std::complex<double> d_dp{};  // derivative of I w.r.t. p
};

struct ContourPanel {
  double a, b;
  ContourEval sums;
  double error;  // |K15 - G7| on the value integral
  double resabs;

  bool operator<(const ContourPanel& o) const {
    if (error != o.error) return error < o.error;
    return a < o.a;
  }
};

template <bool WithGrad>
ContourPanel eval_contour_panel(const ContourTerms& t, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);

  ContourEval kron{};
  std::complex<double> gauss{};
  double resabs = 0.0;

  auto accumulate = [&](double r, double wk, double wg) {
    // r^p via exp(p log r): log r is reused by the gradient accumulators
    const double lr = std::log(r);
    const double rp = std::exp(t.p * lr);
    const double mag = std::exp(-(r * t.ct + t.c * t.spt * rp));
    const double ph = r * t.st - t.c * t.cpt * rp;
    double sp, cp;
    sincos(ph, &sp, &cp);
    const std::complex<double> g{mag * cp, mag * sp};
    kron.value += wk * g;
    gauss += wg * g;
    resabs += wk * mag;
    if constexpr (WithGrad) {
      // d/dc and d/dp of the exponent -j c (r e^{-j theta})^p
      const std::complex<double> upow{rp * t.cpt, -rp * t.spt};
      const std::complex<double> minus_j{0.0, -1.0};
      kron.d_dc += wk * minus_j * upow * g;
      kron.d_dp += wk * minus_j * t.c * upow * std::complex<double>{lr, -kTheta} * g;
    }
  };

  for (int i = 0; i < 8; ++i) {
    const double wg = (i % 2 == 1) ? detail::kGauss7Weights[i / 2]
                                   : (i == 7 ? detail::kGauss7Weights[3] : 0.0);
    if (i == 7) {
      accumulate(mid, detail::kGk15Weights[7], wg);
      break;
    }
    const double dx = half * detail::kGk15Nodes[i];
    accumulate(mid - dx, detail::kGk15Weights[i], wg);
    accumulate(mid + dx, detail::kGk15Weights[i], wg);
  }

  ContourPanel out;
  out.a = a;
  out.b = b;
  out.sums.value = kron.value * half;
  out.sums.d_dc = kron.d_dc * half;
  out.sums.d_dp = kron.d_dp * half;
  out.error = std::abs(kron.value - gauss) * half;
  out.resabs = resabs * half;
  return out;
}

template <bool WithGrad>
ContourEval integrate_contour(const ContourTerms& t, const QuadOptions& opts) {
  const double r_max = solve_decay_radius(t, kDecayCut);
  const std::vector<double> breaks = contour_breakpoints(t, r_max);

  std::priority_queue<ContourPanel> queue;
  ContourEval total{};
  double total_err = 0.0;
  double total_resabs = 0.0;

  auto add = [&](const ContourPanel& p) {
    total.value += p.sums.value;
    total.d_dc += p.sums.d_dc;
    total.d_dp += p.sums.d_dp;
    total_err += p.error;
    total_resabs += p.resabs;
    queue.push(p);
  };
  auto remove = [&](const ContourPanel& p) {
    total.value -= p.sums.value;
    total.d_dc -= p.sums.d_dc;
    total.d_dp -= p.sums.d_dp;
    total_err -= p.error;
    total_resabs -= p.resabs;
  };

  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    add(eval_contour_panel<WithGrad>(t, breaks[i], breaks[i + 1]));
  }

  int subdivisions = 0;
  const double min_width = 1e-14 * r_max;
  while (total_err > std::max(opts.rel_tol * std::abs(total.value),
                              50.0 * 1e-16 * total_resabs)) {
    if (subdivisions >= opts.max_subdivisions) {
      throw QuadratureError(
          "weibull coherence: tolerance not reached after " +
          std::to_string(subdivisions) + " subdivisions (c=" + std::to_string(t.c) +
          ", p=" + std::to_string(t.p) + ")");
    }
    ContourPanel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (worst.b - worst.a < min_width || mid <= worst.a || mid >= worst.b) {
      throw QuadratureError("weibull coherence: panel shrank to rounding width");
    }
    remove(worst);
    add(eval_contour_panel<WithGrad>(t, worst.a, mid));
    add(eval_contour_panel<WithGrad>(t, mid, worst.b));
    ++subdivisions;
  }

  // fold in the constant Jacobian exp(-j theta) of the contour parameterization
  const std::complex<double> jac{std::cos(kTheta), -std::sin(kTheta)};
  total.value *= jac;
  total.d_dc *= jac;
  total.d_dp *= jac;
  return total;
}

ContourTerms make_terms(double lambda_w, double k_w, double kz) {
  ContourTerms t;
  t.c = kz / lambda_w;
  t.p = 1.0 / k_w;
  t.ct = std::cos(kTheta);
  t.st = std::sin(kTheta);
  t.cpt = std::cos(t.p * kTheta);
  t.spt = std::sin(t.p * kTheta);
  return t;
}

void validate_raw_weibull(double lambda_w, double k_w) {
  if (!(lambda_w > 0.0)) {
    throw std::domain_error("weibull coherence: lambda_w must be > 0, got " +
                            std::to_string(lambda_w));
  }
  // p * theta < pi/2 requires k_w > 0.5; stay clear of the boundary
  if (!(k_w > 0.5) || !(k_w < 4.0)) {
    throw std::domain_error("weibull coherence: k_w must be in (0.5, 4), got " +
                            std::to_string(k_w));
  }
}

VolumeCoherence coherence_from(const std::complex<double>& ratio, double kz, double z0) {
  const double mag = std::min(std::abs(ratio), 1.0);
  const double phase = wrap_pi(std::arg(ratio) + kz * z0);
  return VolumeCoherence{mag, phase};
}

}  // namespace

VolumeCoherence gamma_vol_exponential(const ExponentialProfile& p, double kz,
                                      const ForwardOptions& opts) {
  validate_kz(kz, "gamma_vol_exponential");
  validate_options(opts);
  if (!(p.d_pen > 0.0)) {
    throw std::domain_error("gamma_vol_exponential: d_pen must be > 0, got " +
                            std::to_string(p.d_pen));
  }
  const double half_kd = 0.5 * kz * p.d_pen;
  const double mag = 1.0 / std::sqrt(1.0 + half_kd * half_kd);
  const double phase = wrap_pi(kz * opts.surface_height_z0 - std::atan(half_kd));
  return VolumeCoherence{mag, phase};
}

VolumeCoherence gamma_vol_weibull_params(double lambda_w, double k_w, double kz,
                                         const ForwardOptions& opts) {
  validate_kz(kz, "gamma_vol_weibull");
  validate_options(opts);
  validate_raw_weibull(lambda_w, k_w);
  const ContourTerms t = make_terms(lambda_w, k_w, kz);
  const QuadOptions q{opts.quad_rel_tol, opts.quad_max_subdivisions};
  const ContourEval eval = integrate_contour<false>(t, q);
  return coherence_from(eval.value, kz, opts.surface_height_z0);
}

VolumeCoherence gamma_vol_weibull(const WeibullProfile& p, double kz,
                                  const ForwardOptions& opts) {
  // reject aggregate-built profiles that bypassed make_weibull
  make_weibull(p.lambda_w, p.k_w);
  return gamma_vol_weibull_params(p.lambda_w, p.k_w, kz, opts);
}

WeibullBiasGradient gamma_vol_weibull_grad(double lambda_w, double k_w, double kz,
                                           const ForwardOptions& opts) {
  validate_kz(kz, "gamma_vol_weibull_grad");
  validate_options(opts);
  validate_raw_weibull(lambda_w, k_w);
  const ContourTerms t = make_terms(lambda_w, k_w, kz);
  const QuadOptions q{opts.quad_rel_tol, opts.quad_max_subdivisions};
  const ContourEval eval = integrate_contour<true>(t, q);

  // bias = (arg I + kz z0) / kz and d(arg I)/dx = Im(dI/dx / I);
  // chain through c = kz / lambda_w and p = 1 / k_w
  const std::complex<double> rel_dc = eval.d_dc / eval.value;
  const std::complex<double> rel_dp = eval.d_dp / eval.value;
  const double dbias_dlambda = -std::imag(rel_dc) / (lambda_w * lambda_w);
  const double dbias_dk = -std::imag(rel_dp) / (kz * k_w * k_w);

  WeibullBiasGradient out;
  out.coherence = coherence_from(eval.value, kz, opts.surface_height_z0);
  out.dbias_dlambda = dbias_dlambda;
  out.dbias_dk = dbias_dk;
  return out;
}

VolumeCoherence gamma_vol_numeric(const ProfileFn& profile, double kz,
                                  const ForwardOptions& opts) {
  validate_kz(kz, "gamma_vol_numeric");
  validate_options(opts);
  if (!profile) {
    throw std::invalid_argument("gamma_vol_numeric: profile function is empty");
  }

  auto abs_profile = [&](double x) {
    return std::complex<double>{std::abs(profile(x)), 0.0};
  };

  // Effective support scan: geometric chunks whose |f| mass must eventually
  // fall below 1e-10 of the running total while decreasing chunk to chunk.
  const QuadOptions mass_opts{1e-8, 80};
  std::vector<double> edges{0.0};
  double total_mass = 0.0;
  double prev_mass = 0.0;
  int flat_count = 0;
  bool converged = false;

  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 64; ++iter) {
    // quarter the chunk so narrow features inside it are seen by the seed rule
    const double w = hi - lo;
    const double seeds[5] = {lo, lo + 0.25 * w, lo + 0.5 * w, lo + 0.75 * w, hi};
    const double m = integrate_adaptive(abs_profile, seeds, mass_opts).value.real();
    edges.push_back(hi);
    total_mass += m;

    if (iter > 0) {
      if (m < 1e-10 * total_mass && m <= prev_mass) {
        converged = true;
        break;
      }
      if (iter >= 10 && m > 1e-6 * total_mass && m >= 0.999 * prev_mass) {
        if (++flat_count >= 3) {
          throw QuadratureError(
              "gamma_vol_numeric: tail mass is not decreasing (profile looks "
              "non-integrable over [0, inf))");
        }
      } else {
        flat_count = 0;
      }
    }
    prev_mass = m;
    lo = hi;
    hi *= 2.0;
  }
  if (!converged) {
    throw QuadratureError(
        "gamma_vol_numeric: no decaying tail found while growing the support "
        "out to t ~ 9.2e18; profile mass does not converge");
  }
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) {
    throw QuadratureError("gamma_vol_numeric: profile has zero or non-finite mass");
  }

  const double t_max = edges.back();

  // seed panels: support-scan edges, a quartered first chunk, and half-period
  // caps pi/kz for the oscillatory numerator
  std::vector<double> base{0.0, 0.25, 0.5, 0.75};
  for (double e : edges) {
    if (e > base.back()) base.push_back(e);
  }
  std::vector<double> osc = base;
  const double half_period = kPi / kz;
  const double n_half = t_max / half_period;
  if (n_half > 1e5) {
    throw QuadratureError(
        "gamma_vol_numeric: profile support spans " + std::to_string(n_half) +
        " fringe half-periods; the coherence is effectively zero and the "
        "integral is not resolvable at this tolerance");
  }
  for (double r = half_period; r < t_max; r += half_period) osc.push_back(r);
  std::sort(osc.begin(), osc.end());
  osc.erase(std::unique(osc.begin(), osc.end(),
                        [&](double a, double b) { return b - a < 1e-13 * t_max; }),
            osc.end());

  const QuadOptions q{opts.quad_rel_tol, opts.quad_max_subdivisions};
  auto complex_profile = [&](double x) {
    return std::complex<double>{profile(x), 0.0};
  };
  auto oscillatory = [&](double x) {
    const double ph = -kz * x;
    return profile(x) * std::complex<double>{std::cos(ph), std::sin(ph)};
  };

  const std::complex<double> den = integrate_adaptive(complex_profile, base, q).value;
  if (!(den.real() > 0.0) || !std::isfinite(den.real())) {
    throw QuadratureError("gamma_vol_numeric: profile integral is not positive");
  }
  const std::complex<double> num = integrate_adaptive(oscillatory, osc, q).value;

  return coherence_from(num / den.real(), kz, opts.surface_height_z0);
}

double phase_to_bias(const VolumeCoherence& coherence, double kz) {
  validate_kz(kz, "phase_to_bias");
  return coherence.phase / kz;
}

}  // namespace penbias
