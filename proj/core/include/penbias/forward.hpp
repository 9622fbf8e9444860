#pragma once

#include <functional>

#include "penbias/profiles.hpp"

namespace penbias {

// Interferometric volume coherence: magnitude in [0, 1], phase in (-pi, pi]
// radians. With the surface at z0 = 0 the phase of a buried-volume return is
// always <= 0 (the phase center sits below the surface).
struct VolumeCoherence {
  double magnitude;
  double phase;
};

struct ForwardOptions {
  double surface_height_z0 = 0.0;   // m, adds kz * z0 to the phase
  double quad_rel_tol = 1e-9;       // in (0, 1e-3]
  int quad_max_subdivisions = 200;  // >= 10
};

// Closed form. gamma = exp(j kz z0) / (1 + j kz d_pen / 2):
//   magnitude = 1 / sqrt(1 + (kz d_pen / 2)^2)
//   phase     = kz z0 - atan(kz d_pen / 2)
VolumeCoherence gamma_vol_exponential(const ExponentialProfile& p, double kz,
                                      const ForwardOptions& opts = {});

// Numerical, via the depth substitution u = (lambda_w t)^k_w which turns the
// coherence integral into int_0^inf exp(-u - j c u^p) du with c = kz/lambda_w
// and p = 1/k_w, removing the k_w < 1 endpoint singularity. Accurate to
// quad_rel_tol relative.
VolumeCoherence gamma_vol_weibull(const WeibullProfile& p, double kz,
                                  const ForwardOptions& opts = {});

// Same evaluation without the box-constraint check on (lambda_w, k_w); used
// for finite-difference probes that step just outside the box. Requires
// lambda_w > 0 and k_w in (0.5, 4) where the rotated contour stays valid.
VolumeCoherence gamma_vol_weibull_params(double lambda_w, double k_w, double kz,
                                         const ForwardOptions& opts = {});

// Coherence plus analytic derivatives of the penetration bias with respect
// to the Weibull parameters, accumulated on the same quadrature panels as
// the value. Used by the training loop, where finite differencing the
// integral would cost five evaluations per sample.
struct WeibullBiasGradient {
  VolumeCoherence coherence;
  double dbias_dlambda;  // m per (1/m)
  double dbias_dk;       // m per unit shape
};

WeibullBiasGradient gamma_vol_weibull_grad(double lambda_w, double k_w, double kz,
                                           const ForwardOptions& opts = {});

using ProfileFn = std::function<double(double)>;

// Generic route for arbitrary profiles f(t) >= 0 over depth t in [0, inf):
//   gamma = exp(j kz z0) * int f(t) exp(-j kz t) dt / int f(t) dt
// The effective support is found by growing the upper limit until the
// appended |f| mass falls below 1e-10 of the total while decreasing;
// profiles whose tail mass fails to decay raise QuadratureError. Oscillation
// is controlled by capping seed panels at half a fringe period pi/kz.
VolumeCoherence gamma_vol_numeric(const ProfileFn& profile, double kz,
                                  const ForwardOptions& opts = {});

// Penetration bias in metres: phase / kz. Negative bias means the apparent
// surface sits below the true one.
double phase_to_bias(const VolumeCoherence& coherence, double kz);

}  // namespace penbias
