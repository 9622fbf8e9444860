#pragma once

#include <span>
#include <variant>

namespace penbias {

// Box constraints applied whenever a model emits profile parameters.
inline constexpr double kPenDepthMin = 0.1;   // m
inline constexpr double kPenDepthMax = 20.0;  // m

inline constexpr double kWeibullScaleMin = 0.01;  // 1/m
inline constexpr double kWeibullScaleMax = 0.6;   // 1/m
inline constexpr double kWeibullShapeMin = 0.8;
inline constexpr double kWeibullShapeMax = 1.5;

enum class ProfileKind { Exponential, Weibull };

// Two-way power decay sigma_v0 * exp(-2 t / d_pen) against depth t >= 0.
// The factor 2 accounts for the two-way travel path of the wave.
struct ExponentialProfile {
  double d_pen;           // one-way penetration depth, m, > 0
  double sigma_v0 = 1.0;  // surface scattering amplitude; cancels in the
                          // normalized coherence ratio, kept for grids/plots
};

// Weibull probability density over depth, integrates to 1:
//   f(t) = lambda_w * k_w * (lambda_w t)^(k_w - 1) * exp(-(lambda_w t)^k_w)
// k_w == 1 reduces to the exponential shape; k_w < 1 has an integrable
// singularity at t == 0.
struct WeibullProfile {
  double lambda_w;  // scale, 1/m
  double k_w;       // shape
};

ExponentialProfile make_exponential(double d_pen, double sigma_v0 = 1.0);

// Enforces the box constraints above; reject values outside them.
WeibullProfile make_weibull(double lambda_w, double k_w);

double eval_exponential(const ExponentialProfile& p, double depth);
double eval_weibull(const WeibullProfile& p, double depth);

using AnyProfile = std::variant<ExponentialProfile, WeibullProfile>;

// Clamp raw parameters into the valid box and build the profile.
// Expects 1 value for Exponential (d_pen), 2 for Weibull (lambda_w, k_w).
AnyProfile clamp_params(ProfileKind kind, std::span<const double> raw);

}  // namespace penbias
