#include "penbias/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace penbias {

ExponentialProfile make_exponential(double d_pen, double sigma_v0) {
  if (!(d_pen > 0.0)) {
    throw std::domain_error("make_exponential: d_pen must be > 0, got " +
                            std::to_string(d_pen));
  }
  if (!(sigma_v0 > 0.0)) {
    throw std::domain_error("make_exponential: sigma_v0 must be > 0, got " +
                            std::to_string(sigma_v0));
  }
  return ExponentialProfile{d_pen, sigma_v0};
}

WeibullProfile make_weibull(double lambda_w, double k_w) {
  if (!(lambda_w >= kWeibullScaleMin) || !(lambda_w <= kWeibullScaleMax)) {
    throw std::domain_error("make_weibull: lambda_w must be in [" +
                            std::to_string(kWeibullScaleMin) + ", " +
                            std::to_string(kWeibullScaleMax) + "], got " +
                            std::to_string(lambda_w));
  }
  if (!(k_w >= kWeibullShapeMin) || !(k_w <= kWeibullShapeMax)) {
    throw std::domain_error("make_weibull: k_w must be in [" +
                            std::to_string(kWeibullShapeMin) + ", " +
                            std::to_string(kWeibullShapeMax) + "], got " +
                            std::to_string(k_w));
  }
  return WeibullProfile{lambda_w, k_w};
}

double eval_exponential(const ExponentialProfile& p, double depth) {
  if (!(depth >= 0.0)) {
    throw std::domain_error("eval_exponential: depth must be >= 0, got " +
                            std::to_string(depth));
  }
  return p.sigma_v0 * std::exp(-2.0 * depth / p.d_pen);
}

double eval_weibull(const WeibullProfile& p, double depth) {
  if (!(depth >= 0.0)) {
    throw std::domain_error("eval_weibull: depth must be >= 0, got " +
                            std::to_string(depth));
  }
  if (depth == 0.0) {
    if (p.k_w < 1.0) {
      // (lambda t)^(k-1) diverges as t -> 0 for k < 1; the singularity is
      // integrable but the density itself has no value at 0
      throw std::domain_error("eval_weibull: density is singular at depth 0 for k_w < 1");
    }
    return p.k_w == 1.0 ? p.lambda_w : 0.0;
  }
  const double u = p.lambda_w * depth;
  return p.lambda_w * p.k_w * std::pow(u, p.k_w - 1.0) * std::exp(-std::pow(u, p.k_w));
}

AnyProfile clamp_params(ProfileKind kind, std::span<const double> raw) {
  if (kind == ProfileKind::Exponential) {
    if (raw.size() != 1) {
      throw std::invalid_argument("clamp_params: exponential takes 1 parameter, got " +
                                  std::to_string(raw.size()));
    }
    return ExponentialProfile{std::clamp(raw[0], kPenDepthMin, kPenDepthMax), 1.0};
  }
  if (raw.size() != 2) {
    throw std::invalid_argument("clamp_params: weibull takes 2 parameters, got " +
                                std::to_string(raw.size()));
  }
  return WeibullProfile{std::clamp(raw[0], kWeibullScaleMin, kWeibullScaleMax),
                        std::clamp(raw[1], kWeibullShapeMin, kWeibullShapeMax)};
}

}  // namespace penbias
