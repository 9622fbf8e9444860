#include "penbias/inversion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace penbias {

double uv_bias(double gamma_mag, double kz) {
  if (!(gamma_mag > 0.0) || !(gamma_mag <= 1.0)) {
    throw std::domain_error("uv_bias: coherence magnitude must be in (0, 1], got " +
                            std::to_string(gamma_mag));
  }
  if (!(kz > 0.0)) {
    throw std::domain_error("uv_bias: kz must be > 0, got " + std::to_string(kz));
  }
  // max() absorbs rounding when gamma_mag is within one ulp of 1
  const double t = std::sqrt(std::max(0.0, 1.0 / (gamma_mag * gamma_mag) - 1.0));
  return -std::atan(t) / kz;
}

double correct_elevation(double h_insar, double bias_estimate) {
  return h_insar - bias_estimate;
}

}  // namespace penbias
