#include "penbias/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace penbias {

double compute_kz(double wavelength, double incidence_angle, double delta_incidence) {
  if (!(wavelength > 0.0)) {
    throw std::domain_error("compute_kz: wavelength must be > 0, got " +
                            std::to_string(wavelength));
  }
  if (!(incidence_angle > 0.0) || !(incidence_angle < kPi / 2.0)) {
    throw std::domain_error("compute_kz: incidence angle must be in (0, pi/2) rad, got " +
                            std::to_string(incidence_angle));
  }
  if (!(delta_incidence > 0.0)) {
    throw std::domain_error("compute_kz: delta incidence must be > 0, got " +
                            std::to_string(delta_incidence));
  }
  return 4.0 * kPi / wavelength * delta_incidence / std::sin(incidence_angle);
}

double kz_to_hoa(double kz) {
  if (!(kz > 0.0)) {
    throw std::domain_error("kz_to_hoa: kz must be > 0, got " + std::to_string(kz));
  }
  return 2.0 * kPi / kz;
}

double hoa_to_kz(double hoa) {
  if (!(hoa > 0.0)) {
    throw std::domain_error("hoa_to_kz: height of ambiguity must be > 0, got " +
                            std::to_string(hoa));
  }
  return 2.0 * kPi / hoa;
}

AcquisitionGeometry make_geometry(double wavelength, double incidence_angle,
                                  double delta_incidence) {
  const double kz = compute_kz(wavelength, incidence_angle, delta_incidence);
  return AcquisitionGeometry{wavelength, incidence_angle, delta_incidence, kz, kz_to_hoa(kz)};
}

}  // namespace penbias
