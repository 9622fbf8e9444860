#pragma once

namespace penbias {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// One acquisition's interferometric parameters. kz and hoa are stored
// redundantly for convenience; make_geometry keeps kz * hoa == 2*pi.
struct AcquisitionGeometry {
  double wavelength;       // m
  double incidence_angle;  // rad, in (0, pi/2)
  double delta_incidence;  // rad, > 0 (small look-angle spread)
  double kz;               // vertical wavenumber, rad/m
  double hoa;              // height of ambiguity 2*pi / kz, m
};

// kz = (4*pi / wavelength) * delta_incidence / sin(incidence_angle)
double compute_kz(double wavelength, double incidence_angle, double delta_incidence);

double kz_to_hoa(double kz);
double hoa_to_kz(double hoa);

AcquisitionGeometry make_geometry(double wavelength, double incidence_angle,
                                  double delta_incidence);

}  // namespace penbias
