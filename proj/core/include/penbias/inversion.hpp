#pragma once

namespace penbias {

// Training-free bias estimate from coherence magnitude alone, assuming an
// exponential profile: the magnitude pins kz*d_pen/2 and the corresponding
// phase is -atan of it, so
//   bias = -atan(sqrt(1 / gamma_mag^2 - 1)) / kz   (<= 0 always)
// Exact when the scene truly is exponential; a fixed-profile approximation
// otherwise. Requires gamma_mag in (0, 1] and kz > 0.
double uv_bias(double gamma_mag, double kz);

// Corrected surface elevation: h_corrected = h_insar - bias_estimate.
// Biases are negative, so the correction moves the surface up.
double correct_elevation(double h_insar, double bias_estimate);

}  // namespace penbias
