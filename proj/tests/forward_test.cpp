#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>

#include "penbias/errors.hpp"
#include "penbias/forward.hpp"
#include "penbias/geometry.hpp"
#include "penbias/profiles.hpp"
#include "support/oracles.hpp"

using namespace penbias;
using testing_oracles::gamma_riemann;
using testing_oracles::rel_diff;

namespace {

std::complex<double> as_complex(const VolumeCoherence& c) {
  return std::polar(c.magnitude, c.phase);
}

}  // namespace

TEST_SUITE("forward") {

TEST_CASE("exponential closed form at the reference point") {
  // d_pen = 5 m, kz = 0.1 rad/m: gamma = 1 / (1 + 0.25 j)
  const VolumeCoherence g = gamma_vol_exponential(make_exponential(5.0), 0.1);
  CHECK(rel_diff(g.magnitude, 0.97014250014533189408) < 1e-15);
  CHECK(rel_diff(g.phase, -0.24497866312686415417) < 1e-15);
  CHECK(rel_diff(phase_to_bias(g, 0.1), -2.4497866312686415417) < 1e-15);
}

TEST_CASE("surface height shifts the phase, never the magnitude") {
  const ExponentialProfile p = make_exponential(5.0);
  const VolumeCoherence base = gamma_vol_exponential(p, 0.1);
  ForwardOptions opts;
  opts.surface_height_z0 = 3.0;
  const VolumeCoherence lifted = gamma_vol_exponential(p, 0.1, opts);
  CHECK(lifted.magnitude == base.magnitude);
  CHECK(rel_diff(lifted.phase, base.phase + 0.1 * 3.0) < 1e-14);
}

TEST_CASE("phase stays wrapped into (-pi, pi]") {
  const ExponentialProfile p = make_exponential(5.0);
  for (const double z0 : {-500.0, -40.0, 37.5, 400.0, 12345.0}) {
    ForwardOptions opts;
    opts.surface_height_z0 = z0;
    const VolumeCoherence g = gamma_vol_exponential(p, 0.31, opts);
    CHECK(g.phase > -kPi);
    CHECK(g.phase <= kPi);
  }
}

TEST_CASE("small-kz limit approaches half the penetration depth") {
  // series: bias = -d/2 + kz^2 d^3 / 24 + O(kz^4)
  const VolumeCoherence g = gamma_vol_exponential(make_exponential(5.0), 1e-4);
  CHECK(rel_diff(phase_to_bias(g, 1e-4), -2.49999994791667) < 1e-12);

  for (const double d : {0.5, 2.0, 8.0, 19.0}) {
    const double bias = phase_to_bias(gamma_vol_exponential(make_exponential(d), 1e-5), 1e-5);
    CHECK(std::abs(bias + d / 2.0) < 1e-8 * d);
  }
}

TEST_CASE("weibull coherence against an independent high-precision value") {
  // lambda_w = 0.05, k_w = 1.3, kz = 0.1; reference digits from a
  // multiprecision evaluation of the depth integral
  const VolumeCoherence g = gamma_vol_weibull(make_weibull(0.05, 1.3), 0.1);
  const std::complex<double> z = as_complex(g);
  CHECK(rel_diff(z.real(), 0.089884735014624407553) < 1e-9);
  CHECK(rel_diff(z.imag(), -0.47802544094327372169) < 1e-9);
  CHECK(rel_diff(g.magnitude, 0.48640270124420620819) < 1e-9);
  CHECK(rel_diff(g.phase, -1.3849331702468401298) < 1e-9);
}

TEST_CASE("weibull with k_w == 1 collapses to the exponential closed form") {
  for (const double lam : {0.05, 0.1, 0.25, 0.6}) {
    for (const double kz : {0.02, 0.1, 0.3, 0.5}) {
      const VolumeCoherence wb = gamma_vol_weibull(make_weibull(lam, 1.0), kz);
      const VolumeCoherence ex = gamma_vol_exponential(make_exponential(2.0 / lam), kz);
      CHECK(rel_diff(as_complex(wb), as_complex(ex)) < 1e-11);
    }
  }
}

TEST_CASE("weibull route agrees with the generic numeric route") {
  for (const auto& [lam, k] : {std::pair{0.05, 1.3}, {0.2, 1.5}, {0.5, 1.1}}) {
    for (const double kz : {0.05, 0.2, 0.45}) {
      const WeibullProfile p = make_weibull(lam, k);
      const VolumeCoherence direct = gamma_vol_weibull(p, kz);
      const VolumeCoherence generic =
          gamma_vol_numeric([&](double t) { return eval_weibull(p, t); }, kz);
      CHECK(rel_diff(as_complex(direct), as_complex(generic)) < 1e-8);
    }
  }
}

TEST_CASE("singular k_w < 1 profiles agree across the two routes") {
  // the generic route integrates through the t -> 0 singularity directly;
  // the dedicated route removes it by substitution
  for (const double kz : {0.05, 0.3}) {
    const WeibullProfile p = make_weibull(0.1, 0.8);
    const VolumeCoherence direct = gamma_vol_weibull(p, kz);
    const VolumeCoherence generic = gamma_vol_numeric(
        [&](double t) { return t == 0.0 ? 0.0 : eval_weibull(p, t); }, kz);
    CHECK(rel_diff(as_complex(direct), as_complex(generic)) < 1e-7);
  }
}

TEST_CASE("generic route matches a brute-force Riemann oracle") {
  // half-gaussian profile, not expressible by either dedicated route
  const auto gauss = [](double t) { return std::exp(-t * t / 18.0); };
  for (const double kz : {0.05, 0.2}) {
    const VolumeCoherence g = gamma_vol_numeric(gauss, kz);
    const std::complex<double> oracle = gamma_riemann(gauss, kz, 60.0, 4'000'000);
    CHECK(rel_diff(as_complex(g), oracle) < 1e-8);
  }
}

TEST_CASE("generic route handles a finite slab profile") {
  // uniform layer of thickness D: gamma = (1 - e^{-j kz D}) / (j kz D)
  const double D = 12.0;
  const double kz = 0.21;
  const auto slab = [D](double t) { return t <= D ? 1.0 : 0.0; };
  const std::complex<double> jkD(0.0, kz * D);
  const std::complex<double> expected = (1.0 - std::exp(-jkD)) / jkD;
  const VolumeCoherence g = gamma_vol_numeric(slab, kz);
  CHECK(rel_diff(as_complex(g), expected) < 1e-6);
}

TEST_CASE("weibull gradients match central finite differences") {
  for (const auto& [lam, k] : {std::pair{0.05, 1.3}, {0.1, 0.85}, {0.3, 1.45},
                               {0.55, 1.02}}) {
    for (const double kz : {0.05, 0.25}) {
      const WeibullBiasGradient g = gamma_vol_weibull_grad(lam, k, kz);

      const double h_lam = 1e-6 * lam;
      const double fd_lam =
          (phase_to_bias(gamma_vol_weibull_params(lam + h_lam, k, kz), kz) -
           phase_to_bias(gamma_vol_weibull_params(lam - h_lam, k, kz), kz)) /
          (2.0 * h_lam);
      CHECK(rel_diff(g.dbias_dlambda, fd_lam) < 1e-6);

      const double h_k = 1e-6 * k;
      const double fd_k =
          (phase_to_bias(gamma_vol_weibull_params(lam, k + h_k, kz), kz) -
           phase_to_bias(gamma_vol_weibull_params(lam, k - h_k, kz), kz)) /
          (2.0 * h_k);
      CHECK(rel_diff(g.dbias_dk, fd_k) < 1e-6);

      // the gradient carrier reproduces the plain evaluation
      const VolumeCoherence plain = gamma_vol_weibull_params(lam, k, kz);
      CHECK(rel_diff(g.coherence.magnitude, plain.magnitude) < 1e-12);
      CHECK(rel_diff(g.coherence.phase, plain.phase) < 1e-12);
    }
  }
}

TEST_CASE("deeper penetration always decorrelates more") {
  double prev_mag = 1.0;
  double prev_bias = 0.0;
  for (const double d : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const VolumeCoherence g = gamma_vol_exponential(make_exponential(d), 0.15);
    const double bias = phase_to_bias(g, 0.15);
    CHECK(g.magnitude < prev_mag);
    CHECK(bias < prev_bias);
    prev_mag = g.magnitude;
    prev_bias = bias;
  }
}

TEST_CASE("invalid forward inputs are rejected") {
  const ExponentialProfile p = make_exponential(5.0);
  CHECK_THROWS_AS(gamma_vol_exponential(p, 0.0), std::domain_error);
  CHECK_THROWS_AS(gamma_vol_exponential(p, -0.1), std::domain_error);

  CHECK_THROWS_AS(gamma_vol_weibull(WeibullProfile{0.0, 1.0}, 0.1), std::domain_error);
  CHECK_THROWS_AS(gamma_vol_weibull(WeibullProfile{0.1, 2.0}, 0.1), std::domain_error);
  CHECK_THROWS_AS(gamma_vol_weibull_params(0.1, 0.45, 0.1), std::domain_error);

  ForwardOptions bad;
  bad.quad_rel_tol = 0.0;
  CHECK_THROWS_AS(gamma_vol_exponential(p, 0.1, bad), std::invalid_argument);
  bad.quad_rel_tol = 1e-2;  // looser than the supported range
  CHECK_THROWS_AS(gamma_vol_weibull(make_weibull(0.1, 1.2), 0.1, bad),
                  std::invalid_argument);

  // a profile with non-decaying mass has no finite support
  CHECK_THROWS_AS(gamma_vol_numeric([](double) { return 1.0; }, 0.1), QuadratureError);
}

}  // TEST_SUITE
