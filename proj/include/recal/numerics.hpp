// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "recal/types.hpp"

namespace recal {

// Complementary error function.
double erfc(double x);

// Scaled complementary error function exp(x^2)*erfc(x), finite for large x.
double erfcx(double x);

// Exponential integral E1(y) for y > 0.
double expint_e1(double y);

// exp(y)*E1(y) for y > 0; stays finite as y grows.
double expint_e1_scaled(double y);

// Ei(x) for x < 0. Returns -inf when x is closer to 0 than the cutoff.
double exp_integral_ei(double x);

// exp(-x)*Ei(x) for x < 0.
double exp_integral_ei_scaled(double x);

// Bussgang gain of the v = 1 SSPA driven by a complex Gaussian,
// x = saturation amplitude / input rms.
double bussgang_mu(double x);

// d mu / dx.
double bussgang_mu_prime(double x);

// Distortion variance per unit |t|^2 at saturation a_sat and input rms sigma_x.
double bussgang_lambda(double a_sat, double sigma_x);

// Second-order small-signal expansion used by the large-IBO analysis:
// mu(1/x) ~ 1 - x^2.
inline double mu_inverse_expansion(double x) { return 1.0 - x * x; }

// Unnormalized sinc, sin(x)/x.
double sinc(double x);

}  // namespace recal
