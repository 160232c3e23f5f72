// SPDX-License-Identifier: Apache-2.0
#include "recal/numerics.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace recal {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;
constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kTiny = 1e-300;

// erfcx for x >= 5 by the Laplace continued fraction, modified Lentz.
double erfcx_cf(double x) {
  double f = x;
  double c = x;
  double d = 0.0;
  for (int n = 1; n < 500; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = x + a / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (kSqrtPi * f);
}

// exp(y) E1(y) for y >= 1 (continued fraction, Lentz).
double e1_scaled_cf(double y) {
  double b = y + 1.0;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h;
}

double e1_series(double y) {
  double sum = 0.0;
  double term = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= -y / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return -kEulerGamma - std::log(y) - sum;
}

constexpr int kSeriesTerms = 18;

// mu(x) = sum_n (-1)^n (2n-1)!! (n+1) u^n with u = 1/(2x^2).
std::array<double, kSeriesTerms> mu_series_coeffs() {
  std::array<double, kSeriesTerms> a{};
  double dfact = 1.0;
  for (int n = 0; n < kSeriesTerms; ++n) {
    if (n > 0) dfact *= (2.0 * n - 1.0);
    a[n] = ((n % 2) ? -1.0 : 1.0) * dfact * (n + 1.0);
  }
  return a;
}

double mu_asymptotic(double x) {
  static const auto a = mu_series_coeffs();
  const double u = 0.5 / (x * x);
  double s = 0.0;
  for (int n = kSeriesTerms - 1; n >= 0; --n) s = s * u + a[n];
  return s;
}

double mu_prime_asymptotic(double x) {
  static const auto a = mu_series_coeffs();
  const double u = 0.5 / (x * x);
  double s = 0.0;
  for (int n = kSeriesTerms - 1; n >= 1; --n) s = s * u + a[n] * n;
  return -(2.0 / x) * s * u;
}

// lambda/sigma^2 as a power series in v = sigma^2/a_sat^2, for small v.
double lambda_ratio_asymptotic(double v) {
  static const auto coeffs = [] {
    std::array<double, kSeriesTerms> p{};
    double fact = 1.0;
    for (int j = 0; j < kSeriesTerms; ++j) {
      fact *= (j + 1.0);
      p[j] = ((j % 2) ? -1.0 : 1.0) * fact;
    }
    // mu as a series in v: coefficient a_n / 2^n.
    const auto a = mu_series_coeffs();
    std::array<double, kSeriesTerms> m{};
    for (int n = 0; n < kSeriesTerms; ++n) m[n] = a[n] / std::ldexp(1.0, n);
    std::array<double, kSeriesTerms> out{};
    for (int j = 0; j < kSeriesTerms; ++j) {
      double sq = 0.0;
      for (int i = 0; i <= j; ++i) sq += m[i] * m[j - i];
      out[j] = p[j] - sq;
    }
    return out;
  }();
  double s = 0.0;
  for (int j = kSeriesTerms - 1; j >= 0; --j) s = s * v + coeffs[j];
  return s;
}

}  // namespace

double erfc(double x) { return std::erfc(x); }

double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  return erfcx_cf(x);
}

double expint_e1(double y) {
  if (!(y > 0.0)) throw DomainError("expint_e1: y must be positive");
  if (y < 1.0) return e1_series(y);
  if (y > 745.0) return 0.0;
  return std::exp(-y) * e1_scaled_cf(y);
}

double expint_e1_scaled(double y) {
  if (!(y > 0.0)) throw DomainError("expint_e1_scaled: y must be positive");
  if (y < 1.0) return std::exp(y) * e1_series(y);
  return e1_scaled_cf(y);
}

double exp_integral_ei(double x) {
  if (!(x < 0.0)) throw DomainError("exp_integral_ei: x must be negative");
  if (-x < std::numeric_limits<double>::min())
    return -std::numeric_limits<double>::infinity();
  return -expint_e1(-x);
}

double exp_integral_ei_scaled(double x) {
  if (!(x < 0.0)) throw DomainError("exp_integral_ei_scaled: x must be negative");
  if (-x < std::numeric_limits<double>::min())
    return -std::numeric_limits<double>::infinity();
  return -expint_e1_scaled(-x);
}

double bussgang_mu(double x) {
  if (std::isnan(x) || x < 0.0) throw DomainError("bussgang_mu: x must be >= 0");
  if (std::isinf(x)) return 1.0;
  if (x >= 8.0) return mu_asymptotic(x);
  return 0.5 * x * (2.0 * x - kSqrtPi * erfcx(x) * (2.0 * x * x - 1.0));
}

double bussgang_mu_prime(double x) {
  if (std::isnan(x) || x < 0.0) throw DomainError("bussgang_mu_prime: x must be >= 0");
  if (std::isinf(x)) return 0.0;
  if (x >= 8.0) return mu_prime_asymptotic(x);
  const double x2 = x * x;
  return 2.0 * x - 0.5 * kSqrtPi * (4.0 * x2 * x2 + 4.0 * x2 - 1.0) * erfcx(x) +
         (2.0 * x2 * x - x);
}

double bussgang_lambda(double a_sat, double sigma_x) {
  if (!(a_sat > 0.0) || !(sigma_x > 0.0))
    throw DomainError("bussgang_lambda: arguments must be positive");
  const double s2 = sigma_x * sigma_x;
  if (std::isinf(a_sat)) return 0.0;
  const double y = (a_sat * a_sat) / s2;
  double ratio;
  if (y >= 100.0) {
    ratio = lambda_ratio_asymptotic(1.0 / y);
  } else {
    const double mu = bussgang_mu(std::sqrt(y));
    ratio = y - y * y * expint_e1_scaled(y) - mu * mu;
  }
  return std::max(0.0, s2 * ratio);
}

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace recal
