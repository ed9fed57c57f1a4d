#pragma once

// Exact PG(1, z) draws by the alternating-series method of Polson, Scott and
// Windle (2013): a truncated exponential / truncated inverse-Gaussian
// proposal on J*(1, z/2), accepted by Devroye's series test.

#include <cmath>
#include <numbers>

#include "micmix/stats.hpp"

namespace micmix
{

namespace detail
{

inline constexpr double kPgTrunc = 0.64;

// n-th coefficient of the alternating series for J*(1, 0).
inline double pg_series_coef(int n, double x)
{
  const double k = (n + 0.5) * std::numbers::pi;
  if (x > kPgTrunc)
    return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0)
    return 0.0;
  const double expnt = -1.5 * (std::log(0.5 * std::numbers::pi) + std::log(x)) + std::log(k) -
                       2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// Probability of the truncated-exponential branch of the proposal.
inline double pg_mass_texpon(double z)
{
  const double t = kPgTrunc;
  const double fz = 0.125 * std::numbers::pi * std::numbers::pi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_normal_cdf(b);
  const double xa = x0 + z + log_normal_cdf(a);
  const double q_over_p = 4.0 / std::numbers::pi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian IG(1/z, 1) truncated to (0, kPgTrunc).
inline double pg_truncated_inverse_gaussian(double z, Rng &rng)
{
  const double t = kPgTrunc;
  double x = t + 1.0;
  if (1.0 / t > z)
  {
    double alpha = 0.0;
    while (uniform01(rng) > alpha)
    {
      double e1 = exponential1(rng), e2 = exponential1(rng);
      while (e1 * e1 > 2.0 * e2 / t)
      {
        e1 = exponential1(rng);
        e2 = exponential1(rng);
      }
      x = 1.0 + e1 * t;
      x = t / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
  }
  else
  {
    const double mu = 1.0 / z;
    while (x > t)
    {
      double y = std_normal(rng);
      y *= y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (uniform01(rng) > mu / (mu + x))
        x = mu * mu / x;
    }
  }
  return x;
}

} // namespace detail

inline double polya_gamma_1(double z, Rng &rng)
{
  z = 0.5 * std::abs(z);
  const double fz = 0.125 * std::numbers::pi * std::numbers::pi + 0.5 * z * z;
  const double p_exp = detail::pg_mass_texpon(z);
  for (;;)
  {
    double x;
    if (uniform01(rng) < p_exp)
      x = detail::kPgTrunc + exponential1(rng) / fz;
    else
      x = detail::pg_truncated_inverse_gaussian(z, rng);
    double s = detail::pg_series_coef(0, x);
    const double y = uniform01(rng) * s;
    for (int n = 1;; ++n)
    {
      if (n % 2 == 1)
      {
        s -= detail::pg_series_coef(n, x);
        if (y <= s)
          return 0.25 * x;
      }
      else
      {
        s += detail::pg_series_coef(n, x);
        if (y > s)
          break;
      }
    }
  }
}

// E[PG(1, z)] = tanh(z / 2) / (2 z), with the z -> 0 limit 1/4.
inline double polya_gamma_1_mean(double z)
{
  if (std::abs(z) < 1e-8)
    return 0.25;
  return std::tanh(0.5 * z) / (2.0 * z);
}

} // namespace micmix
