#pragma once

// Scalar distribution helpers shared by the samplers: Gaussian tails in
// log space, truncated-normal draws, gamma/Dirichlet/categorical draws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "micmix/error.hpp"

namespace micmix
{

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One independent stream per (seed, stream) pair, e.g. per chain.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng &rng)
{
  // (0,1): never returns exactly zero so logs and inverse CDFs stay finite.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_normal(Rng &rng)
{
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

inline double exponential1(Rng &rng) { return -std::log(uniform01(rng)); }

inline double gamma_draw(double shape, double rate, Rng &rng)
{
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

inline double beta_draw(double a, double b, Rng &rng)
{
  const double x = gamma_draw(a, 1.0, rng);
  const double y = gamma_draw(b, 1.0, rng);
  return x / (x + y);
}

inline std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng &rng)
{
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k)
  {
    out[k] = gamma_draw(alpha[k], 1.0, rng);
    total += out[k];
  }
  if (!(total > 0.0))
  {
    // All gammas underflowed (tiny concentrations); fall back to a vertex.
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> logs(alpha.size());
    std::size_t best = 0;
    for (std::size_t k = 0; k < alpha.size(); ++k)
    {
      logs[k] = std::log(uniform01(rng)) / alpha[k];
      if (logs[k] > logs[best])
        best = k;
    }
    out[best] = 1.0;
    return out;
  }
  for (auto &v : out)
    v /= total;
  return out;
}

// ---------------------------------------------------------------------------
// Standard normal

inline double normal_pdf(double x)
{
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double log_normal_pdf(double x, double mu, double sigma)
{
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x)
{
  if (x == -kInf)
    return 0.0;
  if (x == kInf)
    return 1.0;
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Upper tail 1 - Phi(x), accurate for large x.
inline double normal_ccdf(double x) { return normal_cdf(-x); }

// log(1 - Phi(x)); switches to the asymptotic series once erfc underflows.
inline double log_normal_ccdf(double x)
{
  if (x == kInf)
    return -kInf;
  if (x < 30.0)
    return std::log(normal_ccdf(x));
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

inline double log_normal_cdf(double x) { return log_normal_ccdf(-x); }

inline double normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0))
  {
    if (p == 0.0)
      return -kInf;
    if (p == 1.0)
      return kInf;
    throw std::domain_error("normal_quantile: p outside [0,1]");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Inverse of the upper tail: x with 1 - Phi(x) = q.
inline double normal_ccdf_inverse(double q) { return -normal_quantile(q); }

// log(Phi(b) - Phi(a)) for standardized bounds a < b, without cancellation.
inline double log_normal_interval(double a, double b)
{
  if (!(a < b))
    return -kInf;
  if (a >= 0.0)
  {
    const double la = log_normal_ccdf(a);
    const double lb = log_normal_ccdf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0)
  {
    const double la = log_normal_cdf(a);
    const double lb = log_normal_cdf(b);
    return lb + std::log1p(-std::exp(la - lb));
  }
  // Straddles zero: both tails are at most one half, the difference is >= their gap.
  return std::log1p(-normal_cdf(a) - normal_ccdf(b));
}

// ---------------------------------------------------------------------------
// Truncated normal

namespace detail
{

inline constexpr double kTailSwitch = 6.0;

// Draw from N(0,1) restricted to [a, b) with a >= kTailSwitch.
inline double upper_tail_normal(double a, double b, Rng &rng)
{
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  const double width = b - a;
  if (rate * width < 1.0)
  {
    // Narrow cell far in the tail: uniform proposal on the cell.
    for (;;)
    {
      const double z = a + width * uniform01(rng);
      if (std::log(uniform01(rng)) <= -0.5 * (z * z - a * a))
        return z;
    }
  }
  for (;;)
  {
    const double z = a + exponential1(rng) / rate;
    if (z >= b)
      continue;
    const double d = z - rate;
    if (std::log(uniform01(rng)) <= -0.5 * d * d)
      return z;
  }
}

} // namespace detail

// Standard normal restricted to (a, b); a may be -inf and b may be +inf.
inline double truncated_std_normal(double a, double b, Rng &rng)
{
  if (a >= detail::kTailSwitch)
    return detail::upper_tail_normal(a, b, rng);
  if (b <= -detail::kTailSwitch)
    return -detail::upper_tail_normal(-b, -a, rng);

  const double u = uniform01(rng);
  double x;
  if (a >= 0.0)
  {
    const double qa = normal_ccdf(a);
    const double qb = normal_ccdf(b);
    x = normal_ccdf_inverse(qb + u * (qa - qb));
  }
  else
  {
    const double pa = normal_cdf(a);
    const double pb = normal_cdf(b);
    x = normal_quantile(pa + u * (pb - pa));
  }
  return std::clamp(x, a, b);
}

inline double truncated_normal(double mu, double sigma, double lower, double upper, Rng &rng)
{
  return mu + sigma * truncated_std_normal((lower - mu) / sigma, (upper - mu) / sigma, rng);
}

// ---------------------------------------------------------------------------
// Categorical

// Index drawn with probability proportional to exp(log_weights[k]).
inline std::size_t categorical_from_logs(std::span<const double> log_weights, Rng &rng)
{
  double top = -kInf;
  for (double lw : log_weights)
    top = std::max(top, lw);
  if (!std::isfinite(top))
    throw NumericalError("categorical draw: every weight underflowed to zero");
  double total = 0.0;
  for (double lw : log_weights)
    total += std::exp(lw - top);
  double target = uniform01(rng) * total;
  for (std::size_t k = 0; k < log_weights.size(); ++k)
  {
    target -= std::exp(log_weights[k] - top);
    if (target <= 0.0)
      return k;
  }
  // Rounding left a sliver; take the last positive weight.
  for (std::size_t k = log_weights.size(); k-- > 0;)
    if (log_weights[k] > -kInf)
      return k;
  return 0;
}

// Draw from precomputed cumulative probabilities (last entry ~ 1).
inline std::size_t categorical_from_cumulative(std::span<const double> cumulative, Rng &rng)
{
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                               cumulative.size() - 1);
}

inline double log_sum_exp(std::span<const double> xs)
{
  double top = -kInf;
  for (double x : xs)
    top = std::max(top, x);
  if (!std::isfinite(top))
    return top;
  double total = 0.0;
  for (double x : xs)
    total += std::exp(x - top);
  return top + std::log(total);
}

} // namespace micmix
