#pragma once

// ECOFFinder-style baseline: fit n * Phi((d - mu) / sigma) to the cumulative
// counts of the wild-type mode by nonlinear least squares and read cutoffs
// off the fitted log-normal quantiles.
//
// Subset selection: for each candidate end from (mode + 1) to
// min(mode + 5, T), fit on cells 1..end and keep the candidate with the
// smallest residual sum of squares per fitted point.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "micmix/data.hpp"
#include "micmix/error.hpp"
#include "micmix/log.hpp"
#include "micmix/stats.hpp"

namespace micmix
{

struct EcoffFit
{
  double mu = 0.0;     // log2
  double sigma = 1.0;  // log2
  double n_fit = 0.0;
  int subset_end = 0;  // 1-based dilution index
  double rss = 0.0;
  int iterations = 0;
  std::map<double, double> cutoffs;  // quantile -> mg/L
};

struct LevenbergMarquardtOptions
{
  int max_iterations = 200;
  double tolerance = 1e-12;
};

namespace detail
{

struct CumulativeFit
{
  double n_fit, mu, sigma, rss;
  int iterations;
  bool converged;
};

// Least squares of C_j = n * Phi((x_j - mu) / sigma), parameters
// (n, mu, log sigma) so that sigma stays positive.
inline CumulativeFit fit_cumulative_normal(const std::vector<double> &x,
                                           const std::vector<double> &cum, double n0, double mu0,
                                           double sigma0, const LevenbergMarquardtOptions &opt)
{
  Eigen::Vector3d theta(n0, mu0, std::log(sigma0));
  auto residuals = [&](const Eigen::Vector3d &t, Eigen::VectorXd &r, Eigen::MatrixXd *jac) {
    const double s = std::exp(t[2]);
    r.resize(static_cast<Eigen::Index>(x.size()));
    if (jac)
      jac->resize(static_cast<Eigen::Index>(x.size()), 3);
    for (std::size_t j = 0; j < x.size(); ++j)
    {
      const double z = (x[j] - t[1]) / s;
      const double phi = normal_cdf(z);
      r[j] = cum[j] - t[0] * phi;
      if (jac)
      {
        const double dens = normal_pdf(z);
        (*jac)(j, 0) = -phi;
        (*jac)(j, 1) = t[0] * dens / s;
        (*jac)(j, 2) = t[0] * dens * z;
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residuals(theta, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  for (; it < opt.max_iterations; ++it)
  {
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    Eigen::Matrix3d A = JtJ;
    A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
    const Eigen::Vector3d step = A.ldlt().solve(-g);
    const Eigen::Vector3d candidate = theta + step;
    Eigen::VectorXd rc;
    residuals(candidate, rc, nullptr);
    const double cand_cost = rc.squaredNorm();
    if (std::isfinite(cand_cost) && cand_cost <= cost)
    {
      const double improvement = cost - cand_cost;
      theta = candidate;
      cost = cand_cost;
      residuals(theta, r, &J);
      lambda = std::max(lambda * 0.3, 1e-12);
      if (improvement <= opt.tolerance * (1.0 + cost) ||
          step.norm() <= opt.tolerance * (1.0 + theta.norm()))
      {
        converged = true;
        break;
      }
    }
    else
    {
      lambda *= 10.0;
      if (lambda > 1e16)
      {
        // No descent direction left: a stationary point.
        converged = true;
        break;
      }
    }
  }
  return {theta[0], theta[1], std::exp(theta[2]), cost, it, converged};
}

} // namespace detail

// `counts` has one entry per dilution index 1..T+1.
inline EcoffFit fit_wildtype_lognormal(const std::vector<double> &counts, const DrugGrid &grid,
                                       const LevenbergMarquardtOptions &opt = {})
{
  const int T = grid.tested_count();
  if (static_cast<int>(counts.size()) != grid.cell_count())
    throw ValidationError("ECOFF: need one count per dilution index (T + 1 values)");
  for (double c : counts)
    if (!(c >= 0.0))
      throw ValidationError("ECOFF: counts must be nonnegative");

  // Ties resolve to the lower dilution. A boundary mode leaves no candidate end.
  int mode = 1;
  for (int j = 1; j <= T + 1; ++j)
    if (counts[j - 1] > counts[mode - 1])
      mode = j;
  if (mode == 1 || mode >= T)
    throw NumericalError("ECOFF: no interior mode (monotone counts); choose the subset manually");

  const auto &d = grid.tested_log2();
  bool have_fit = false;
  EcoffFit best;
  double best_score = kInf;
  detail::CumulativeFit last{};
  for (int end = mode + 1; end <= std::min(mode + 5, T); ++end)
  {
    int nonzero = 0;
    for (int j = 1; j < end; ++j)
      nonzero += counts[j - 1] > 0.0;
    if (nonzero < 3)
      continue;
    std::vector<double> x, cum;
    double acc = 0.0;
    double sum = 0.0, sum2 = 0.0;
    for (int j = 1; j <= end; ++j)
    {
      acc += counts[j - 1];
      x.push_back(d[j - 1]);
      cum.push_back(acc);
      // Moment start: cell j represented by its upper edge minus half a step.
      const double centre = d[j - 1] - 0.5;
      sum += counts[j - 1] * centre;
      sum2 += counts[j - 1] * centre * centre;
    }
    if (!(acc > 0.0))
      continue;
    const double mu0 = sum / acc;
    const double sd0 = std::sqrt(std::max(sum2 / acc - mu0 * mu0, 0.25));
    auto fit = detail::fit_cumulative_normal(x, cum, acc, mu0, sd0, opt);
    last = fit;
    if (!fit.converged)
      continue;
    if (!(fit.sigma > 1e-6) || !(fit.n_fit > 0.0))
      continue;
    const double score = fit.rss / static_cast<double>(x.size());
    if (score < best_score)
    {
      best_score = score;
      best.mu = fit.mu;
      best.sigma = fit.sigma;
      best.n_fit = fit.n_fit;
      best.rss = fit.rss;
      best.subset_end = end;
      best.iterations = fit.iterations;
      have_fit = true;
    }
  }
  if (!have_fit)
  {
    if (last.iterations >= opt.max_iterations)
      throw NumericalError("ECOFF: Levenberg-Marquardt did not converge in " +
                           std::to_string(opt.max_iterations) + " iterations (best mu=" +
                           std::to_string(last.mu) + ", sigma=" + std::to_string(last.sigma) +
                           ", rss=" + std::to_string(last.rss) + ")");
    throw NumericalError("ECOFF: degenerate wild-type distribution (need >= 3 nonzero cells "
                         "below the subset end and a positive fitted sigma)");
  }
  return best;
}

inline std::vector<double> counts_per_index(const DrugData &data)
{
  std::vector<double> counts(static_cast<std::size_t>(data.grid.cell_count()), 0.0);
  for (int idx : data.index)
    counts[idx - 1] += 1.0;
  return counts;
}

// Cutoff in mg/L: 2^(smallest tested dilution >= mu + z_q sigma), or the
// censor label when the quantile lies above the top tested dilution.
inline double ecoff_cutoff(const EcoffFit &fit, double q, const DrugGrid &grid)
{
  if (!(q > 0.0 && q < 1.0))
    throw ValidationError("ECOFF quantile must lie in (0, 1)");
  const double xq = fit.mu + normal_quantile(q) * fit.sigma;
  for (double dj : grid.tested_log2())
    if (dj >= xq)
      return std::exp2(dj);
  warn("ECOFF quantile " + std::to_string(q) + " lies above the top tested dilution of " +
       grid.drug_code() + "; returning the censor label");
  return std::exp2(grid.censor_label_log2());
}

inline void attach_cutoffs(EcoffFit &fit, const std::vector<double> &quantiles, const DrugGrid &grid)
{
  for (double q : quantiles)
    fit.cutoffs[q] = ecoff_cutoff(fit, q, grid);
}

// Resistant iff the recorded MIC (mg/L) exceeds the cutoff.
inline std::vector<bool> classify_by_cutoff(const DrugData &data, double cutoff_mgl,
                                            const std::string &drug)
{
  if (drug != data.grid.drug_code())
    throw ValidationError("classify_by_cutoff: cutoff for " + drug + " applied to " +
                          data.grid.drug_code());
  const double cut = std::log2(cutoff_mgl);
  std::vector<bool> resistant(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    resistant[i] = data.grid.recorded_log2(data.index[i]) > cut + 1e-9;
  return resistant;
}

} // namespace micmix
