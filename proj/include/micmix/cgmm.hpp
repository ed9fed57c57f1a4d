#pragma once

// Censored Gaussian mixture with a beta-negative-binomial prior on the number
// of components. Observations are dilution cells; a latent log2 value y* is
// Gaussian within its component and only its cell is recorded.
//
// One sweep of the sampler:
//   z  | pi, mu, sigma          (y* integrated over the observed cell)
//   y* | z, mu, sigma           (truncated normal on the cell)
//   b  | y*, z, mu, sigma       (optional per-strain intercepts)
//   sigma, mu | y*, z           (conditionally conjugate Gamma / Normal)
//   pi | z, K                   (Dirichlet)
//   K  | partition              (mixture-of-finite-mixtures partition law),
//        then empty components from the prior and a fresh pi.
//
// Components are 0-based in memory; files use 1-based cluster numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "micmix/data.hpp"
#include "micmix/error.hpp"
#include "micmix/stats.hpp"

namespace micmix
{

struct PriorConfig
{
  double mu0 = 0.0;
  double tau2 = 100.0;      // prior variance of component means
  double prec_shape = 1.5;  // Gamma(shape, rate) on the precision 1/sigma^2
  double prec_rate = 0.5;
  double delta = 1.0;       // symmetric Dirichlet concentration
  double bnb_alpha = 1.0;
  double bnb_beta = 1.0;
  int k_max = 30;

  void validate() const
  {
    if (!(tau2 > 0 && prec_shape > 0 && prec_rate > 0 && delta > 0 && bnb_alpha > 0 &&
          bnb_beta > 0))
      throw ConfigError("prior hyperparameters must be positive");
    if (k_max < 1 || k_max > 255)
      throw ConfigError("k_max must lie in 1..255");
  }
};

struct FitConfig
{
  long iterations = 1'000'000;
  long burnin = 100'000;
  long thin = 10;
  std::uint64_t seed = 1;
  int chains = 4;
  bool strain_effects = false;
  double strain_sd = 0.5;
  // Components at initialization; 0 selects min(k_max, kDefaultInitialComponents).
  int k_init = 0;

  static constexpr int kDefaultInitialComponents = 10;

  void validate() const
  {
    if (iterations <= 0 || burnin < 0 || burnin >= iterations)
      throw ConfigError("need 0 <= burnin < iterations");
    if (thin < 1)
      throw ConfigError("thin must be >= 1");
    if (chains < 1)
      throw ConfigError("chains must be >= 1");
    if (strain_effects && !(strain_sd > 0))
      throw ConfigError("strain_sd must be positive");
    if (k_init < 0)
      throw ConfigError("k_init must be >= 0");
  }

  long retained() const { return (iterations - burnin) / thin; }
};

struct MixtureState
{
  int k = 0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;
  std::vector<int> alloc;          // 0-based component per observation
  std::vector<double> latent;      // y* per observation
  std::vector<double> strain_effect;  // per strain; empty when disabled

  std::vector<int> counts() const
  {
    std::vector<int> c(static_cast<std::size_t>(k), 0);
    for (int z : alloc)
      ++c[static_cast<std::size_t>(z)];
    return c;
  }

  int occupied() const
  {
    const auto c = counts();
    return static_cast<int>(std::count_if(c.begin(), c.end(), [](int v) { return v > 0; }));
  }

  double shift(const DrugData &data, std::size_t i) const
  {
    return strain_effect.empty() ? 0.0 : strain_effect[static_cast<std::size_t>(data.strain_of[i])];
  }
};

// One retained draw. Allocations are stored compactly (k_max <= 255).
struct Draw
{
  long iter = 0;
  int k = 0;
  int k_plus = 0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;
  std::vector<std::uint8_t> alloc;
  double loglik = 0.0;
};

struct TraceSet
{
  std::string method = "cgmm";
  std::string drug;
  std::uint64_t seed = 0;
  int chain = 0;
  std::size_t n = 0;
  std::vector<Draw> draws;
  double wall_seconds = 0.0;
  long sweeps = 0;
  // Metropolis-style acceptance; Gibbs kernels accept every move.
  double acceptance_rate = 1.0;
};

// ---------------------------------------------------------------------------
// Prior on K

// log p(K = k) under a beta-negative-binomial with one success, shifted to
// start at k = 1. For alpha = beta = 1 this is log(1 / (k (k + 1))).
inline double log_prior_k(int k, double alpha, double beta)
{
  if (k < 1)
    throw std::domain_error("log_prior_k: k must be >= 1");
  if (!(alpha > 0 && beta > 0))
    throw std::domain_error("log_prior_k: alpha and beta must be positive");
  const double j = k - 1;
  return std::lgamma(alpha + 1.0) + std::lgamma(beta + j) - std::lgamma(alpha + beta + j + 1.0) -
         std::lgamma(alpha) - std::lgamma(beta) + std::lgamma(alpha + beta);
}

// ---------------------------------------------------------------------------
// Likelihood cells

inline double log_cell_probability(double mu, double sigma, double lower, double upper)
{
  return log_normal_interval((lower - mu) / sigma, (upper - mu) / sigma);
}

inline double cell_probability(double mu, double sigma, double lower, double upper)
{
  return std::exp(log_cell_probability(mu, sigma, lower, upper));
}

inline double observation_pmf(const MixtureState &state, const Interval &cell, double shift = 0.0)
{
  double p = 0.0;
  for (int k = 0; k < state.k; ++k)
    p += state.weights[k] * cell_probability(state.means[k] + shift, state.sds[k], cell.lower,
                                             cell.upper);
  return p;
}

namespace detail
{

// log(pi_k) + log P(cell j | k) for every cell of the grid; rows are cells.
inline std::vector<std::vector<double>> log_cell_table(const MixtureState &state,
                                                       const DrugGrid &grid)
{
  std::vector<std::vector<double>> table(static_cast<std::size_t>(grid.cell_count()),
                                         std::vector<double>(static_cast<std::size_t>(state.k)));
  for (int j = 1; j <= grid.cell_count(); ++j)
  {
    const auto cell = interval_bounds(j, grid);
    for (int k = 0; k < state.k; ++k)
      table[j - 1][k] = std::log(state.weights[k]) +
                        log_cell_probability(state.means[k], state.sds[k], cell.lower, cell.upper);
  }
  return table;
}

} // namespace detail

// Observed-data log-likelihood: sum over observations of log p(cell).
inline double observed_loglik(const MixtureState &state, const DrugData &data)
{
  if (state.strain_effect.empty())
  {
    std::vector<long> per_cell(static_cast<std::size_t>(data.grid.cell_count()), 0);
    for (int idx : data.index)
      ++per_cell[idx - 1];
    const auto table = detail::log_cell_table(state, data.grid);
    double total = 0.0;
    for (std::size_t j = 0; j < per_cell.size(); ++j)
      if (per_cell[j] > 0)
        total += per_cell[j] * log_sum_exp(table[j]);
    return total;
  }
  double total = 0.0;
  std::vector<double> lw(static_cast<std::size_t>(state.k));
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    const auto cell = data.bounds(i);
    const double shift = state.shift(data, i);
    for (int k = 0; k < state.k; ++k)
      lw[k] = std::log(state.weights[k]) +
              log_cell_probability(state.means[k] + shift, state.sds[k], cell.lower, cell.upper);
    total += log_sum_exp(lw);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Gibbs steps

// z_i with probability proportional to pi_k * P(cell_i | mu_k, sigma_k).
inline std::vector<int> sample_allocations(const MixtureState &state, const DrugData &data, Rng &rng)
{
  std::vector<int> alloc(data.size());
  if (state.strain_effect.empty())
  {
    const auto table = detail::log_cell_table(state, data.grid);
    std::vector<std::vector<double>> cumulative(table.size());
    std::vector<bool> used(table.size(), false);
    for (int idx : data.index)
      used[idx - 1] = true;
    for (std::size_t j = 0; j < table.size(); ++j)
    {
      if (!used[j])
        continue;
      const double top = *std::max_element(table[j].begin(), table[j].end());
      if (!std::isfinite(top))
        throw NumericalError("allocation weights underflowed for cell " + std::to_string(j + 1));
      cumulative[j].resize(table[j].size());
      double acc = 0.0;
      for (std::size_t k = 0; k < table[j].size(); ++k)
      {
        acc += std::exp(table[j][k] - top);
        cumulative[j][k] = acc;
      }
    }
    for (std::size_t i = 0; i < data.size(); ++i)
      alloc[i] = static_cast<int>(categorical_from_cumulative(cumulative[data.index[i] - 1], rng));
    return alloc;
  }
  std::vector<double> lw(static_cast<std::size_t>(state.k));
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    const auto cell = data.bounds(i);
    const double shift = state.shift(data, i);
    for (int k = 0; k < state.k; ++k)
      lw[k] = std::log(state.weights[k]) +
              log_cell_probability(state.means[k] + shift, state.sds[k], cell.lower, cell.upper);
    alloc[i] = static_cast<int>(categorical_from_logs(lw, rng));
  }
  return alloc;
}

// y*_i ~ N(mu_{z_i} + b_i, sigma_{z_i}^2) truncated to the observed cell.
inline std::vector<double> sample_latent(const MixtureState &state, std::span<const int> alloc,
                                         const DrugData &data, Rng &rng)
{
  std::vector<double> latent(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    const auto cell = data.bounds(i);
    const auto k = static_cast<std::size_t>(alloc[i]);
    latent[i] = truncated_normal(state.means[k] + state.shift(data, i), state.sds[k], cell.lower,
                                 cell.upper, rng);
  }
  return latent;
}

struct NormalPosterior
{
  double mean;
  double var;
};

// Posterior of a Normal mean with prior N(mu0, tau2) after n observations
// with the given sum and known variance sigma2.
inline NormalPosterior normal_mean_posterior(double mu0, double tau2, double n, double sum,
                                             double sigma2)
{
  const double precision = 1.0 / tau2 + n / sigma2;
  return {(mu0 / tau2 + sum / sigma2) / precision, 1.0 / precision};
}

struct ComponentParams
{
  std::vector<double> means;
  std::vector<double> sds;
};

// Conditionally conjugate update per component: precision | mean, then
// mean | precision. `values` are the latent values net of any strain shift.
inline ComponentParams update_component_params(std::span<const double> values,
                                               std::span<const int> alloc, int k,
                                               std::span<const double> current_means,
                                               const PriorConfig &priors, Rng &rng)
{
  std::vector<double> n(k, 0.0), sum(k, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i)
  {
    n[alloc[i]] += 1.0;
    sum[alloc[i]] += values[i];
  }
  std::vector<double> ss(k, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i)
  {
    const double d = values[i] - current_means[alloc[i]];
    ss[alloc[i]] += d * d;
  }
  ComponentParams out{std::vector<double>(k), std::vector<double>(k)};
  for (int c = 0; c < k; ++c)
  {
    const double precision =
        gamma_draw(priors.prec_shape + 0.5 * n[c], priors.prec_rate + 0.5 * ss[c], rng);
    const double sigma2 = 1.0 / precision;
    const auto post = normal_mean_posterior(priors.mu0, priors.tau2, n[c], sum[c], sigma2);
    out.means[c] = post.mean + std::sqrt(post.var) * std_normal(rng);
    out.sds[c] = std::sqrt(sigma2);
  }
  return out;
}

inline std::vector<double> update_weights(std::span<const int> alloc, double delta, int k, Rng &rng)
{
  std::vector<double> conc(static_cast<std::size_t>(k), delta);
  for (int z : alloc)
    conc[z] += 1.0;
  if (k == 1)
    return {1.0};
  return dirichlet_draw(conc, rng);
}

// Normalized log p(K | partition) for K = k_plus..k_max:
//   p(K) * K! / (K - K+)! * Gamma(delta K) / Gamma(n + delta K).
inline std::vector<double> log_k_conditional(std::size_t n, int k_plus, const PriorConfig &priors)
{
  if (k_plus < 1 || k_plus > priors.k_max)
    throw std::domain_error("log_k_conditional: occupied count outside 1..k_max");
  std::vector<double> lw;
  for (int k = k_plus; k <= priors.k_max; ++k)
  {
    const double dk = priors.delta * k;
    lw.push_back(log_prior_k(k, priors.bnb_alpha, priors.bnb_beta) + std::lgamma(k + 1.0) -
                 std::lgamma(k - k_plus + 1.0) + std::lgamma(dk) -
                 std::lgamma(static_cast<double>(n) + dk));
  }
  const double norm = log_sum_exp(lw);
  for (auto &v : lw)
    v -= norm;
  return lw;
}

// Drops empty components, draws K from its conditional, appends K - K+
// components from the prior, refreshes the weights and finally applies a
// uniformly random relabeling (the target is label-symmetric).
inline void update_k(MixtureState &state, const PriorConfig &priors, Rng &rng)
{
  const auto counts = state.counts();
  std::vector<int> new_label(static_cast<std::size_t>(state.k), -1);
  std::vector<double> means, sds;
  std::vector<int> occupied_counts;
  for (int c = 0; c < state.k; ++c)
  {
    if (counts[c] == 0)
      continue;
    new_label[c] = static_cast<int>(means.size());
    means.push_back(state.means[c]);
    sds.push_back(state.sds[c]);
    occupied_counts.push_back(counts[c]);
  }
  const int k_plus = static_cast<int>(means.size());
  for (auto &z : state.alloc)
    z = new_label[z];

  const auto lw = log_k_conditional(state.alloc.size(), k_plus, priors);
  const int k_new = k_plus + static_cast<int>(categorical_from_logs(lw, rng));

  std::vector<double> conc(occupied_counts.begin(), occupied_counts.end());
  for (auto &c : conc)
    c += priors.delta;
  for (int c = k_plus; c < k_new; ++c)
  {
    const double precision = gamma_draw(priors.prec_shape, priors.prec_rate, rng);
    means.push_back(priors.mu0 + std::sqrt(priors.tau2) * std_normal(rng));
    sds.push_back(1.0 / std::sqrt(precision));
    conc.push_back(priors.delta);
  }
  auto weights = k_new == 1 ? std::vector<double>{1.0} : dirichlet_draw(conc, rng);

  std::vector<int> perm(static_cast<std::size_t>(k_new));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = k_new - 1; i > 0; --i)
  {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  state.k = k_new;
  state.means.assign(k_new, 0.0);
  state.sds.assign(k_new, 0.0);
  state.weights.assign(k_new, 0.0);
  for (int c = 0; c < k_new; ++c)
  {
    state.means[perm[c]] = means[c];
    state.sds[perm[c]] = sds[c];
    state.weights[perm[c]] = weights[c];
  }
  for (auto &z : state.alloc)
    z = perm[z];
}

// Per-strain random intercepts b_s ~ N(0, sd^2) shared across components.
inline std::vector<double> update_strain_effects(const MixtureState &state, const DrugData &data,
                                                 double strain_sd, Rng &rng)
{
  std::vector<double> prec(data.strain_count(), 1.0 / (strain_sd * strain_sd));
  std::vector<double> lin(data.strain_count(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    const auto k = static_cast<std::size_t>(state.alloc[i]);
    const auto s = static_cast<std::size_t>(data.strain_of[i]);
    const double w = 1.0 / (state.sds[k] * state.sds[k]);
    prec[s] += w;
    lin[s] += w * (state.latent[i] - state.means[k]);
  }
  std::vector<double> out(data.strain_count());
  for (std::size_t s = 0; s < out.size(); ++s)
    out[s] = lin[s] / prec[s] + std_normal(rng) / std::sqrt(prec[s]);
  return out;
}

struct SweepOptions
{
  bool strain_effects = false;
  double strain_sd = 0.5;
};

// One full sweep of the censored-mixture kernel.
inline void gibbs_sweep(MixtureState &state, const DrugData &data, const PriorConfig &priors,
                        const SweepOptions &options, Rng &rng)
{
  state.alloc = sample_allocations(state, data, rng);
  state.latent = sample_latent(state, state.alloc, data, rng);
  if (options.strain_effects)
    state.strain_effect = update_strain_effects(state, data, options.strain_sd, rng);

  std::vector<double> net(state.latent);
  if (!state.strain_effect.empty())
    for (std::size_t i = 0; i < net.size(); ++i)
      net[i] -= state.shift(data, i);
  auto params = update_component_params(net, state.alloc, state.k, state.means, priors, rng);
  state.means = std::move(params.means);
  state.sds = std::move(params.sds);
  state.weights = update_weights(state.alloc, priors.delta, state.k, rng);
  update_k(state, priors, rng);
}

// ---------------------------------------------------------------------------
// Initialization and chains

namespace detail
{

// A point inside each observation's cell; boundary cells extend half a step.
inline std::vector<double> initial_latent(const DrugData &data)
{
  const auto &d = data.grid.tested_log2();
  const double low_step = d.size() > 1 ? d[1] - d[0] : 1.0;
  const double high_step = d.size() > 1 ? d[d.size() - 1] - d[d.size() - 2] : 1.0;
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    const auto cell = data.bounds(i);
    if (!std::isfinite(cell.lower))
      out[i] = cell.upper - 0.5 * low_step;
    else if (!std::isfinite(cell.upper))
      out[i] = cell.lower + 0.5 * high_step;
    else
      out[i] = 0.5 * (cell.lower + cell.upper);
  }
  return out;
}

// K components with means at equally spaced empirical quantiles of the
// values, common sd equal to the empirical sd, allocation to the nearest mean.
inline MixtureState initial_state(std::span<const double> values, int k)
{
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double var = 0.0;
  for (double v : sorted)
    var += (v - mean) * (v - mean);
  var = sorted.size() > 1 ? var / (n - 1.0) : 0.0;
  const double sd = var > 1e-12 ? std::sqrt(var) : 1.0;

  MixtureState state;
  state.k = k;
  for (int c = 0; c < k; ++c)
  {
    const double level = (c + 0.5) / k;
    const auto pos = std::min(sorted.size() - 1, static_cast<std::size_t>(level * n));
    state.means.push_back(sorted[pos] + 1e-6 * c);
    state.sds.push_back(sd);
    state.weights.push_back(1.0 / k);
  }
  state.latent.assign(values.begin(), values.end());
  state.alloc.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
  {
    int best = 0;
    for (int c = 1; c < k; ++c)
      if (std::abs(values[i] - state.means[c]) < std::abs(values[i] - state.means[best]))
        best = c;
    state.alloc[i] = best;
  }
  return state;
}

inline int initial_components(const FitConfig &fit, const PriorConfig &priors, std::size_t n)
{
  const int k = fit.k_init > 0 ? fit.k_init : FitConfig::kDefaultInitialComponents;
  return std::max(1, std::min({k, priors.k_max, static_cast<int>(n)}));
}

inline Draw record(const MixtureState &state, long iter, double loglik)
{
  Draw d;
  d.iter = iter;
  d.k = state.k;
  d.k_plus = state.occupied();
  d.weights = state.weights;
  d.means = state.means;
  d.sds = state.sds;
  d.alloc.assign(state.alloc.begin(), state.alloc.end());
  d.loglik = loglik;
  return d;
}

template <class Sweep, class LogLik>
TraceSet drive_chain(MixtureState state, const FitConfig &fit, Sweep &&sweep, LogLik &&loglik)
{
  TraceSet trace;
  const auto start = std::chrono::steady_clock::now();
  trace.draws.reserve(static_cast<std::size_t>(fit.retained()));
  for (long it = 1; it <= fit.iterations; ++it)
  {
    sweep(state);
    if (it > fit.burnin && (it - fit.burnin) % fit.thin == 0)
      trace.draws.push_back(record(state, it, loglik(state)));
  }
  trace.sweeps = fit.iterations;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

} // namespace detail

// Runs one chain on single-drug data. Deterministic given (seed, chain).
inline TraceSet run_chain(const DrugData &data, const PriorConfig &priors, const FitConfig &fit,
                          std::uint64_t seed, int chain = 0)
{
  priors.validate();
  fit.validate();
  if (data.size() == 0)
    throw ValidationError("run_chain: empty dataset");
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(chain));
  const auto init = detail::initial_latent(data);
  MixtureState state = detail::initial_state(init, detail::initial_components(fit, priors, data.size()));
  if (fit.strain_effects)
    state.strain_effect.assign(data.strain_count(), 0.0);
  const SweepOptions options{fit.strain_effects, fit.strain_sd};

  auto trace = detail::drive_chain(
      std::move(state), fit,
      [&](MixtureState &s) { gibbs_sweep(s, data, priors, options, rng); },
      [&](const MixtureState &s) { return observed_loglik(s, data); });
  trace.method = "cgmm";
  trace.drug = data.grid.drug_code();
  trace.seed = seed;
  trace.chain = chain;
  trace.n = data.size();
  return trace;
}

// Runs `chains` independent chains concurrently; results ordered by chain index.
template <class ChainFn>
std::vector<TraceSet> run_parallel_chains(int chains, ChainFn &&fn)
{
  std::vector<TraceSet> traces(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  std::vector<std::thread> workers;
  for (int c = 0; c < chains; ++c)
    workers.emplace_back([&, c] {
      try
      {
        traces[c] = fn(c);
      }
      catch (...)
      {
        errors[c] = std::current_exception();
      }
    });
  for (auto &w : workers)
    w.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return traces;
}

inline std::vector<TraceSet> run_chains(const DrugData &data, const PriorConfig &priors,
                                        const FitConfig &fit)
{
  return run_parallel_chains(fit.chains,
                             [&](int c) { return run_chain(data, priors, fit, fit.seed, c); });
}

} // namespace micmix
