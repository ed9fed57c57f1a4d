#pragma once

// Comparison samplers. Both emit TraceSet records interchangeable with the
// censored mixture so that relabeling, point estimation and evaluation
// treat every method alike.
//
//  * gm: the same finite-mixture machinery and prior on K, but recorded log2
//    MIC values are taken as exact continuous observations. Left-censored
//    values sit at d_1 and right-censored ones at the censor label.
//  * dp: Dirichlet-process mixture on the censored latent representation,
//    allocations by Neal's auxiliary-parameter scheme (m auxiliaries) and the
//    concentration by the Escobar-West augmentation.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "micmix/cgmm.hpp"

namespace micmix
{

// ---------------------------------------------------------------------------
// Uncensored Gaussian mixture

inline std::vector<double> recorded_values(const DrugData &data)
{
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    out[i] = data.grid.recorded_log2(data.index[i]);
  return out;
}

inline std::vector<int> sample_allocations_exact(const MixtureState &state,
                                                 std::span<const double> values, Rng &rng)
{
  std::vector<int> alloc(values.size());
  std::vector<double> lw(static_cast<std::size_t>(state.k));
  std::vector<double> log_w(static_cast<std::size_t>(state.k));
  for (int k = 0; k < state.k; ++k)
    log_w[k] = std::log(state.weights[k]);
  for (std::size_t i = 0; i < values.size(); ++i)
  {
    for (int k = 0; k < state.k; ++k)
      lw[k] = log_w[k] + log_normal_pdf(values[i], state.means[k], state.sds[k]);
    alloc[i] = static_cast<int>(categorical_from_logs(lw, rng));
  }
  return alloc;
}

inline double exact_loglik(const MixtureState &state, std::span<const double> values)
{
  std::vector<double> lw(static_cast<std::size_t>(state.k));
  double total = 0.0;
  for (double y : values)
  {
    for (int k = 0; k < state.k; ++k)
      lw[k] = std::log(state.weights[k]) + log_normal_pdf(y, state.means[k], state.sds[k]);
    total += log_sum_exp(lw);
  }
  return total;
}

inline TraceSet run_gm_chain(const DrugData &data, const PriorConfig &priors, const FitConfig &fit,
                             std::uint64_t seed, int chain = 0)
{
  priors.validate();
  fit.validate();
  if (data.size() == 0)
    throw ValidationError("run_gm_chain: empty dataset");
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(chain));
  const auto values = recorded_values(data);
  MixtureState state =
      detail::initial_state(values, detail::initial_components(fit, priors, data.size()));

  auto sweep = [&](MixtureState &s) {
    s.alloc = sample_allocations_exact(s, values, rng);
    auto params = update_component_params(values, s.alloc, s.k, s.means, priors, rng);
    s.means = std::move(params.means);
    s.sds = std::move(params.sds);
    s.weights = update_weights(s.alloc, priors.delta, s.k, rng);
    update_k(s, priors, rng);
  };
  auto trace = detail::drive_chain(std::move(state), fit, sweep,
                                   [&](const MixtureState &s) { return exact_loglik(s, values); });
  trace.method = "gm";
  trace.drug = data.grid.drug_code();
  trace.seed = seed;
  trace.chain = chain;
  trace.n = data.size();
  return trace;
}

// ---------------------------------------------------------------------------
// Dirichlet-process mixture

struct DpConfig
{
  double conc_shape = 1.0;  // Gamma prior on the concentration
  double conc_rate = 1.0;
  int auxiliary = 3;        // m
  std::optional<double> fixed_concentration;
  double initial_concentration = 1.0;

  void validate() const
  {
    if (!(conc_shape > 0 && conc_rate > 0 && initial_concentration > 0))
      throw ConfigError("DP concentration prior parameters must be positive");
    if (auxiliary < 1)
      throw ConfigError("DP auxiliary count must be >= 1");
    if (fixed_concentration && !(*fixed_concentration > 0))
      throw ConfigError("fixed DP concentration must be positive");
  }
};

namespace detail
{

struct DpCluster
{
  double mean;
  double sd;
  int count;
};

inline DpCluster draw_from_base(const PriorConfig &priors, Rng &rng)
{
  const double precision = gamma_draw(priors.prec_shape, priors.prec_rate, rng);
  return {priors.mu0 + std::sqrt(priors.tau2) * std_normal(rng), 1.0 / std::sqrt(precision), 0};
}

} // namespace detail

// Escobar-West update of the DP concentration given k occupied clusters.
inline double update_dp_concentration(double alpha, int k, std::size_t n, const DpConfig &cfg,
                                      Rng &rng)
{
  const double eta = beta_draw(alpha + 1.0, static_cast<double>(n), rng);
  const double rate = cfg.conc_rate - std::log(eta);
  const double odds = (cfg.conc_shape + k - 1.0) / (static_cast<double>(n) * rate);
  const double p = odds / (1.0 + odds);
  const double shape = uniform01(rng) < p ? cfg.conc_shape + k : cfg.conc_shape + k - 1.0;
  return gamma_draw(std::max(shape, 1e-12), rate, rng);
}

inline TraceSet run_dp_chain(const DrugData &data, const DpConfig &dp, const PriorConfig &priors,
                             const FitConfig &fit, std::uint64_t seed, int chain = 0)
{
  dp.validate();
  priors.validate();
  fit.validate();
  if (data.size() == 0)
    throw ValidationError("run_dp_chain: empty dataset");
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(chain));
  const std::size_t n = data.size();
  const int m = dp.auxiliary;

  // Start from the same dispersed configuration as the finite mixtures.
  const auto init_values = detail::initial_latent(data);
  const auto init = detail::initial_state(
      init_values, std::max(1, std::min<int>(FitConfig::kDefaultInitialComponents,
                                             static_cast<int>(n))));
  std::vector<detail::DpCluster> clusters;
  std::vector<int> c(n);
  {
    std::vector<int> remap(static_cast<std::size_t>(init.k), -1);
    for (std::size_t i = 0; i < n; ++i)
    {
      const int z = init.alloc[i];
      if (remap[z] < 0)
      {
        remap[z] = static_cast<int>(clusters.size());
        clusters.push_back({init.means[z], init.sds[z], 0});
      }
      c[i] = remap[z];
      ++clusters[c[i]].count;
    }
  }
  std::vector<double> latent = init_values;
  double alpha = dp.fixed_concentration.value_or(dp.initial_concentration);

  auto compact = [&] {
    std::vector<int> remap(clusters.size(), -1);
    std::vector<detail::DpCluster> kept;
    for (std::size_t j = 0; j < clusters.size(); ++j)
      if (clusters[j].count > 0)
      {
        remap[j] = static_cast<int>(kept.size());
        kept.push_back(clusters[j]);
      }
    for (auto &z : c)
      z = remap[z];
    clusters = std::move(kept);
  };

  std::vector<detail::DpCluster> aux(static_cast<std::size_t>(m));
  std::vector<double> lw;
  auto sweep = [&] {
    for (std::size_t i = 0; i < n; ++i)
    {
      const auto cell = data.bounds(i);
      const auto &cl = clusters[c[i]];
      latent[i] = truncated_normal(cl.mean, cl.sd, cell.lower, cell.upper, rng);
    }

    for (std::size_t i = 0; i < n; ++i)
    {
      const int own = c[i];
      --clusters[own].count;
      int first_fresh = 0;
      if (clusters[own].count == 0)
      {
        aux[0] = clusters[own];
        first_fresh = 1;
      }
      for (int a = first_fresh; a < m; ++a)
        aux[a] = detail::draw_from_base(priors, rng);

      const std::size_t kc = clusters.size();
      lw.assign(kc + static_cast<std::size_t>(m), -kInf);
      for (std::size_t j = 0; j < kc; ++j)
        if (clusters[j].count > 0)
          lw[j] = std::log(static_cast<double>(clusters[j].count)) +
                  log_normal_pdf(latent[i], clusters[j].mean, clusters[j].sd);
      const double log_share = std::log(alpha / m);
      for (int a = 0; a < m; ++a)
        lw[kc + a] = log_share + log_normal_pdf(latent[i], aux[a].mean, aux[a].sd);
      const auto pick = categorical_from_logs(lw, rng);
      if (pick < kc)
      {
        c[i] = static_cast<int>(pick);
        ++clusters[pick].count;
      }
      else
      {
        auto fresh = aux[pick - kc];
        fresh.count = 1;
        if (clusters[own].count == 0)
        {
          clusters[own] = fresh;  // reuse the emptied slot
          c[i] = own;
        }
        else
        {
          c[i] = static_cast<int>(clusters.size());
          clusters.push_back(fresh);
        }
      }
    }
    compact();

    const int k = static_cast<int>(clusters.size());
    std::vector<double> means(k);
    for (int j = 0; j < k; ++j)
      means[j] = clusters[j].mean;
    const auto params = update_component_params(latent, c, k, means, priors, rng);
    for (int j = 0; j < k; ++j)
    {
      clusters[j].mean = params.means[j];
      clusters[j].sd = params.sds[j];
    }
    if (!dp.fixed_concentration)
      alpha = update_dp_concentration(alpha, k, n, dp, rng);
  };

  TraceSet trace;
  trace.method = "dp";
  trace.drug = data.grid.drug_code();
  trace.seed = seed;
  trace.chain = chain;
  trace.n = n;
  const auto start = std::chrono::steady_clock::now();
  for (long it = 1; it <= fit.iterations; ++it)
  {
    sweep();
    if (it > fit.burnin && (it - fit.burnin) % fit.thin == 0)
    {
      const int k = static_cast<int>(clusters.size());
      if (k > 255)
        throw NumericalError("DP chain exceeded 255 occupied clusters");
      MixtureState s;
      s.k = k;
      for (const auto &cl : clusters)
      {
        s.weights.push_back(static_cast<double>(cl.count) / static_cast<double>(n));
        s.means.push_back(cl.mean);
        s.sds.push_back(cl.sd);
      }
      s.alloc = c;
      trace.draws.push_back(detail::record(s, it, observed_loglik(s, data)));
    }
  }
  trace.sweeps = fit.iterations;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

} // namespace micmix
