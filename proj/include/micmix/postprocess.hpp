#pragma once

// Label-switching removal, point estimates and chain diagnostics.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "micmix/cgmm.hpp"
#include "micmix/error.hpp"

namespace micmix
{

// Occupied components sorted by ascending mean (stable: ties keep their
// original order), empty components after them in original order.
inline Draw relabel_draw(const Draw &draw)
{
  std::vector<int> counts(static_cast<std::size_t>(draw.k), 0);
  for (auto z : draw.alloc)
    ++counts[z];
  std::vector<int> order(static_cast<std::size_t>(draw.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool ea = counts[a] == 0, eb = counts[b] == 0;
    if (ea != eb)
      return !ea;
    if (ea)
      return false;
    return draw.means[a] < draw.means[b];
  });
  Draw out = draw;
  std::vector<std::uint8_t> new_label(static_cast<std::size_t>(draw.k));
  for (int pos = 0; pos < draw.k; ++pos)
  {
    const int old = order[pos];
    new_label[old] = static_cast<std::uint8_t>(pos);
    out.weights[pos] = draw.weights[old];
    out.means[pos] = draw.means[old];
    out.sds[pos] = draw.sds[old];
  }
  for (auto &z : out.alloc)
    z = new_label[z];
  return out;
}

inline TraceSet relabel_trace(const TraceSet &trace)
{
  TraceSet out = trace;
  for (auto &d : out.draws)
    d = relabel_draw(d);
  return out;
}

struct PosteriorK
{
  std::map<int, double> pmf;  // K+ -> posterior probability
  int mode = 0;
};

// Empirical distribution of occupied-cluster counts; ties go to the smaller K+.
inline PosteriorK posterior_k(std::span<const TraceSet> traces)
{
  PosteriorK out;
  std::map<int, long> counts;
  long total = 0;
  for (const auto &t : traces)
    for (const auto &d : t.draws)
    {
      ++counts[d.k_plus];
      ++total;
    }
  if (total == 0)
    throw ValidationError("posterior_k: empty trace");
  long best = -1;
  for (const auto &[k, c] : counts)
  {
    out.pmf[k] = static_cast<double>(c) / static_cast<double>(total);
    if (c > best)
    {
      best = c;
      out.mode = k;
    }
  }
  return out;
}

inline PosteriorK posterior_k(const TraceSet &trace)
{
  return posterior_k(std::span<const TraceSet>(&trace, 1));
}

struct ClusterAssignment
{
  int k_mode = 0;
  std::vector<int> map_cluster;                   // 1-based; 1 = lowest-mean cluster
  std::vector<std::vector<double>> probabilities; // per isolate, over clusters 1..k_mode
  std::vector<bool> susceptible;
  std::size_t draws_used = 0;
};

// Uses only draws at the modal K+; class probability = share of those draws
// allocating the isolate to each sorted cluster. Traces must be relabeled.
inline ClusterAssignment map_allocations(std::span<const TraceSet> traces)
{
  if (traces.empty() || traces.front().draws.empty())
    throw ValidationError("map_allocations: empty trace");
  const auto pk = posterior_k(traces);
  const std::size_t n = traces.front().draws.front().alloc.size();
  ClusterAssignment out;
  out.k_mode = pk.mode;
  out.probabilities.assign(n, std::vector<double>(static_cast<std::size_t>(pk.mode), 0.0));
  for (const auto &t : traces)
    for (const auto &d : t.draws)
    {
      if (d.k_plus != pk.mode)
        continue;
      if (d.alloc.size() != n)
        throw ValidationError("map_allocations: draws disagree on the number of isolates");
      ++out.draws_used;
      for (std::size_t i = 0; i < n; ++i)
        out.probabilities[i][d.alloc[i]] += 1.0;
    }
  if (out.draws_used == 0)
    throw NumericalError("map_allocations: no draws at the modal K+");
  const double inv = 1.0 / static_cast<double>(out.draws_used);
  out.map_cluster.resize(n);
  out.susceptible.resize(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    int best = 0;
    for (int c = 0; c < pk.mode; ++c)
    {
      out.probabilities[i][c] *= inv;
      if (out.probabilities[i][c] > out.probabilities[i][best])
        best = c;
    }
    out.map_cluster[i] = best + 1;
    out.susceptible[i] = best == 0;
  }
  return out;
}

inline ClusterAssignment map_allocations(const TraceSet &trace)
{
  return map_allocations(std::span<const TraceSet>(&trace, 1));
}

// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b)
{
  if (a.size() != b.size())
    throw std::invalid_argument("adjusted_rand_index: size mismatch");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto choose2 = [](double x) { return 0.5 * x * (x - 1.0); };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto &[key, v] : table)
    index += choose2(v);
  for (const auto &[key, v] : rows)
    sum_rows += choose2(v);
  for (const auto &[key, v] : cols)
    sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected)
    return 1.0;
  return (index - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// Diagnostics

// Effective sample size with Geyer's initial monotone sequence estimator.
inline double effective_sample_size(std::span<const double> x)
{
  const std::size_t n = x.size();
  if (n < 4)
    return static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < n; ++i)
    c[i] = x[i] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
      s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0))
    return static_cast<double>(n);
  double sum = 0.0;
  double previous = kInf;
  for (std::size_t lag = 0; lag + 1 < n; lag += 2)
  {
    double pair = autocov(lag) + autocov(lag + 1);
    if (pair <= 0.0)
      break;
    pair = std::min(pair, previous);  // enforce monotone decrease
    previous = pair;
    sum += pair;
  }
  const double tau = std::max(2.0 * sum / gamma0 - 1.0, 1.0 / std::log10(static_cast<double>(n)));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

// Split-chain potential scale reduction over equal-length chains.
inline double split_rhat(std::span<const std::vector<double>> chains)
{
  std::vector<std::span<const double>> halves;
  for (const auto &c : chains)
  {
    const std::size_t h = c.size() / 2;
    halves.emplace_back(c.data(), h);
    halves.emplace_back(c.data() + (c.size() - h), h);
  }
  const std::size_t m = halves.size();
  const std::size_t n = halves.front().size();
  if (n < 2)
    throw ValidationError("split_rhat: chains too short");
  std::vector<double> means(m), vars(m);
  for (std::size_t j = 0; j < m; ++j)
  {
    const auto &h = halves[j];
    means[j] = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(n);
    double s = 0.0;
    for (double v : h)
      s += (v - means[j]) * (v - means[j]);
    vars[j] = s / static_cast<double>(n - 1);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double between = 0.0;
  for (double mj : means)
    between += (mj - grand) * (mj - grand);
  between *= static_cast<double>(n) / static_cast<double>(m - 1);
  const double within = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  if (!(within > 0.0))
    return between > 0.0 ? kInf : 1.0;
  const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * within +
                          between / static_cast<double>(n);
  return std::sqrt(var_plus / within);
}

// Geweke z-score comparing the first 10% and last 50% of a chain.
inline double geweke_z(std::span<const double> x)
{
  const std::size_t n = x.size();
  const std::size_t na = std::max<std::size_t>(2, n / 10);
  const std::size_t nb = std::max<std::size_t>(2, n / 2);
  auto seg_stats = [](std::span<const double> s) {
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s)
      var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.size() > 1 ? s.size() - 1 : 1);
    const double ess = effective_sample_size(s);
    return std::pair{mean, var / ess};
  };
  const auto [ma, va] = seg_stats(x.first(na));
  const auto [mb, vb] = seg_stats(x.last(nb));
  const double denom = std::sqrt(va + vb);
  if (!(denom > 0.0))
    return ma == mb ? 0.0 : kInf;
  return (ma - mb) / denom;
}

struct ParameterDiagnostics
{
  std::string name;
  double ess = 0.0;  // summed over chains
  double rhat = 1.0;
  std::vector<double> geweke;  // per chain
};

struct DiagnosticsReport
{
  std::vector<ParameterDiagnostics> parameters;
  std::vector<double> acceptance_rate;  // per chain
  std::size_t draws_per_chain = 0;
  std::size_t chains = 0;

  double max_rhat() const
  {
    double r = 0.0;
    for (const auto &p : parameters)
      r = std::max(r, p.rhat);
    return r;
  }
};

// Scalar summaries tracked per draw: the mean of occupied-cluster means,
// the occupied count K+ and the observed-data log-likelihood.
inline std::map<std::string, std::vector<double>> scalar_summaries(const TraceSet &trace)
{
  std::map<std::string, std::vector<double>> out;
  for (const auto &d : trace.draws)
  {
    std::vector<int> counts(static_cast<std::size_t>(d.k), 0);
    for (auto z : d.alloc)
      ++counts[z];
    double sum = 0.0;
    int occ = 0;
    for (int c = 0; c < d.k; ++c)
      if (counts[c] > 0)
      {
        sum += d.means[c];
        ++occ;
      }
    out["mean_of_means"].push_back(occ > 0 ? sum / occ : 0.0);
    out["k_plus"].push_back(d.k_plus);
    out["loglik"].push_back(d.loglik);
  }
  return out;
}

inline DiagnosticsReport diagnostics(std::span<const TraceSet> traces)
{
  if (traces.size() < 2)
    throw ValidationError("diagnostics: need at least two chains");
  const std::size_t n = traces.front().draws.size();
  for (const auto &t : traces)
    if (t.draws.size() != n)
      throw ValidationError("diagnostics: chains must have equal length");
  if (n < 10)
    throw ValidationError("diagnostics: need at least 10 draws per chain");

  DiagnosticsReport report;
  report.chains = traces.size();
  report.draws_per_chain = n;
  std::vector<std::map<std::string, std::vector<double>>> per_chain;
  for (const auto &t : traces)
  {
    per_chain.push_back(scalar_summaries(t));
    report.acceptance_rate.push_back(t.acceptance_rate);
  }
  for (const auto &[name, unused] : per_chain.front())
  {
    ParameterDiagnostics p;
    p.name = name;
    std::vector<std::vector<double>> chains;
    for (const auto &pc : per_chain)
    {
      const auto &series = pc.at(name);
      chains.push_back(series);
      p.ess += effective_sample_size(series);
      p.geweke.push_back(geweke_z(series));
    }
    p.rhat = split_rhat(chains);
    report.parameters.push_back(std::move(p));
  }
  return report;
}

} // namespace micmix
