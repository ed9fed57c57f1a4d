#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "micmix/cgmm.hpp"
#include "micmix/postprocess.hpp"

using namespace micmix;

namespace
{

Draw make_draw(std::vector<double> means, std::vector<std::uint8_t> alloc)
{
  Draw d;
  d.k = static_cast<int>(means.size());
  d.weights.assign(means.size(), 1.0 / static_cast<double>(means.size()));
  d.sds.resize(means.size());
  std::iota(d.sds.begin(), d.sds.end(), 1.0);
  d.means = std::move(means);
  d.alloc = std::move(alloc);
  std::vector<int> used(static_cast<std::size_t>(d.k), 0);
  for (auto z : d.alloc)
    used[z] = 1;
  d.k_plus = std::accumulate(used.begin(), used.end(), 0);
  return d;
}

// Draw whose K+ equals k: items 0..k-1 each in their own component.
Draw draw_with_kplus(int k, std::size_t n)
{
  std::vector<double> means(static_cast<std::size_t>(k));
  std::iota(means.begin(), means.end(), 0.0);
  std::vector<std::uint8_t> alloc(n, 0);
  for (int c = 0; c < k; ++c)
    alloc[c] = static_cast<std::uint8_t>(c);
  return make_draw(means, alloc);
}

TraceSet trace_of(std::vector<Draw> draws)
{
  TraceSet t;
  t.draws = std::move(draws);
  return t;
}

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed)
{
  Rng rng = make_rng(seed);
  std::vector<double> x(n);
  double v = std_normal(rng) / std::sqrt(1 - rho * rho);
  for (auto &xi : x)
  {
    v = rho * v + std_normal(rng);
    xi = v;
  }
  return x;
}

} // namespace

TEST(Relabel, SortsByMean)
{
  auto d = make_draw({2.0, -1.0}, {0, 1, 1});
  d.loglik = -12.5;
  const auto r = relabel_draw(d);
  EXPECT_EQ(r.means, (std::vector<double>{-1.0, 2.0}));
  EXPECT_EQ(r.sds, (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(r.alloc, (std::vector<std::uint8_t>{1, 0, 0}));
  EXPECT_EQ(r.loglik, d.loglik);
}

TEST(Relabel, SortedDrawUnchanged)
{
  const auto d = make_draw({-3.0, 0.0, 4.0}, {0, 1, 2, 2});
  const auto r = relabel_draw(d);
  EXPECT_EQ(r.means, d.means);
  EXPECT_EQ(r.alloc, d.alloc);
}

TEST(Relabel, TiesKeepOriginalOrderAndEmptyGoLast)
{
  const auto d = make_draw({5.0, -2.0, 1.0, 1.0}, {3, 2, 1});
  const auto r = relabel_draw(d);
  // Occupied: 1 (-2), 2 (1), 3 (1); empty 0 last.
  EXPECT_EQ(r.means, (std::vector<double>{-2.0, 1.0, 1.0, 5.0}));
  EXPECT_EQ(r.sds, (std::vector<double>{2.0, 3.0, 4.0, 1.0}));
  EXPECT_EQ(r.alloc, (std::vector<std::uint8_t>{2, 1, 0}));
}

TEST(Relabel, IdempotentFuzz)
{
  std::mt19937 gen(3);
  for (int trial = 0; trial < 200; ++trial)
  {
    const int k = 1 + static_cast<int>(gen() % 6);
    std::vector<double> means(static_cast<std::size_t>(k));
    for (auto &m : means)
      m = static_cast<double>(gen() % 7) - 3.0;
    std::vector<std::uint8_t> alloc(12);
    for (auto &z : alloc)
      z = static_cast<std::uint8_t>(gen() % k);
    const auto once = relabel_draw(make_draw(means, alloc));
    const auto twice = relabel_draw(once);
    ASSERT_EQ(once.means, twice.means);
    ASSERT_EQ(once.alloc, twice.alloc);
    ASSERT_EQ(once.sds, twice.sds);
  }
}

TEST(PosteriorK, Examples)
{
  std::vector<Draw> draws(5, draw_with_kplus(3, 5));
  EXPECT_EQ(posterior_k(trace_of(draws)).mode, 3);
  EXPECT_DOUBLE_EQ(posterior_k(trace_of(draws)).pmf.at(3), 1.0);

  std::vector<Draw> tie;
  for (int i = 0; i < 10; ++i)
    tie.push_back(draw_with_kplus(i % 2 ? 3 : 2, 5));
  EXPECT_EQ(posterior_k(trace_of(tie)).mode, 2);

  std::vector<Draw> mixed;
  for (int i = 0; i < 10; ++i)
    mixed.push_back(draw_with_kplus(1, 5));
  for (int i = 0; i < 70; ++i)
    mixed.push_back(draw_with_kplus(2, 5));
  for (int i = 0; i < 20; ++i)
    mixed.push_back(draw_with_kplus(3, 5));
  const auto pk = posterior_k(trace_of(mixed));
  EXPECT_NEAR(pk.pmf.at(1), 0.1, 1e-12);
  EXPECT_NEAR(pk.pmf.at(2), 0.7, 1e-12);
  EXPECT_NEAR(pk.pmf.at(3), 0.2, 1e-12);
  EXPECT_EQ(pk.mode, 2);
}

TEST(MapAllocations, SingleDraw)
{
  const auto a = map_allocations(trace_of({make_draw({-1.0, 2.0}, {0, 1, 1, 0})}));
  EXPECT_EQ(a.k_mode, 2);
  EXPECT_EQ(a.map_cluster, (std::vector<int>{1, 2, 2, 1}));
  EXPECT_EQ(a.susceptible, (std::vector<bool>{true, false, false, true}));
  EXPECT_EQ(a.probabilities[1], (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(a.draws_used, 1u);
}

TEST(MapAllocations, CountingAndModalRestriction)
{
  std::vector<Draw> draws;
  for (int i = 0; i < 100; ++i)
    draws.push_back(make_draw({-1.0, 2.0}, {static_cast<std::uint8_t>(i < 80 ? 0 : 1), 1, 0}));
  // Draws at a non-modal K+ are ignored.
  for (int i = 0; i < 30; ++i)
    draws.push_back(make_draw({-1.0}, {0, 0, 0}));
  const auto a = map_allocations(trace_of(draws));
  EXPECT_EQ(a.draws_used, 100u);
  EXPECT_NEAR(a.probabilities[0][0], 0.8, 1e-12);
  EXPECT_EQ(a.map_cluster[0], 1);
  for (const auto &p : a.probabilities)
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
}

TEST(MapAllocations, TiesGoToLowerCluster)
{
  const auto a = map_allocations(
      trace_of({make_draw({-1.0, 2.0}, {0, 1}), make_draw({-1.0, 2.0}, {1, 0})}));
  EXPECT_EQ(a.map_cluster, (std::vector<int>{1, 1}));
}

TEST(MapAllocations, InvariantToInternalLabelPermutation)
{
  std::mt19937 gen(5);
  std::vector<Draw> plain, shuffled;
  for (int i = 0; i < 50; ++i)
  {
    std::vector<std::uint8_t> alloc(20);
    for (auto &z : alloc)
      z = static_cast<std::uint8_t>(gen() % 3);
    alloc[0] = 0, alloc[1] = 1, alloc[2] = 2;
    const auto d = make_draw({-2.0, 0.5, 3.0}, alloc);
    plain.push_back(d);
    std::vector<int> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), gen);
    Draw p = d;
    for (int c = 0; c < 3; ++c)
    {
      p.means[perm[c]] = d.means[c];
      p.sds[perm[c]] = d.sds[c];
    }
    for (auto &z : p.alloc)
      z = static_cast<std::uint8_t>(perm[z]);
    shuffled.push_back(p);
  }
  const auto a = map_allocations(relabel_trace(trace_of(plain)));
  const auto b = map_allocations(relabel_trace(trace_of(shuffled)));
  EXPECT_EQ(a.map_cluster, b.map_cluster);
  EXPECT_EQ(a.probabilities, b.probabilities);
}

TEST(MapAllocations, ThreeComponentRecovery)
{
  std::vector<double> d;
  for (double v = -8; v <= 4; v += 1)
    d.push_back(v);
  const DrugGrid grid("G", d);
  const auto sim = simulate_with_truth(
      SimSpec{grid, 900, {0.5, 0.3, 0.2}, {-5.0, -2.0, 1.0}, {0.4, 0.4, 0.4}, std::nullopt}, 41);
  const auto data = drug_data(sim.dataset, "G");
  FitConfig fit;
  fit.iterations = 4000;
  fit.burnin = 1000;
  fit.thin = 5;
  const auto trace = relabel_trace(run_chain(data, PriorConfig{}, fit, 41));
  const auto a = map_allocations(trace);
  EXPECT_EQ(a.k_mode, 3);
  EXPECT_GE(adjusted_rand_index(a.map_cluster, sim.component), 0.9);
  // Thinning by 5 keeps >= 100 draws and leaves the mode alone.
  TraceSet thinned = trace;
  thinned.draws.clear();
  for (std::size_t i = 0; i < trace.draws.size(); i += 5)
    thinned.draws.push_back(trace.draws[i]);
  ASSERT_GE(thinned.draws.size(), 100u);
  EXPECT_EQ(posterior_k(thinned).mode, posterior_k(trace).mode);
}

TEST(AdjustedRandIndex, Examples)
{
  const std::vector<int> a{1, 1, 2, 2, 3, 3};
  const std::vector<int> relabeled{7, 7, 5, 5, 9, 9};
  EXPECT_NEAR(adjusted_rand_index(a, relabeled), 1.0, 1e-12);
  const std::vector<int> x{0, 0, 0, 1, 1, 1};
  const std::vector<int> y{0, 0, 1, 1, 2, 2};
  // Contingency rows (2,1,0), (0,1,2): sum C(nij,2) = 2; rows 3+3 = 6; cols 1+1+1 = 3; C(6,2) = 15.
  const double expected = (2.0 - 6.0 * 3.0 / 15.0) / (0.5 * (6.0 + 3.0) - 6.0 * 3.0 / 15.0);
  EXPECT_NEAR(adjusted_rand_index(x, y), expected, 1e-12);
}

TEST(Diagnostics, IidEss)
{
  Rng rng = make_rng(51);
  std::vector<double> x(20000);
  for (auto &v : x)
    v = std_normal(rng);
  const double ratio = effective_sample_size(x) / static_cast<double>(x.size());
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.2);
}

TEST(Diagnostics, Ar1Ess)
{
  const auto x = ar1(200000, 0.9, 52);
  const double ratio = effective_sample_size(x) / static_cast<double>(x.size());
  const double expected = 0.1 / 1.9;
  EXPECT_NEAR(ratio, expected, 0.5 * expected);
  EXPECT_LE(effective_sample_size(x), static_cast<double>(x.size()));
}

TEST(Diagnostics, IdenticalChainsHaveUnitRhat)
{
  const auto x = ar1(1000, 0.5, 53);
  const std::vector<std::vector<double>> chains{x, x};
  // Equal half means, so only the (n - 1) / n within-variance factor remains.
  std::vector<double> flat(2'000'000, 0.0);
  for (std::size_t i = 0; i < flat.size(); ++i)
    flat[i] = (i % 2 ? 1.0 : -1.0);
  const std::vector<std::vector<double>> same{flat, flat};
  EXPECT_NEAR(split_rhat(same), 1.0, 1e-6);
  EXPECT_LT(split_rhat(chains), 1.05);
}

TEST(Diagnostics, DetectsDisagreeingChains)
{
  auto a = ar1(1000, 0.5, 54), b = ar1(1000, 0.5, 55);
  for (auto &v : b)
    v += 5.0;
  const std::vector<std::vector<double>> chains{a, b};
  EXPECT_GT(split_rhat(chains), 1.5);
}

TEST(Diagnostics, GewekeOnStationaryAndDrifting)
{
  const auto x = ar1(5000, 0.3, 56);
  EXPECT_LT(std::abs(geweke_z(x)), 4.0);
  std::vector<double> drift(5000);
  for (std::size_t i = 0; i < drift.size(); ++i)
    drift[i] = x[i] + 0.002 * static_cast<double>(i);
  EXPECT_GT(std::abs(geweke_z(drift)), 4.0);
}

TEST(Diagnostics, ReportAndErrors)
{
  std::vector<Draw> draws;
  for (int i = 0; i < 50; ++i)
  {
    auto d = draw_with_kplus(1 + i % 2, 4);
    d.loglik = -10.0 - 0.1 * (i % 7);
    draws.push_back(d);
  }
  std::vector<TraceSet> traces{trace_of(draws), trace_of(draws)};
  const auto report = diagnostics(traces);
  EXPECT_EQ(report.chains, 2u);
  EXPECT_EQ(report.draws_per_chain, 50u);
  EXPECT_EQ(report.parameters.size(), 3u);
  for (const auto &p : report.parameters)
  {
    EXPECT_LE(p.ess, 100.0 + 1e-9);
    EXPECT_NEAR(p.rhat, 1.0, 0.1);
  }
  EXPECT_THROW(diagnostics(std::span<const TraceSet>(traces.data(), 1)), ValidationError);
  traces[1].draws.resize(9);
  EXPECT_THROW(diagnostics(traces), ValidationError);
  traces[0].draws.resize(9);
  EXPECT_THROW(diagnostics(traces), ValidationError);
}
