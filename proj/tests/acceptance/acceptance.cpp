// Acceptance checks AC1..AC11. Usage: acceptance [AC1 AC2 ... | all]
// Prints one "ACn PASS|FAIL <name>: <detail>" line per criterion and exits
// nonzero if any requested criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "micmix/baselines.hpp"
#include "micmix/cgmm.hpp"
#include "micmix/ecoff.hpp"
#include "micmix/eval.hpp"
#include "micmix/gwas.hpp"
#include "micmix/io.hpp"
#include "micmix/postprocess.hpp"
#include "support/gwas_fixture.hpp"

using namespace micmix;
namespace fs = std::filesystem;

namespace
{

const std::string kData = MICMIX_TEST_DATA;
const std::string kCli = MICMIX_CLI_PATH;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DrugGrid ladder(const std::string &code, int lo, int hi)
{
  std::vector<double> d;
  for (int v = lo; v <= hi; ++v)
    d.push_back(v);
  return DrugGrid(code, d);
}

FitConfig chain_config(long iterations, long burnin)
{
  FitConfig fit;
  fit.iterations = iterations;
  fit.burnin = burnin;
  fit.thin = 10;
  fit.chains = 1;
  return fit;
}

double mean_k_plus(const TraceSet &trace)
{
  double s = 0.0;
  for (const auto &d : trace.draws)
    s += d.k_plus;
  return s / static_cast<double>(trace.draws.size());
}

// Posterior mean of the highest-mean occupied cluster over draws at the modal K+.
double top_cluster_mean(const TraceSet &trace)
{
  const auto sorted = relabel_trace(trace);
  const int mode = posterior_k(sorted).mode;
  double s = 0.0;
  long n = 0;
  for (const auto &d : sorted.draws)
    if (d.k_plus == mode)
    {
      s += d.means[mode - 1];
      ++n;
    }
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov test (asymptotic, Stephens' small-sample
// correction). Ties are handled by stepping over equal values together.

double ks_statistic(std::vector<double> a, std::vector<double> b)
{
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size())
  {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x)
      ++i;
    while (j < b.size() && b[j] <= x)
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_pvalue(double d, double na, double nb)
{
  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lambda < 0.2)
    return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k)
    p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

Outcome ac1()
{
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(20240601);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial)
  {
    const int t = 1 + static_cast<int>(rng() % 20);
    const double start = -12.0 + 14.0 * uniform01(rng);
    std::vector<double> d;
    for (int j = 0; j < t; ++j)
      d.push_back(start + j);
    const DrugGrid grid("F", d);

    MixtureState s;
    s.k = 1 + static_cast<int>(rng() % 30);
    s.weights = dirichlet_draw(std::vector<double>(s.k, 0.3 + uniform01(rng)), rng);
    for (int c = 0; c < s.k; ++c)
    {
      s.means.push_back(start + t / 2.0 + 8.0 * std_normal(rng));
      s.sds.push_back(std::exp(std::log(0.01) + uniform01(rng) * std::log(1000.0)));
    }
    const double shift = trial % 3 == 0 ? 2.0 * std_normal(rng) : 0.0;
    double total = 0.0;
    for (int j = 1; j <= grid.cell_count(); ++j)
      total += observation_pmf(s, interval_bounds(j, grid), shift);
    worst = std::max(worst, std::abs(total - 1.0));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 10.0,
          fmt("max |sum - 1| = %.3g over 1000 states, %.2f s", worst, secs)};
}

Outcome ac2()
{
  const double p1 = std::exp(log_prior_k(1, 1, 1));
  const double p2 = std::exp(log_prior_k(2, 1, 1));
  const double p3 = std::exp(log_prior_k(3, 1, 1));
  const double closed = std::max({std::abs(p1 - 0.5), std::abs(p2 - 1.0 / 6.0),
                                  std::abs(p3 - 1.0 / 12.0)});
  const double alpha = 3.0, beta = 2.0;
  const double expected = (alpha + beta - 1.0) / (alpha - 1.0);
  // Tail first so the small terms are not swamped.
  double mean = 0.0, mass = 0.0;
  for (int k = 1'000'000; k >= 1; --k)
  {
    const double p = std::exp(log_prior_k(k, alpha, beta));
    mean += k * p;
    mass += p;
  }
  const double err = std::abs(mean - expected);
  return {closed <= 1e-12 && err <= 1e-6,
          fmt("pmf error %.2g; E(K) sum %.9f vs %.9f (mass %.9f)", closed, mean, expected, mass)};
}

// Geweke joint-distribution test on a toy problem.
struct GewekeStats
{
  double mu1, sigma1, k, mean_latent;
};

Outcome ac3()
{
  const auto t0 = std::chrono::steady_clock::now();
  PriorConfig prior;
  prior.mu0 = 0.0;
  prior.tau2 = 1.0;
  prior.prec_shape = 3.0;
  prior.prec_rate = 2.0;
  prior.k_max = 5;
  const DrugGrid grid("G", {-1.5, -0.5, 0.5, 1.5});
  const std::size_t n = 10;
  Rng rng = make_rng(77);

  std::vector<double> log_pk;
  for (int k = 1; k <= prior.k_max; ++k)
    log_pk.push_back(log_prior_k(k, prior.bnb_alpha, prior.bnb_beta));

  auto draw_parameters = [&](MixtureState &s) {
    s.k = 1 + static_cast<int>(categorical_from_logs(log_pk, rng));
    s.weights = s.k == 1 ? std::vector<double>{1.0}
                         : dirichlet_draw(std::vector<double>(s.k, prior.delta), rng);
    s.means.clear();
    s.sds.clear();
    for (int c = 0; c < s.k; ++c)
    {
      s.means.push_back(prior.mu0 + std::sqrt(prior.tau2) * std_normal(rng));
      s.sds.push_back(1.0 / std::sqrt(gamma_draw(prior.prec_shape, prior.prec_rate, rng)));
    }
  };
  DrugData data{grid, std::vector<int>(n), {}, std::vector<int>(n, 0), {"S"}};
  data.strain_ids.assign(n, "S");
  // Fills allocations, latent values and observed cells from the parameters.
  auto simulate = [&](MixtureState &s) {
    std::vector<double> cumulative(s.weights.size());
    std::partial_sum(s.weights.begin(), s.weights.end(), cumulative.begin());
    s.alloc.resize(n);
    s.latent.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
      s.alloc[i] = static_cast<int>(categorical_from_cumulative(cumulative, rng));
      s.latent[i] = s.means[s.alloc[i]] + s.sds[s.alloc[i]] * std_normal(rng);
      data.index[i] = censor_to_grid(s.latent[i], grid);
    }
  };
  auto stats = [&](const MixtureState &s) {
    return GewekeStats{s.means[0], s.sds[0], static_cast<double>(s.k),
                       std::accumulate(s.latent.begin(), s.latent.end(), 0.0) / n};
  };

  const int marginal_draws = 5000;
  std::vector<GewekeStats> marginal;
  for (int m = 0; m < marginal_draws; ++m)
  {
    MixtureState s;
    draw_parameters(s);
    simulate(s);
    marginal.push_back(stats(s));
  }

  const int sweeps = 50'000;
  std::vector<GewekeStats> successive;
  MixtureState s;
  draw_parameters(s);
  for (int m = 0; m < sweeps; ++m)
  {
    simulate(s);
    successive.push_back(stats(s));
    gibbs_sweep(s, data, prior, SweepOptions{}, rng);
  }

  auto column = [](const std::vector<GewekeStats> &v, double GewekeStats::*f) {
    std::vector<double> out;
    for (const auto &x : v)
      out.push_back(x.*f);
    return out;
  };
  const std::vector<std::pair<std::string, double GewekeStats::*>> fields{
      {"mu1", &GewekeStats::mu1},
      {"sigma1", &GewekeStats::sigma1},
      {"K", &GewekeStats::k},
      {"mean_y", &GewekeStats::mean_latent}};
  double min_ess = sweeps;
  for (const auto &[name, f] : fields)
    min_ess = std::min(min_ess, effective_sample_size(column(successive, f)));
  const auto thin = static_cast<std::size_t>(std::ceil(sweeps / std::max(min_ess, 1.0)));

  bool pass = true;
  std::string detail = fmt("thin %zu; ", thin);
  for (const auto &[name, f] : fields)
  {
    std::vector<double> chain;
    const auto all = column(successive, f);
    for (std::size_t i = 0; i < all.size(); i += thin)
      chain.push_back(all[i]);
    const auto ref = column(marginal, f);
    const double d = ks_statistic(chain, ref);
    const double p = ks_pvalue(d, static_cast<double>(chain.size()), static_cast<double>(ref.size()));
    // mean(y*) is reported for information; the criterion covers mu1, sigma1 and K.
    if (name != "mean_y")
      pass = pass && p > 0.01;
    detail += fmt("%s p=%.3f ", name.c_str(), p);
  }
  const double secs = seconds_since(t0);
  detail += fmt("(%.1f s)", secs);
  return {pass && secs < 300.0, detail};
}

Outcome ac4()
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto grid = ladder("R", -8, 4);
  int mode_hits = 0;
  std::vector<double> aris;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
  {
    const auto sim = simulate_with_truth(
        SimSpec{grid, 1000, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {-5.0, -2.0, 1.0}, {0.4, 0.4, 0.4},
                std::nullopt},
        seed);
    const auto data = drug_data(sim.dataset, "R");
    const auto trace = relabel_trace(run_chain(data, PriorConfig{}, chain_config(20000, 2000), seed));
    const auto assign = map_allocations(trace);
    mode_hits += assign.k_mode == 3;
    std::vector<int> truth(sim.component.begin(), sim.component.end());
    aris.push_back(adjusted_rand_index(assign.map_cluster, truth));
    per_seed += fmt(" %d", assign.k_mode);
  }
  std::sort(aris.begin(), aris.end());
  const double median = 0.5 * (aris[9] + aris[10]);
  const double secs = seconds_since(t0);
  return {mode_hits >= 18 && median >= 0.9 && secs < 1200.0,
          fmt("mode K+=3 in %d/20 seeds, median ARI %.4f, %.0f s; modes:", mode_hits, median,
              secs) +
              per_seed};
}

Outcome ac5()
{
  // Resistant component N(1.75, 1.5^2) on a grid topping out at 0 (1 mg/L),
  // censor label 1: its weight puts 25% of all isolates above the top dilution.
  const auto grid = ladder("G", -8, 0);
  const double top_mean = 1.75, top_sd = 1.5;
  const double above = normal_ccdf((0.0 - top_mean) / top_sd);
  const double w = 0.25 / above;
  int hits = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    const auto data = drug_data(
        simulate_dataset(SimSpec{grid, 2000, {1.0 - w, w}, {-5.0, top_mean}, {0.7, top_sd},
                                 std::nullopt},
                         seed),
        "G");
    const auto fit = chain_config(20000, 2000);
    const double censored = top_cluster_mean(run_chain(data, PriorConfig{}, fit, seed));
    const double naive = top_cluster_mean(run_gm_chain(data, PriorConfig{}, fit, seed));
    const bool ok = std::abs(censored - top_mean) <= 0.25 && top_mean - naive >= 0.5;
    hits += ok;
    per_seed += fmt(" [%llu: cgmm %+.2f gm %+.2f]", static_cast<unsigned long long>(seed),
                    censored - top_mean, naive - top_mean);
  }
  return {hits >= 9, fmt("%d/10 seeds meet both bounds; errors:", hits) + per_seed};
}

Outcome ac6()
{
  const auto grid = ladder("G", -8, 4);
  double cg_total = 0.0, dp_total = 0.0;
  int dp_wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    const auto data = drug_data(
        simulate_dataset(SimSpec{grid, 2000, {1.0}, {-2.0}, {1.0}, std::nullopt}, seed), "G");
    const auto fit = chain_config(20000, 10000);
    const double cg = mean_k_plus(run_chain(data, PriorConfig{}, fit, seed));
    const double dp = mean_k_plus(run_dp_chain(data, DpConfig{}, PriorConfig{}, fit, seed));
    cg_total += cg;
    dp_total += dp;
    dp_wins += dp > cg;
  }
  return {dp_total > cg_total, fmt("mean K+ over seeds: DP %.3f, censored GM %.3f (DP higher in %d/10)",
                                   dp_total / 10.0, cg_total / 10.0, dp_wins)};
}

Outcome ac7()
{
  const auto grid = ladder("AMI", -6, 4);
  int cutoff_hits = 0, param_hits = 0;
  double worst_mu = 0.0, worst_sigma = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    const auto data = drug_data(
        simulate_dataset(SimSpec{grid, 5000, {1.0}, {-2.0}, {1.0}, std::nullopt}, seed), "AMI");
    const auto fit = fit_wildtype_lognormal(counts_per_index(data), grid);
    cutoff_hits += ecoff_cutoff(fit, 0.99, grid) == 2.0;
    const double emu = std::abs(fit.mu + 2.0), esd = std::abs(fit.sigma - 1.0);
    param_hits += emu <= 0.1 && esd <= 0.1;
    worst_mu = std::max(worst_mu, emu);
    worst_sigma = std::max(worst_sigma, esd);
  }
  return {cutoff_hits >= 9 && param_hits == 10,
          fmt("q0.99 cutoff 2 mg/L in %d/10; mu, sigma within 0.1 in %d/10 (worst %.3f, %.3f)",
              cutoff_hits, param_hits, worst_mu, worst_sigma)};
}

Outcome ac8()
{
  Rng rng = make_rng(8);
  const int n = 1'000'000;
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> x(n);
  for (auto &v : x)
  {
    v = truncated_normal(0.0, 1.0, 0.0, kInf, rng);
    s1 += v;
  }
  const double mean = s1 / n;
  double m4 = 0.0;
  for (double v : x)
  {
    const double d = (v - mean) * (v - mean);
    s2 += d;
    m4 += d * d;
  }
  const double var = s2 / (n - 1.0);
  m4 /= n;
  const double sd = std::sqrt(var);
  const double se_mean = sd / std::sqrt(static_cast<double>(n));
  const double se_sd = std::sqrt((m4 - var * var) / (4.0 * var * n));
  const double zm = (mean - 0.79788) / se_mean, zs = (sd - 0.60281) / se_sd;
  return {std::abs(zm) <= 3.0 && std::abs(zs) <= 3.0,
          fmt("mean %.5f (z %.2f), sd %.5f (z %.2f)", mean, zm, sd, zs)};
}

Outcome ac9()
{
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> causal{10, 80, 150};
  int hits = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed)
  {
    const auto f = micmix::testing::make_gwas_fixture(500, 200, causal, 3.0, seed);
    GwasConfig cfg;
    cfg.iterations = 1500;
    cfg.burnin = 500;
    const auto r =
        summarize_gwas(run_gwas_chain(f.labels, f.snps, compute_grm(f.snps), cfg, seed), cfg, f.snps);
    bool all_found = true;
    int false_pos = 0;
    for (int j = 0; j < 200; ++j)
    {
      const bool is_causal = std::find(causal.begin(), causal.end(), j) != causal.end();
      if (is_causal)
        all_found = all_found && r.variants[j].pip >= 0.95;
      else
        false_pos += r.variants[j].pip >= 0.95;
    }
    hits += all_found && false_pos <= 1;
    per_seed += fmt(" %s/%d", all_found ? "all" : "miss", false_pos);
  }
  const double secs = seconds_since(t0);
  return {hits >= 8 && secs < 600.0,
          fmt("%d/10 seeds recover all causal with <=1 false positive, %.0f s; per seed:", hits,
              secs) +
              per_seed};
}

std::string slurp(const fs::path &path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ac10()
{
  const auto truth = load_truth(kData + "/eval_truth.csv");
  const auto labels = read_labels(kData + "/eval_labels.csv");
  const auto tp = format_rate_table(
      {{"cgmm", true_positive_rate(labels, truth.at(TruthKind::resistant_by_variant))}});
  const auto tn = format_rate_table(
      {{"cgmm", true_negative_rate(labels, truth.at(TruthKind::susceptible_control))}});
  const bool tp_ok = tp == slurp(kData + "/eval_expected_tp.csv");
  const bool tn_ok = tn == slurp(kData + "/eval_expected_tn.csv");
  const bool values = tp.find("92.054") != std::string::npos && tn.find("95.333") != std::string::npos;
  return {tp_ok && tn_ok && values,
          fmt("true positive table %s, true negative table %s", tp_ok ? "matches" : "differs",
              tn_ok ? "matches" : "differs")};
}

int run_cli(const std::string &args, const fs::path &log)
{
  const int status = std::system((kCli + " " + args + " > " + log.string() + " 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Every artifact under dir except wall-clock timing and logs.
std::map<std::string, std::string> snapshot(const fs::path &dir)
{
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "timing.json" &&
        e.path().extension() != ".log")
      out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

Outcome ac11()
{
  const auto dir = fs::temp_directory_path() / "micmix_acceptance_ac11";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto sim = (dir / "simulate").string();

  // GWAS inputs: a wide SNP table and an assignment file for its strains.
  const auto fx = micmix::testing::make_gwas_fixture(150, 30, {4}, 3.0, 7);
  {
    std::ofstream snps(dir / "snps.csv");
    snps << "strain_id";
    for (const auto &v : fx.snps.variant_ids)
      snps << ',' << v;
    snps << "\nposition";
    for (auto p : fx.snps.positions)
      snps << ',' << p;
    snps << '\n';
    for (std::size_t i = 0; i < fx.snps.n(); ++i)
    {
      snps << fx.snps.strains[i];
      for (Eigen::Index j = 0; j < fx.snps.genotypes.cols(); ++j)
        snps << ',' << fx.snps.genotypes(static_cast<Eigen::Index>(i), j);
      snps << '\n';
    }
    std::ofstream labels(dir / "assign.csv");
    labels << "strain_id,drug,map_cluster,susceptible\n";
    for (std::size_t i = 0; i < fx.labels.size(); ++i)
      labels << fx.snps.strains[i] << ",INH," << fx.labels[i] << ',' << (fx.labels[i] == 1) << '\n';
  }

  const std::string data_args = " --grids " + sim + "/grids.csv --mic " + sim + "/mic.csv";
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate --drug RIF --dilutions=-8,-7,-6,-5,-4,-3,-2,-1,0,1,2,3,4 --n 400 "
                   "--weights 0.6,0.4 --means=-5,0 --sds 0.5,0.5 --seed 3"},
      {"fit_cgmm", "fit --method cgmm" + data_args + " --iters 1500 --burnin 300 --chains 2 --seed 4"},
      {"fit_gm", "fit --method gm" + data_args + " --iters 800 --burnin 200 --chains 2 --seed 4"},
      {"fit_dp", "fit --method dp" + data_args + " --iters 800 --burnin 200 --chains 2 --seed 4"},
      {"postprocess", "postprocess --fit-dir " + (dir / "fit_cgmm").string()},
      {"ecoff", "ecoff" + data_args},
      {"eval", "eval --labels cgmm=" + kData + "/eval_labels.csv --truth " + kData +
                   "/eval_truth.csv"},
      {"gwas", "gwas --assignments " + (dir / "assign.csv").string() + " --snps " +
                   (dir / "snps.csv").string() + " --gwas-iters 200 --gwas-burnin 50 --seed 3"},
      {"pipeline", "pipeline" + data_args + " --iters 1500 --burnin 300 --chains 2 --seed 6 "
                   "--with-ecoff"},
  };

  bool pass = true;
  std::string detail;
  for (const auto &[name, args] : commands)
  {
    const auto out = dir / name;
    const auto full = args + " --out " + out.string();
    if (run_cli(full, dir / (name + "_1.log")) != 0)
    {
      pass = false;
      detail += name + ":error(" + slurp(dir / (name + "_1.log")) + ") ";
      continue;
    }
    const auto first = snapshot(out);
    const bool same = run_cli(full, dir / (name + "_2.log")) == 0 && snapshot(out) == first;
    pass = pass && same && !first.empty();
    detail += name + (same ? ":identical " : ":DIFFERS ");
  }
  return {pass, detail};
}

struct Criterion
{
  std::string id;
  std::string name;
  std::function<Outcome()> run;
};

const std::vector<Criterion> &criteria()
{
  static const std::vector<Criterion> all{
      {"AC1", "cell-probability normalization", ac1},
      {"AC2", "BNB prior closed form and mean", ac2},
      {"AC3", "Geweke joint-distribution test", ac3},
      {"AC4", "three-component K recovery", ac4},
      {"AC5", "right-censoring bias contrast", ac5},
      {"AC6", "DP overclustering contrast", ac6},
      {"AC7", "ECOFF log-normal recovery", ac7},
      {"AC8", "truncated-normal sampler moments", ac8},
      {"AC9", "GWAS causal-variant recovery", ac9},
      {"AC10", "rate-table golden fixtures", ac10},
      {"AC11", "CLI determinism", ac11},
  };
  return all;
}

} // namespace

int main(int argc, char **argv)
{
  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty() || (wanted.size() == 1 && wanted[0] == "all"))
  {
    wanted.clear();
    for (const auto &c : criteria())
      wanted.push_back(c.id);
  }
  int failures = 0;
  for (const auto &id : wanted)
  {
    const auto it = std::find_if(criteria().begin(), criteria().end(),
                                 [&](const Criterion &c) { return c.id == id; });
    if (it == criteria().end())
    {
      std::cerr << "unknown criterion " << id << '\n';
      return 2;
    }
    Outcome o;
    try
    {
      o = it->run();
    }
    catch (const std::exception &e)
    {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << it->id << (o.pass ? " PASS " : " FAIL ") << it->name << ": " << o.detail
              << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
