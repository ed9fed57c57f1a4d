#pragma once

// Command-line front end. Subcommands read and write staged files so the
// long MCMC runs are decoupled from postprocessing, evaluation and GWAS:
//
//   simulate     synthetic censored mixture data
//   fit          MCMC chains (cgmm, gm or dp) per drug
//   postprocess  relabel, posterior K, MAP assignments, diagnostics, plots
//   ecoff        wild-type log-normal fit and quantile cutoffs
//   eval         true-positive / true-negative tables against truth sets
//   gwas         spike-and-slab categorical regression on cluster labels
//   pipeline     fit -> postprocess -> [ecoff] -> [eval] -> [gwas]
//
// Precedence: command-line flags > config file (--config, TOML/INI with one
// section per subcommand) > defaults. Every run writes run_config.json.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "micmix/baselines.hpp"
#include "micmix/cgmm.hpp"
#include "micmix/data.hpp"
#include "micmix/ecoff.hpp"
#include "micmix/error.hpp"
#include "micmix/eval.hpp"
#include "micmix/gwas.hpp"
#include "micmix/io.hpp"
#include "micmix/postprocess.hpp"
#include "micmix/svg.hpp"

namespace micmix::cli
{

namespace fs = std::filesystem;

struct SimOptions
{
  std::string drug = "SIM";
  std::vector<double> dilutions{-5, -4, -3, -2, -1, 0, 1, 2, 3, 4};
  std::size_t n = 1000;
  std::vector<double> weights{1.0};
  std::vector<double> means{-2.0};
  std::vector<double> sds{1.0};
  std::size_t strains = 0;  // > 0 switches to the replicate structure
  std::size_t replicates = 1;
  double strain_sd = 0.0;
};

struct RunConfig
{
  std::string subcommand;
  std::string config_file;

  std::string grids;
  std::string mic;
  std::vector<std::string> drugs;  // empty = every drug in the data
  std::string method = "cgmm";
  std::string fit_dir;
  std::string counts;
  std::string truth;
  std::vector<std::string> labels;  // name=path
  std::string assignments;
  std::string snps;
  std::string gwas_drug;
  std::string out = ".";
  std::uint64_t seed = 1;
  bool save_allocations = true;
  bool with_ecoff = false;

  PriorConfig priors;
  FitConfig fit;
  DpConfig dp;
  double dp_fixed_concentration = 0.0;  // 0 = sample it
  GwasConfig gwas;
  double maf = 0.01;
  std::size_t max_variants = 20000;
  std::vector<double> quantiles{0.95, 0.99, 0.999};
  SimOptions sim;
};

namespace detail
{

struct Parser
{
  CLI::App app{"Censored Gaussian mixtures for MIC data", "micmix"};
  RunConfig cfg;
  bool dp_flags_used = false;
  std::vector<CLI::Option *> dp_options;

  void add_out(CLI::App *s) { s->add_option("-o,--out", cfg.out, "Output directory"); }

  void add_seed(CLI::App *s) { s->add_option("--seed", cfg.seed, "Random seed"); }

  void add_inputs(CLI::App *s, bool required)
  {
    s->add_option("--grids", cfg.grids, "Dilution grid CSV")->check(CLI::ExistingFile)->required(required);
    s->add_option("--mic", cfg.mic, "MIC CSV")->check(CLI::ExistingFile)->required(required);
    s->add_option("--drug", cfg.drugs, "Drug code(s); default all")->delimiter(',');
  }

  void add_fit(CLI::App *s)
  {
    s->add_option("--method", cfg.method, "cgmm, gm or dp")
        ->check(CLI::IsMember({"cgmm", "gm", "dp", "ecoff"}));
    s->add_option("--iters", cfg.fit.iterations, "MCMC sweeps");
    s->add_option("--burnin", cfg.fit.burnin, "Discarded sweeps");
    s->add_option("--thin", cfg.fit.thin, "Keep every thin-th sweep");
    s->add_option("--chains", cfg.fit.chains, "Independent chains, run concurrently");
    s->add_option("--k-init", cfg.fit.k_init, "Initial component count (0 = auto)");
    s->add_flag("--strain-effects", cfg.fit.strain_effects, "Per-strain random intercepts");
    s->add_option("--strain-sd", cfg.fit.strain_sd, "Strain-effect prior sd");
    s->add_option("--mu0", cfg.priors.mu0, "Prior mean of component means");
    s->add_option("--tau2", cfg.priors.tau2, "Prior variance of component means");
    s->add_option("--prec-shape", cfg.priors.prec_shape, "Gamma shape of the precision prior");
    s->add_option("--prec-rate", cfg.priors.prec_rate, "Gamma rate of the precision prior");
    s->add_option("--delta", cfg.priors.delta, "Dirichlet concentration of the weights");
    s->add_option("--bnb-alpha", cfg.priors.bnb_alpha, "Beta-negative-binomial alpha");
    s->add_option("--bnb-beta", cfg.priors.bnb_beta, "Beta-negative-binomial beta");
    s->add_option("--k-max", cfg.priors.k_max, "Upper bound on K");
    dp_options.push_back(s->add_option("--dp-conc-shape", cfg.dp.conc_shape, "DP concentration Gamma shape"));
    dp_options.push_back(s->add_option("--dp-conc-rate", cfg.dp.conc_rate, "DP concentration Gamma rate"));
    dp_options.push_back(s->add_option("--dp-aux", cfg.dp.auxiliary, "DP auxiliary components"));
    dp_options.push_back(s->add_option("--dp-fixed-conc", cfg.dp_fixed_concentration,
                                       "Fix the DP concentration instead of sampling it"));
    s->add_flag("!--no-allocations", cfg.save_allocations, "Skip per-draw allocation files");
  }

  void add_gwas(CLI::App *s)
  {
    s->add_option("--snps", cfg.snps, "SNP CSV (long or wide)")->check(CLI::ExistingFile);
    s->add_option("--gwas-iters", cfg.gwas.iterations, "GWAS sweeps");
    s->add_option("--gwas-burnin", cfg.gwas.burnin, "GWAS burn-in");
    s->add_option("--gwas-thin", cfg.gwas.thin, "GWAS thinning");
    s->add_option("--slab-var", cfg.gwas.slab_var, "Slab variance of variant effects");
    s->add_option("--a-omega", cfg.gwas.a_omega, "Beta prior a on the inclusion probability");
    s->add_option("--b-omega", cfg.gwas.b_omega, "Beta prior b (0 = number of variants)");
    s->add_option("--su-shape", cfg.gwas.su_shape, "Inverse-gamma shape of sigma_u^2");
    s->add_option("--su-scale", cfg.gwas.su_scale, "Inverse-gamma scale of sigma_u^2");
    s->add_option("--threshold", cfg.gwas.threshold, "PIP significance threshold");
    s->add_option("--maf", cfg.maf, "Minimum minor-allele frequency");
    s->add_option("--max-variants", cfg.max_variants, "Variant cap after filtering");
    s->add_flag("!--no-random-effect", cfg.gwas.random_effect, "Drop the polygenic effect");
  }

  Parser()
  {
    app.set_config("--config", "", "TOML/INI config file; flags override its values");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    auto *sim = app.add_subcommand("simulate", "Simulate censored mixture data");
    sim->add_option("--drug", cfg.sim.drug, "Drug code");
    sim->add_option("--dilutions", cfg.sim.dilutions, "Tested log2 dilutions")->delimiter(',');
    sim->add_option("-n,--n", cfg.sim.n, "Observations (without strain structure)");
    sim->add_option("--weights", cfg.sim.weights, "Mixture weights")->delimiter(',');
    sim->add_option("--means", cfg.sim.means, "Component means (log2)")->delimiter(',');
    sim->add_option("--sds", cfg.sim.sds, "Component sds (log2)")->delimiter(',');
    sim->add_option("--strains", cfg.sim.strains, "Strains (enables replicates)");
    sim->add_option("--replicates", cfg.sim.replicates, "Replicates per strain");
    sim->add_option("--strain-sd", cfg.sim.strain_sd, "Strain-effect sd");
    add_seed(sim);
    add_out(sim);

    auto *fit = app.add_subcommand("fit", "Run MCMC chains");
    add_inputs(fit, true);
    add_fit(fit);
    add_seed(fit);
    add_out(fit);

    auto *post = app.add_subcommand("postprocess", "Relabel, estimate K+, assign clusters");
    post->add_option("--fit-dir", cfg.fit_dir, "Directory written by `fit`")
        ->check(CLI::ExistingDirectory)
        ->required();
    add_out(post);

    auto *ec = app.add_subcommand("ecoff", "Wild-type log-normal fit and cutoffs");
    ec->add_option("--grids", cfg.grids, "Dilution grid CSV")->check(CLI::ExistingFile)->required();
    ec->add_option("--mic", cfg.mic, "MIC CSV")->check(CLI::ExistingFile);
    ec->add_option("--counts", cfg.counts, "Counts CSV drug,dilution_index,count")
        ->check(CLI::ExistingFile);
    ec->add_option("--drug", cfg.drugs, "Drug code(s); default all")->delimiter(',');
    ec->add_option("--quantiles", cfg.quantiles, "Quantiles")->delimiter(',');
    add_out(ec);

    auto *ev = app.add_subcommand("eval", "True-positive / true-negative tables");
    ev->add_option("--labels", cfg.labels, "METHOD=labels.csv (repeatable)")->required();
    ev->add_option("--truth", cfg.truth, "Truth CSV drug,strain_id,kind")
        ->check(CLI::ExistingFile)
        ->required();
    add_out(ev);

    auto *gw = app.add_subcommand("gwas", "Association of cluster labels with variants");
    gw->add_option("--assignments", cfg.assignments, "Assignment CSV")
        ->check(CLI::ExistingFile)
        ->required();
    gw->add_option("--drug", cfg.gwas_drug, "Drug whose labels are analysed");
    add_gwas(gw);
    gw->get_option("--snps")->required();
    add_seed(gw);
    add_out(gw);

    auto *pipe = app.add_subcommand("pipeline", "fit -> postprocess -> ecoff/eval/gwas");
    add_inputs(pipe, true);
    add_fit(pipe);
    add_gwas(pipe);
    pipe->add_option("--gwas-drug", cfg.gwas_drug, "Drug whose labels feed the GWAS");
    pipe->add_option("--truth", cfg.truth, "Truth CSV for evaluation")->check(CLI::ExistingFile);
    pipe->add_flag("--with-ecoff", cfg.with_ecoff, "Also produce ECOFF labels");
    pipe->add_option("--quantiles", cfg.quantiles, "ECOFF quantiles")->delimiter(',');
    add_seed(pipe);
    add_out(pipe);
  }
};

inline void finalize(Parser &p)
{
  auto &cfg = p.cfg;
  for (auto *sub : p.app.get_subcommands())
    cfg.subcommand = sub->get_name();
  if (auto *opt = p.app.get_config_ptr(); opt && opt->count() > 0)
    cfg.config_file = opt->as<std::string>();
  for (auto *opt : p.dp_options)
    p.dp_flags_used = p.dp_flags_used || opt->count() > 0;

  cfg.fit.seed = cfg.seed;
  cfg.gwas.seed = cfg.seed;
  if (cfg.dp_fixed_concentration > 0.0)
    cfg.dp.fixed_concentration = cfg.dp_fixed_concentration;
  else if (cfg.dp_fixed_concentration < 0.0)
    throw ConfigError("--dp-fixed-conc must be positive");

  if (cfg.subcommand == "fit" || cfg.subcommand == "pipeline")
  {
    if (cfg.method == "ecoff")
      throw ConfigError("method ecoff has no MCMC; use the `ecoff` subcommand or "
                        "`pipeline --with-ecoff`");
    if (p.dp_flags_used && cfg.method != "dp")
      throw ConfigError("--dp-* options given with --method " + cfg.method);
    if (cfg.fit.strain_effects && cfg.method != "cgmm")
      throw ConfigError("--strain-effects is only available for --method cgmm");
    cfg.priors.validate();
    cfg.fit.validate();
    cfg.dp.validate();
  }
  if (cfg.subcommand == "gwas" || (cfg.subcommand == "pipeline" && !cfg.snps.empty()))
    cfg.gwas.validate();
  if (cfg.subcommand == "ecoff" && cfg.mic.empty() == cfg.counts.empty())
    throw ConfigError("ecoff needs exactly one of --mic or --counts");
  for (double q : cfg.quantiles)
    if (!(q > 0.0 && q < 1.0))
      throw ConfigError("quantiles must lie in (0, 1)");
}

} // namespace detail

// Parses argv (flags > config file > defaults). Throws CLI::Error for
// command-line problems and ConfigError for contradictory settings.
inline RunConfig parse_config(int argc, const char *const *argv)
{
  detail::Parser p;
  p.app.parse(argc, argv);
  detail::finalize(p);
  return p.cfg;
}

inline RunConfig parse_config(const std::vector<std::string> &args)
{
  std::vector<const char *> argv{"micmix"};
  for (const auto &a : args)
    argv.push_back(a.c_str());
  return parse_config(static_cast<int>(argv.size()), argv.data());
}

inline Json run_config_json(const RunConfig &c)
{
  Json j{{"version", kVersion}, {"subcommand", c.subcommand}};
  if (!c.config_file.empty())
    j["config_file"] = c.config_file;
  j["seed"] = c.seed;
  j["out"] = c.out;
  if (c.subcommand == "simulate")
  {
    j["simulate"] = Json{{"drug", c.sim.drug},          {"dilutions", c.sim.dilutions},
                         {"n", c.sim.n},                {"weights", c.sim.weights},
                         {"means", c.sim.means},        {"sds", c.sim.sds},
                         {"strains", c.sim.strains},    {"replicates", c.sim.replicates},
                         {"strain_sd", c.sim.strain_sd}};
    return j;
  }
  j["inputs"] = Json{{"grids", c.grids}, {"mic", c.mic},     {"counts", c.counts},
                     {"fit_dir", c.fit_dir}, {"truth", c.truth}, {"labels", c.labels},
                     {"assignments", c.assignments}, {"snps", c.snps}};
  j["drugs"] = c.drugs;
  if (c.subcommand == "fit" || c.subcommand == "pipeline")
  {
    j["method"] = c.method;
    j["priors"] = prior_json(c.priors);
    j["fit"] = fit_json(c.fit);
    if (c.method == "dp")
      j["dp"] = dp_json(c.dp);
    j["save_allocations"] = c.save_allocations;
    j["allocation_estimator"] =
        "draws at the modal K+, components ordered by mean, per-isolate majority";
  }
  if (c.subcommand == "ecoff" || c.subcommand == "pipeline")
  {
    j["quantiles"] = c.quantiles;
    j["ecoff_subset_rule"] = "ends mode+1..min(mode+5,T), minimum rss per fitted point";
  }
  if (c.subcommand == "gwas" || c.subcommand == "pipeline")
  {
    const auto &g = c.gwas;
    j["gwas"] = Json{{"drug", c.gwas_drug},       {"iterations", g.iterations},
                     {"burnin", g.burnin},        {"thin", g.thin},
                     {"slab_var", g.slab_var},    {"a_omega", g.a_omega},
                     {"b_omega", g.b_omega == 0.0 ? Json("p") : Json(g.b_omega)},
                     {"su_shape", g.su_shape},    {"su_scale", g.su_scale},
                     {"intercept_var", g.intercept_var},
                     {"threshold", g.threshold},  {"random_effect", g.random_effect},
                     {"maf", c.maf},              {"max_variants", c.max_variants},
                     {"significance_rule", "posterior inclusion probability >= threshold"}};
  }
  return j;
}

namespace detail
{

inline void write(const fs::path &path, const std::string &contents)
{
  csv::write_file(path.string(), contents);
}

inline fs::path prepare_out(const std::string &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw ConfigError("cannot create output directory " + dir);
  return fs::path(dir);
}

inline std::vector<std::string> selected_drugs(const MicDataset &data,
                                               const std::vector<std::string> &requested)
{
  if (requested.empty())
    return data.drugs();
  const auto counts = data.counts_by_drug();
  for (const auto &d : requested)
    if (!counts.count(d))
      throw ValidationError("no observations for drug " + d);
  return requested;
}

inline std::string stem(const std::string &drug, const std::string &method)
{
  return drug + "_" + method;
}

// Wall-clock records kept apart from the reproducible artifacts.
struct Timing
{
  Json entries = Json::object();
  void add(const std::string &key, double seconds) { entries[key] = seconds; }
};

inline Json run_fit(const RunConfig &cfg, const fs::path &out, Timing &timing)
{
  const auto grids = load_dilution_grid(cfg.grids);
  const auto data = load_mic_dataset(cfg.mic, grids);
  Json manifest{{"version", kVersion},
                {"method", cfg.method},
                {"grids", fs::absolute(cfg.grids).string()},
                {"mic", fs::absolute(cfg.mic).string()},
                {"chains", cfg.fit.chains},
                {"drugs", Json::array()}};
  for (const auto &drug : selected_drugs(data, cfg.drugs))
  {
    const auto dd = drug_data(data, drug);
    auto traces = run_parallel_chains(cfg.fit.chains, [&](int c) {
      if (cfg.method == "gm")
        return run_gm_chain(dd, cfg.priors, cfg.fit, cfg.seed, c);
      if (cfg.method == "dp")
        return run_dp_chain(dd, cfg.dp, cfg.priors, cfg.fit, cfg.seed, c);
      return run_chain(dd, cfg.priors, cfg.fit, cfg.seed, c);
    });
    Json entry{{"drug", drug}, {"n", dd.size()}, {"chains", Json::array()}};
    for (const auto &t : traces)
    {
      const std::string base = stem(drug, cfg.method) + "_chain" + std::to_string(t.chain);
      write(out / ("trace_" + base + ".csv"), trace_to_csv(t));
      Json chain{{"trace", "trace_" + base + ".csv"}, {"metadata", "meta_" + base + ".json"}};
      if (cfg.save_allocations)
      {
        write(out / ("alloc_" + base + ".csv"), allocations_to_csv(t));
        chain["allocations"] = "alloc_" + base + ".csv";
      }
      write(out / ("meta_" + base + ".json"),
            dump_json(trace_metadata(t, cfg.priors, cfg.fit, cfg.method == "dp" ? &cfg.dp : nullptr)));
      timing.add("fit/" + base, t.wall_seconds);
      entry["chains"].push_back(chain);
    }
    manifest["drugs"].push_back(entry);
  }
  write(out / "fit_manifest.json", dump_json(manifest));
  return manifest;
}

struct PostprocessResult
{
  std::map<std::string, std::string> assignment_files;  // drug -> path
};

inline PostprocessResult run_postprocess(const fs::path &fit_dir, const fs::path &out)
{
  const auto manifest_path = fit_dir / "fit_manifest.json";
  if (!fs::exists(manifest_path))
    throw ValidationError("no fit_manifest.json in " + fit_dir.string());
  Json manifest;
  try
  {
    std::ifstream in(manifest_path);
    manifest = Json::parse(in);
  }
  catch (const nlohmann::json::exception &e)
  {
    throw ParseError("cannot parse " + manifest_path.string() + ": " + e.what());
  }
  const std::string method = manifest.at("method");
  const auto grids = load_dilution_grid(manifest.at("grids").get<std::string>());
  const auto data = load_mic_dataset(manifest.at("mic").get<std::string>(), grids);

  PostprocessResult result;
  for (const auto &entry : manifest.at("drugs"))
  {
    const std::string drug = entry.at("drug");
    const auto dd = drug_data(data, drug);
    std::vector<TraceSet> traces;
    for (const auto &chain : entry.at("chains"))
    {
      if (!chain.contains("allocations"))
        throw ValidationError("postprocess needs allocation files; rerun fit without "
                              "--no-allocations");
      auto t = read_trace_csv((fit_dir / chain.at("trace").get<std::string>()).string(),
                              (fit_dir / chain.at("allocations").get<std::string>()).string());
      if (t.n != dd.size())
        throw ValidationError("trace for " + drug + " does not match the MIC data");
      t.method = method;
      t.drug = drug;
      traces.push_back(relabel_trace(t));
    }
    const auto base = stem(drug, method);
    const auto pk = posterior_k(traces);
    write(out / ("posterior_k_" + base + ".csv"), posterior_k_to_csv(pk));
    const auto assign = map_allocations(traces);
    const auto assign_path = out / ("assignments_" + base + ".csv");
    write(assign_path, assignments_to_csv(assign, dd));
    result.assignment_files[drug] = assign_path.string();

    bool diagnosable = traces.size() >= 2;
    for (const auto &t : traces)
      diagnosable = diagnosable && t.draws.size() >= 10 && t.draws.size() == traces[0].draws.size();
    if (diagnosable)
      write(out / ("diagnostics_" + base + ".json"), dump_json(diagnostics_json(diagnostics(traces))));
    else
      warn("diagnostics for " + drug + " skipped: need >= 2 equal chains with >= 10 draws");

    // Histogram of recorded dilutions split by MAP cluster.
    const int cells = dd.grid.cell_count();
    std::vector<std::vector<int>> counts(static_cast<std::size_t>(cells),
                                         std::vector<int>(static_cast<std::size_t>(assign.k_mode), 0));
    for (std::size_t i = 0; i < dd.size(); ++i)
      ++counts[dd.index[i] - 1][assign.map_cluster[i] - 1];
    std::ostringstream hist;
    hist << "dilution_index,log2_mic,cluster,count\n";
    std::vector<std::string> ticks;
    for (int j = 1; j <= cells; ++j)
    {
      const auto label = csv::format_double(dd.grid.recorded_log2(j));
      ticks.push_back(j == cells ? ">" + csv::format_double(dd.grid.highest()) : label);
      for (int c = 1; c <= assign.k_mode; ++c)
        hist << j << ',' << label << ',' << c << ',' << counts[j - 1][c - 1] << '\n';
    }
    write(out / ("histogram_" + base + ".csv"), hist.str());
    write(out / ("histogram_" + base + ".svg"), histogram_svg(drug + " (" + method + ")", counts, ticks));
  }
  return result;
}

inline std::map<std::string, std::string> run_ecoff(const RunConfig &cfg, const fs::path &out)
{
  const auto grids = load_dilution_grid(cfg.grids);
  std::map<std::string, std::vector<double>> counts;
  std::optional<MicDataset> data;
  if (!cfg.mic.empty())
  {
    data = load_mic_dataset(cfg.mic, grids);
    for (const auto &drug : selected_drugs(*data, cfg.drugs))
      counts[drug] = counts_per_index(drug_data(*data, drug));
  }
  else
  {
    const auto lines = csv::read_lines(cfg.counts);
    if (lines.empty() || lines[0].text != "drug,dilution_index,count")
      throw ParseError("counts header must be drug,dilution_index,count in " + cfg.counts);
    for (std::size_t li = 1; li < lines.size(); ++li)
    {
      const auto f = csv::split(lines[li].text);
      if (f.size() != 3)
        throw ParseError("expected 3 fields", lines[li].number);
      const auto git = grids.find(f[0]);
      if (git == grids.end())
        throw ValidationError("no grid for drug " + f[0]);
      const auto idx = csv::require_int(f[1], lines[li].number, "dilution_index");
      git->second.check_index(static_cast<int>(idx));
      auto &c = counts[f[0]];
      c.resize(static_cast<std::size_t>(git->second.cell_count()), 0.0);
      c[idx - 1] += csv::require_double(f[2], lines[li].number, "count");
    }
    if (!cfg.drugs.empty())
    {
      std::map<std::string, std::vector<double>> kept;
      for (const auto &d : cfg.drugs)
      {
        if (!counts.count(d))
          throw ValidationError("no counts for drug " + d);
        kept[d] = counts[d];
      }
      counts = std::move(kept);
    }
  }

  std::map<std::string, std::string> label_files;  // "<drug>@<q>" -> path
  for (const auto &[drug, c] : counts)
  {
    const auto &grid = grids.at(drug);
    EcoffFit fit;
    try
    {
      fit = fit_wildtype_lognormal(c, grid);
    }
    catch (const NumericalError &e)
    {
      if (counts.size() == 1)
        throw;
      warn(drug + " skipped: " + e.what());
      continue;
    }
    attach_cutoffs(fit, cfg.quantiles, grid);
    Json cut = Json::array();
    std::ostringstream table;
    table << "quantile,cutoff_mgL,cutoff_log2\n";
    for (const auto &[q, mgl] : fit.cutoffs)
    {
      cut.push_back(Json{{"quantile", q}, {"cutoff_mgL", mgl}});
      table << csv::format_double(q) << ',' << csv::format_double(mgl) << ','
            << csv::format_double(std::log2(mgl)) << '\n';
    }
    Json j{{"version", kVersion}, {"drug", drug},           {"mu_log2", fit.mu},
           {"sigma_log2", fit.sigma}, {"n_fit", fit.n_fit}, {"subset_end", fit.subset_end},
           {"rss", fit.rss},         {"iterations", fit.iterations}, {"cutoffs", cut}};
    write(out / ("ecoff_" + drug + ".json"), dump_json(j));
    write(out / ("ecoff_cutoffs_" + drug + ".csv"), table.str());
    if (data)
    {
      const auto dd = drug_data(*data, drug);
      for (const auto &[q, mgl] : fit.cutoffs)
      {
        const auto path = out / ("ecoff_labels_" + drug + "_q" + csv::format_double(q) + ".csv");
        write(path, binary_labels_to_csv(classify_by_cutoff(dd, mgl, drug), dd));
        label_files[drug + "@" + csv::format_double(q)] = path.string();
      }
    }
  }
  return label_files;
}

inline void run_eval(const std::vector<std::pair<std::string, std::string>> &labels,
                     const std::string &truth_path, const fs::path &out)
{
  const auto truth = load_truth(truth_path);
  std::vector<MethodRates> tp, tn;
  for (const auto &[name, path] : labels)
  {
    const auto set = read_labels(path);
    if (const auto it = truth.find(TruthKind::resistant_by_variant); it != truth.end())
      tp.push_back({name, true_positive_rate(set, it->second)});
    if (const auto it = truth.find(TruthKind::susceptible_control); it != truth.end())
      tn.push_back({name, true_negative_rate(set, it->second)});
  }
  if (tp.empty() && tn.empty())
    throw ValidationError("truth file " + truth_path + " has no rows");
  if (!tp.empty())
  {
    write(out / "true_positive.csv", format_rate_table(tp));
    write(out / "true_positive_levels.csv", format_level_breakdown(tp));
  }
  if (!tn.empty())
  {
    write(out / "true_negative.csv", format_rate_table(tn));
    write(out / "true_negative_levels.csv", format_level_breakdown(tn));
  }
}

// Majority cluster per strain (ties to the lower cluster), restricted to one drug.
inline std::map<std::string, int> strain_labels(const LabelSet &labels, std::string &drug)
{
  std::set<std::string> drugs;
  for (const auto &r : labels)
    drugs.insert(r.drug);
  if (drug.empty())
  {
    if (drugs.size() != 1)
      throw ConfigError("assignments cover several drugs; choose one with --drug");
    drug = *drugs.begin();
  }
  else if (!drugs.count(drug))
    throw ValidationError("assignments contain no rows for " + drug);
  std::map<std::string, std::map<int, int>> votes;
  for (const auto &r : labels)
    if (r.drug == drug)
      ++votes[r.strain_id][r.map_cluster];
  std::map<std::string, int> out;
  for (const auto &[strain, v] : votes)
  {
    int best = v.begin()->first, best_n = v.begin()->second;
    for (const auto &[cluster, n] : v)
      if (n > best_n)
      {
        best = cluster;
        best_n = n;
      }
    out[strain] = best;
  }
  return out;
}

inline void run_gwas(const RunConfig &cfg, const std::string &assignments, std::string drug,
                     const fs::path &out, Timing &timing)
{
  const auto by_strain = strain_labels(read_labels(assignments), drug);
  const auto raw = load_snps(cfg.snps);

  // Keep strains that have both genotypes and a label, in SNP-file order.
  SnpMatrix matched;
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < raw.n(); ++i)
  {
    const auto it = by_strain.find(raw.strains[i]);
    if (it == by_strain.end())
      continue;
    rows.push_back(static_cast<Eigen::Index>(i));
    matched.strains.push_back(raw.strains[i]);
    labels.push_back(it->second);
  }
  if (rows.size() < raw.n())
    warn(std::to_string(raw.n() - rows.size()) + " genotyped strains have no " + drug +
         " label and were dropped");
  if (rows.empty())
    throw ValidationError("no strain has both genotypes and a label");
  matched.variant_ids = raw.variant_ids;
  matched.positions = raw.positions;
  matched.genotypes.resize(static_cast<Eigen::Index>(rows.size()), raw.genotypes.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    matched.genotypes.row(static_cast<Eigen::Index>(r)) = raw.genotypes.row(rows[r]);

  const auto snps = filter_snps(matched, cfg.maf, cfg.max_variants);
  if (snps.p() == 0)
    throw ValidationError("no variants pass the minor-allele-frequency filter");
  const auto grm = compute_grm(snps);
  const auto start = std::chrono::steady_clock::now();
  const auto trace = run_gwas_chain(labels, snps, grm, cfg.gwas, cfg.seed);
  timing.add("gwas/" + drug,
             std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  const auto result = summarize_gwas(trace, cfg.gwas, snps);
  write(out / "gwas_results.csv", gwas_results_csv(result));
  write(out / "manhattan.csv", manhattan_csv(result));
  write(out / "manhattan.svg", manhattan_svg(result));
  Json summary{{"version", kVersion},
               {"drug", drug},
               {"strains", snps.n()},
               {"variants", snps.p()},
               {"classes", result.class_labels},
               {"reference_class", result.class_labels.front()},
               {"draws", trace.gamma.size()},
               {"sigma_u2_mean", result.sigma_u2_mean},
               {"jump_acceptance", trace.jump_acceptance},
               {"threshold", result.threshold},
               {"significance_rule", "posterior inclusion probability >= threshold"},
               {"significant", Json::array()}};
  for (const auto &v : result.variants)
    if (v.significant)
      summary["significant"].push_back(v.variant_id);
  write(out / "gwas_summary.json", dump_json(summary));
}

inline void run_simulate(const RunConfig &cfg, const fs::path &out)
{
  const auto &s = cfg.sim;
  SimSpec spec{DrugGrid(s.drug, s.dilutions), s.n, s.weights, s.means, s.sds, std::nullopt};
  if (s.strains > 0)
    spec.strain_structure = StrainStructure{s.strains, s.replicates, s.strain_sd};
  const auto sim = simulate_with_truth(spec, cfg.seed);
  write(out / "grids.csv", grids_to_csv(sim.dataset.grids()));
  write(out / "mic.csv", dataset_to_csv(sim.dataset));
  std::ostringstream truth;
  truth << "strain_id,drug,component,latent_log2\n";
  const auto &obs = sim.dataset.observations();
  for (std::size_t i = 0; i < obs.size(); ++i)
    truth << obs[i].strain_id << ',' << obs[i].drug_code << ',' << sim.component[i] + 1 << ','
          << csv::format_double(sim.latent[i]) << '\n';
  write(out / "truth_components.csv", truth.str());
}

inline std::vector<std::pair<std::string, std::string>> parse_label_args(
    const std::vector<std::string> &args)
{
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &a : args)
  {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == a.size())
      throw ConfigError("--labels expects METHOD=path, got '" + a + "'");
    const auto path = a.substr(eq + 1);
    if (!fs::exists(path))
      throw ConfigError("label file not found: " + path);
    out.emplace_back(a.substr(0, eq), path);
  }
  return out;
}

} // namespace detail

// Runs the configured stage(s) and writes all artifacts under cfg.out.
inline void execute(const RunConfig &cfg)
{
  // Argument errors surface before anything is written.
  const auto eval_labels = cfg.subcommand == "eval"
                               ? detail::parse_label_args(cfg.labels)
                               : std::vector<std::pair<std::string, std::string>>{};
  const auto out = detail::prepare_out(cfg.out);
  detail::write(out / "run_config.json", dump_json(run_config_json(cfg)));
  detail::Timing timing;

  if (cfg.subcommand == "simulate")
    detail::run_simulate(cfg, out);
  else if (cfg.subcommand == "fit")
    detail::run_fit(cfg, out, timing);
  else if (cfg.subcommand == "postprocess")
    detail::run_postprocess(cfg.fit_dir, out);
  else if (cfg.subcommand == "ecoff")
    detail::run_ecoff(cfg, out);
  else if (cfg.subcommand == "eval")
    detail::run_eval(eval_labels, cfg.truth, out);
  else if (cfg.subcommand == "gwas")
    detail::run_gwas(cfg, cfg.assignments, cfg.gwas_drug, out, timing);
  else if (cfg.subcommand == "pipeline")
  {
    const auto fit_dir = detail::prepare_out((out / "fit").string());
    const auto post_dir = detail::prepare_out((out / "postprocess").string());
    detail::run_fit(cfg, fit_dir, timing);
    const auto post = detail::run_postprocess(fit_dir, post_dir);
    std::vector<std::pair<std::string, std::string>> labels;
    {
      // One combined label file per method so eval sees every drug.
      std::ostringstream merged;
      bool header = false;
      for (const auto &[drug, path] : post.assignment_files)
        for (const auto &line : csv::read_lines(path))
        {
          const auto f = csv::split(line.text);
          if (line.number == 1)
          {
            if (!header)
              merged << "strain_id,drug,map_cluster,susceptible\n";
            header = true;
            continue;
          }
          merged << f[0] << ',' << f[1] << ',' << f[2] << ',' << f[3] << '\n';
        }
      const auto merged_path = post_dir / ("labels_" + cfg.method + ".csv");
      detail::write(merged_path, merged.str());
      labels.emplace_back(cfg.method, merged_path.string());
    }
    if (cfg.with_ecoff)
    {
      const auto ecoff_dir = detail::prepare_out((out / "ecoff").string());
      std::map<std::string, std::ostringstream> per_q;
      for (const auto &[key, path] : detail::run_ecoff(cfg, ecoff_dir))
      {
        const auto q = key.substr(key.find('@') + 1);
        auto &m = per_q[q];
        for (const auto &line : csv::read_lines(path))
        {
          if (line.number == 1)
            continue;
          const auto f = csv::split(line.text);
          m << f[0] << ',' << f[1] << ',' << f[2] << ',' << f[3] << '\n';
        }
      }
      for (auto &[q, body] : per_q)
      {
        const auto path = ecoff_dir / ("labels_ecoff_q" + q + ".csv");
        detail::write(path, "strain_id,drug,map_cluster,susceptible\n" + body.str());
        labels.emplace_back("ECOFF_" + q, path.string());
      }
    }
    if (!cfg.truth.empty())
      detail::run_eval(labels, cfg.truth, detail::prepare_out((out / "eval").string()));
    if (!cfg.snps.empty())
    {
      std::string drug = cfg.gwas_drug;
      if (drug.empty())
      {
        if (post.assignment_files.size() != 1)
          throw ConfigError("pipeline covers several drugs; choose the GWAS drug with --gwas-drug");
        drug = post.assignment_files.begin()->first;
      }
      const auto it = post.assignment_files.find(drug);
      if (it == post.assignment_files.end())
        throw ConfigError("--gwas-drug " + drug + " was not fitted");
      detail::run_gwas(cfg, it->second, drug, detail::prepare_out((out / "gwas").string()), timing);
    }
  }
  if (!timing.entries.empty())
    detail::write(out / "timing.json", dump_json(timing.entries));
}

// Entry point used by the executable; maps failures to the exit-code contract.
inline int main(int argc, const char *const *argv)
{
  detail::Parser p;
  try
  {
    p.app.parse(argc, argv);
  }
  catch (const CLI::Success &e)
  {
    return p.app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    p.app.exit(e);
    return static_cast<int>(ExitCode::config);
  }
  try
  {
    detail::finalize(p);
    execute(p.cfg);
    return static_cast<int>(ExitCode::ok);
  }
  catch (const Error &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::runtime);
  }
}

} // namespace micmix::cli
