#pragma once

// On-disk artifacts: traces, allocation samples, run metadata, assignments,
// posterior K tables and diagnostics. Numbers are written in shortest
// round-trip form so that reruns are byte-identical.

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "micmix/baselines.hpp"
#include "micmix/cgmm.hpp"
#include "micmix/csv.hpp"
#include "micmix/error.hpp"
#include "micmix/eval.hpp"
#include "micmix/postprocess.hpp"

#ifndef MICMIX_VERSION
#define MICMIX_VERSION "0.1.0"
#endif

namespace micmix
{

using Json = nlohmann::ordered_json;

inline constexpr const char *kVersion = MICMIX_VERSION;

// ---------------------------------------------------------------------------
// Traces

inline std::string trace_to_csv(const TraceSet &trace)
{
  std::ostringstream out;
  out << "iter,K,Kplus,weights,means,sds,loglik\n";
  for (const auto &d : trace.draws)
    out << d.iter << ',' << d.k << ',' << d.k_plus << ',' << csv::join(d.weights) << ','
        << csv::join(d.means) << ',' << csv::join(d.sds) << ',' << csv::format_double(d.loglik)
        << '\n';
  return out.str();
}

// One row per retained draw, 1-based cluster labels joined by ';'.
inline std::string allocations_to_csv(const TraceSet &trace)
{
  std::ostringstream out;
  out << "iter,allocations\n";
  for (const auto &d : trace.draws)
  {
    out << d.iter << ',';
    for (std::size_t i = 0; i < d.alloc.size(); ++i)
      out << (i ? ";" : "") << static_cast<int>(d.alloc[i]) + 1;
    out << '\n';
  }
  return out.str();
}

inline TraceSet read_trace_csv(const std::string &trace_path, const std::string &alloc_path = "")
{
  TraceSet trace;
  const auto lines = csv::read_lines(trace_path);
  if (lines.empty() || csv::split(lines[0].text) !=
                           std::vector<std::string>{"iter", "K", "Kplus", "weights", "means",
                                                    "sds", "loglik"})
    throw ParseError("trace header must be iter,K,Kplus,weights,means,sds,loglik in " + trace_path);
  for (std::size_t li = 1; li < lines.size(); ++li)
  {
    const auto f = csv::split(lines[li].text);
    const auto ln = lines[li].number;
    if (f.size() != 7)
      throw ParseError("expected 7 fields in " + trace_path, ln);
    Draw d;
    d.iter = csv::require_int(f[0], ln, "iter");
    d.k = static_cast<int>(csv::require_int(f[1], ln, "K"));
    d.k_plus = static_cast<int>(csv::require_int(f[2], ln, "Kplus"));
    d.weights = csv::split_doubles(f[3], ln);
    d.means = csv::split_doubles(f[4], ln);
    d.sds = csv::split_doubles(f[5], ln);
    d.loglik = csv::require_double(f[6], ln, "loglik");
    if (d.k < 1 || d.k > 255 || d.weights.size() != static_cast<std::size_t>(d.k) ||
        d.means.size() != d.weights.size() || d.sds.size() != d.weights.size())
      throw ParseError("component lists disagree with K", ln);
    trace.draws.push_back(std::move(d));
  }
  if (alloc_path.empty())
    return trace;
  const auto alines = csv::read_lines(alloc_path);
  if (alines.empty() || alines[0].text != "iter,allocations")
    throw ParseError("allocation header must be iter,allocations in " + alloc_path);
  if (alines.size() - 1 != trace.draws.size())
    throw ValidationError("allocation file " + alloc_path + " has a different draw count");
  for (std::size_t li = 1; li < alines.size(); ++li)
  {
    const auto f = csv::split(alines[li].text);
    const auto ln = alines[li].number;
    auto &d = trace.draws[li - 1];
    if (f.size() != 2 || csv::require_int(f[0], ln, "iter") != d.iter)
      throw ParseError("allocation row does not match trace iteration", ln);
    for (const auto &z : csv::split(f[1], ';'))
    {
      const auto v = csv::require_int(z, ln, "allocation");
      if (v < 1 || v > d.k)
        throw ParseError("allocation outside 1..K", ln);
      d.alloc.push_back(static_cast<std::uint8_t>(v - 1));
    }
    if (trace.n == 0)
      trace.n = d.alloc.size();
    if (d.alloc.size() != trace.n)
      throw ParseError("allocation rows differ in length", ln);
  }
  return trace;
}

inline Json prior_json(const PriorConfig &p)
{
  return Json{{"mu0", p.mu0},         {"tau2", p.tau2},           {"prec_shape", p.prec_shape},
              {"prec_rate", p.prec_rate}, {"delta", p.delta},     {"bnb_alpha", p.bnb_alpha},
              {"bnb_beta", p.bnb_beta}, {"k_max", p.k_max}};
}

inline Json fit_json(const FitConfig &f)
{
  return Json{{"iterations", f.iterations}, {"burnin", f.burnin},
              {"thin", f.thin},             {"seed", f.seed},
              {"chains", f.chains},         {"strain_effects", f.strain_effects},
              {"strain_sd", f.strain_sd},   {"k_init", f.k_init}};
}

inline Json dp_json(const DpConfig &dp)
{
  Json j{{"conc_shape", dp.conc_shape},
         {"conc_rate", dp.conc_rate},
         {"auxiliary", dp.auxiliary},
         {"fixed_concentration", nullptr},
         {"initial_concentration", dp.initial_concentration},
         {"settings_source", "package defaults (no published DP settings)"}};
  if (dp.fixed_concentration)
    j["fixed_concentration"] = *dp.fixed_concentration;
  return j;
}

// Run metadata without wall time, which lives in a separate timing file so
// that reruns stay byte-identical.
inline Json trace_metadata(const TraceSet &trace, const PriorConfig &priors, const FitConfig &fit,
                           const DpConfig *dp = nullptr)
{
  Json j{{"version", kVersion},  {"method", trace.method},  {"drug", trace.drug},
         {"seed", trace.seed},   {"chain", trace.chain},    {"n", trace.n},
         {"sweeps", trace.sweeps}, {"draws", trace.draws.size()},
         {"acceptance_rate", trace.acceptance_rate}, {"priors", prior_json(priors)},
         {"fit", fit_json(fit)}};
  if (dp)
    j["dp"] = dp_json(*dp);
  return j;
}

// ---------------------------------------------------------------------------
// Assignments

inline std::string assignments_to_csv(const ClusterAssignment &a, const DrugData &data)
{
  if (a.map_cluster.size() != data.size())
    throw ValidationError("assignment and data sizes differ");
  std::ostringstream out;
  out << "strain_id,drug,map_cluster,susceptible";
  for (int c = 1; c <= a.k_mode; ++c)
    out << ",p_" << c;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i)
  {
    out << data.strain_ids[i] << ',' << data.grid.drug_code() << ',' << a.map_cluster[i] << ','
        << (a.susceptible[i] ? 1 : 0);
    for (double p : a.probabilities[i])
      out << ',' << csv::format_double(p);
    out << '\n';
  }
  return out.str();
}

// Binary labels (ECOFF) in the same layout: cluster 2 = resistant.
inline std::string binary_labels_to_csv(const std::vector<bool> &resistant, const DrugData &data)
{
  std::ostringstream out;
  out << "strain_id,drug,map_cluster,susceptible,p_1,p_2\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    out << data.strain_ids[i] << ',' << data.grid.drug_code() << ',' << (resistant[i] ? 2 : 1)
        << ',' << (resistant[i] ? "0,0,1" : "1,1,0") << '\n';
  return out.str();
}

inline LabelSet read_labels(const std::string &path)
{
  const auto lines = csv::read_lines(path);
  if (lines.empty())
    throw ParseError("label file is empty: " + path);
  const auto header = csv::split(lines[0].text);
  if (header.size() < 3 || header[0] != "strain_id" || header[1] != "drug" ||
      header[2] != "map_cluster")
    throw ParseError("label header must start with strain_id,drug,map_cluster", lines[0].number);
  LabelSet out;
  for (std::size_t li = 1; li < lines.size(); ++li)
  {
    const auto f = csv::split(lines[li].text);
    if (f.size() < 3)
      throw ParseError("expected at least 3 fields", lines[li].number);
    const auto cluster = csv::require_int(f[2], lines[li].number, "map_cluster");
    if (cluster < 1)
      throw ParseError("map_cluster must be >= 1", lines[li].number);
    out.push_back({f[0], f[1], static_cast<int>(cluster)});
  }
  return out;
}

inline std::string posterior_k_to_csv(const PosteriorK &pk)
{
  std::ostringstream out;
  out << "Kplus,probability,mode\n";
  for (const auto &[k, p] : pk.pmf)
    out << k << ',' << csv::format_double(p) << ',' << (k == pk.mode ? 1 : 0) << '\n';
  return out.str();
}

inline Json diagnostics_json(const DiagnosticsReport &report)
{
  Json params = Json::array();
  for (const auto &p : report.parameters)
    params.push_back(Json{{"name", p.name}, {"ess", p.ess}, {"rhat", p.rhat}, {"geweke_z", p.geweke}});
  return Json{{"chains", report.chains},
              {"draws_per_chain", report.draws_per_chain},
              {"acceptance_rate", report.acceptance_rate},
              {"max_rhat", report.max_rhat()},
              {"parameters", params}};
}

inline std::string dump_json(const Json &j)
{
  return j.dump(2) + "\n";
}

} // namespace micmix
