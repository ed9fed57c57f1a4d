#pragma once

// Classification accuracy against external truth: true-positive rates on
// strains carrying known resistance variants, true-negative rates on
// replicated susceptible controls. Percentages are printed with three
// decimals, one row per drug, one column per labeling method.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "micmix/csv.hpp"
#include "micmix/error.hpp"
#include "micmix/log.hpp"

namespace micmix
{

enum class TruthKind
{
  resistant_by_variant,
  susceptible_control,
};

inline std::string to_string(TruthKind kind)
{
  return kind == TruthKind::resistant_by_variant ? "resistant_by_variant" : "susceptible_control";
}

struct TruthSet
{
  TruthKind kind = TruthKind::resistant_by_variant;
  std::map<std::string, std::set<std::string>> strains_by_drug;
};

// One labeled isolate (or replicate). Cluster 1 is susceptible; ECOFF
// labels use 1 = susceptible, 2 = resistant.
struct LabelRow
{
  std::string strain_id;
  std::string drug;
  int map_cluster = 1;
};

using LabelSet = std::vector<LabelRow>;

struct RateRow
{
  std::string drug;
  std::size_t hits = 0;
  std::size_t total = 0;
  std::map<int, std::size_t> per_cluster;

  double percent() const { return 100.0 * static_cast<double>(hits) / static_cast<double>(total); }
};

// `drug,strain_id,kind`; returns one TruthSet per kind present.
inline std::map<TruthKind, TruthSet> load_truth(const std::string &path)
{
  const auto lines = csv::read_lines(path);
  if (lines.empty())
    throw ParseError("truth file is empty: " + path);
  const auto header = csv::split(lines[0].text);
  if (header.size() < 3 || header[0] != "drug" || header[1] != "strain_id" || header[2] != "kind")
    throw ParseError("truth header must be drug,strain_id,kind", lines[0].number);
  std::map<TruthKind, TruthSet> out;
  for (std::size_t li = 1; li < lines.size(); ++li)
  {
    const auto f = csv::split(lines[li].text);
    if (f.size() < 3)
      throw ParseError("expected 3 fields", lines[li].number);
    TruthKind kind;
    if (f[2] == "resistant_by_variant")
      kind = TruthKind::resistant_by_variant;
    else if (f[2] == "susceptible_control")
      kind = TruthKind::susceptible_control;
    else
      throw ParseError("unknown truth kind '" + f[2] + "'", lines[li].number);
    auto &set = out[kind];
    set.kind = kind;
    set.strains_by_drug[f[0]].insert(f[1]);
  }
  return out;
}

namespace detail
{

inline std::vector<RateRow> rate_table(const LabelSet &labels, const TruthSet &truth,
                                       bool count_resistant)
{
  std::map<std::string, RateRow> rows;
  std::map<std::string, std::set<std::string>> seen;
  for (const auto &row : labels)
  {
    const auto it = truth.strains_by_drug.find(row.drug);
    if (it == truth.strains_by_drug.end() || !it->second.count(row.strain_id))
      continue;
    auto &r = rows[row.drug];
    r.drug = row.drug;
    ++r.total;
    ++r.per_cluster[row.map_cluster];
    const bool resistant = row.map_cluster >= 2;
    if (resistant == count_resistant)
      ++r.hits;
    seen[row.drug].insert(row.strain_id);
  }
  std::set<std::string> labeled_drugs;
  for (const auto &row : labels)
    labeled_drugs.insert(row.drug);
  std::vector<RateRow> out;
  for (const auto &drug : labeled_drugs)
  {
    const auto it = truth.strains_by_drug.find(drug);
    if (it == truth.strains_by_drug.end() || it->second.empty())
    {
      warn("no " + to_string(truth.kind) + " truth strains for " + drug + "; row omitted");
      continue;
    }
    for (const auto &strain : it->second)
      if (!seen[drug].count(strain))
        throw ValidationError("truth strain " + strain + " has no label for " + drug);
    out.push_back(rows.at(drug));
  }
  return out;
}

} // namespace detail

// Percentage of variant-carrying strains placed in any cluster above the first.
inline std::vector<RateRow> true_positive_rate(const LabelSet &labels, const TruthSet &truth)
{
  if (truth.kind != TruthKind::resistant_by_variant)
    throw ValidationError("true_positive_rate needs a resistant_by_variant truth set");
  return detail::rate_table(labels, truth, true);
}

// Percentage of control replicates placed in the first (susceptible) cluster.
inline std::vector<RateRow> true_negative_rate(const LabelSet &labels, const TruthSet &truth)
{
  if (truth.kind != TruthKind::susceptible_control)
    throw ValidationError("true_negative_rate needs a susceptible_control truth set");
  return detail::rate_table(labels, truth, false);
}

struct MethodRates
{
  std::string method;
  std::vector<RateRow> rows;
};

// `DRUG,<method>,...` with percentages to three decimals; drugs missing for
// a method are left blank.
inline std::string format_rate_table(const std::vector<MethodRates> &methods)
{
  std::set<std::string> drugs;
  for (const auto &m : methods)
    for (const auto &r : m.rows)
      drugs.insert(r.drug);
  std::ostringstream out;
  out << "DRUG";
  for (const auto &m : methods)
    out << ',' << m.method;
  out << '\n';
  for (const auto &drug : drugs)
  {
    out << drug;
    for (const auto &m : methods)
    {
      out << ',';
      for (const auto &r : m.rows)
        if (r.drug == drug)
          out << csv::format_fixed(r.percent(), 3);
    }
    out << '\n';
  }
  return out.str();
}

// Long-form breakdown: share of truth isolates per cluster level.
inline std::string format_level_breakdown(const std::vector<MethodRates> &methods)
{
  std::ostringstream out;
  out << "method,drug,cluster,count,percent\n";
  for (const auto &m : methods)
    for (const auto &r : m.rows)
      for (const auto &[cluster, count] : r.per_cluster)
        out << m.method << ',' << r.drug << ',' << cluster << ',' << count << ','
            << csv::format_fixed(100.0 * static_cast<double>(count) / static_cast<double>(r.total),
                                 3)
            << '\n';
  return out.str();
}

} // namespace micmix
