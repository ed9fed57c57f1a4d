#pragma once

// Dilution grids, censored MIC observations, CSV ingestion and a synthetic
// generator. Everything is on the log2(mg/L) scale; mg/L only appears when
// reading or writing files.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "micmix/csv.hpp"
#include "micmix/error.hpp"
#include "micmix/log.hpp"
#include "micmix/stats.hpp"

namespace micmix
{

// Ascending ladder of tested log2 concentrations d_1..d_T. Observation
// index j in 1..T means the latent value lies in [d_{j-1}, d_j) (with
// d_0 = -inf); index T+1 is the right-censor label (growth in every well).
class DrugGrid
{
public:
  DrugGrid() = default;

  DrugGrid(std::string drug_code, std::vector<double> tested_log2,
           std::optional<double> censor_label_log2 = std::nullopt)
      : drug_code_(std::move(drug_code)), tested_(std::move(tested_log2))
  {
    if (drug_code_.empty())
      throw ValidationError("grid without drug code");
    if (tested_.empty())
      throw ValidationError("grid for " + drug_code_ + " has no dilutions");
    for (double d : tested_)
      if (!std::isfinite(d))
        throw ValidationError("grid for " + drug_code_ + " has a non-finite dilution");
    for (std::size_t j = 1; j < tested_.size(); ++j)
    {
      const double step = tested_[j] - tested_[j - 1];
      if (!(step > 0.0))
        throw ValidationError("grid for " + drug_code_ + " is not strictly ascending");
      if (std::abs(step - 1.0) > 1e-9)
        irregular_ = true;
    }
    if (irregular_)
      warn("grid for " + drug_code_ + " is irregular (not double dilutions)");
    censor_label_ = censor_label_log2.value_or(tested_.back() + 1.0);
    if (!(censor_label_ > tested_.back()))
      throw ValidationError("censor label for " + drug_code_ + " must exceed the top dilution");
  }

  const std::string &drug_code() const { return drug_code_; }
  const std::vector<double> &tested_log2() const { return tested_; }
  double censor_label_log2() const { return censor_label_; }
  bool irregular() const { return irregular_; }

  // T, the number of tested concentrations.
  int tested_count() const { return static_cast<int>(tested_.size()); }
  // T + 1 observable cells.
  int cell_count() const { return tested_count() + 1; }

  double lowest() const { return tested_.front(); }
  double highest() const { return tested_.back(); }

  // log2 value a laboratory records for a 1-based index.
  double recorded_log2(int index) const
  {
    check_index(index);
    return index <= tested_count() ? tested_[index - 1] : censor_label_;
  }

  void check_index(int index) const
  {
    if (index < 1 || index > cell_count())
      throw ValidationError("dilution index " + std::to_string(index) + " outside 1.." +
                            std::to_string(cell_count()) + " for " + drug_code_);
  }

  friend bool operator==(const DrugGrid &, const DrugGrid &) = default;

private:
  std::string drug_code_;
  std::vector<double> tested_;
  double censor_label_ = 0.0;
  bool irregular_ = false;
};

struct Interval
{
  double lower;
  double upper;

  bool contains(double x) const { return x >= lower && x < upper; }
};

struct MicObservation
{
  std::string strain_id;
  std::string drug_code;
  int dilution_index = 1;
  std::optional<long long> replicate_id;

  friend bool operator==(const MicObservation &, const MicObservation &) = default;
};

// Index of the cell containing a latent log2 value.
inline int censor_to_grid(double log2_value, const DrugGrid &grid)
{
  if (std::isnan(log2_value))
    throw ValidationError("censor_to_grid: NaN value");
  const auto &d = grid.tested_log2();
  // First d_j strictly greater than the value; cell index is its 1-based rank.
  const auto it = std::upper_bound(d.begin(), d.end(), log2_value);
  return static_cast<int>(it - d.begin()) + 1;
}

// Latent interval implied by an observed index.
inline Interval interval_bounds(int index, const DrugGrid &grid)
{
  grid.check_index(index);
  const auto &d = grid.tested_log2();
  const int T = grid.tested_count();
  if (index == 1)
    return {-kInf, d.front()};
  if (index == T + 1)
    return {d.back(), kInf};
  return {d[index - 2], d[index - 1]};
}

inline Interval interval_bounds(const MicObservation &obs, const DrugGrid &grid)
{
  if (obs.drug_code != grid.drug_code())
    throw ValidationError("observation for " + obs.drug_code + " paired with grid " +
                          grid.drug_code());
  return interval_bounds(obs.dilution_index, grid);
}

// Recorded MIC values are grid concentrations: the first inhibiting well,
// d_1 when every well inhibits, the censor label when none does. Values are
// snapped to a grid point within this tolerance (plates print rounded mg/L,
// e.g. 0.06 for 2^-4).
inline constexpr double kRecordedSnapLog2 = 0.1;

inline int recorded_to_grid(double log2_value, const DrugGrid &grid)
{
  if (!std::isfinite(log2_value))
    throw ValidationError("unmappable MIC value for " + grid.drug_code());
  const auto &d = grid.tested_log2();
  if (log2_value > d.back() + kRecordedSnapLog2)
    return grid.tested_count() + 1;
  for (int j = 0; j < grid.tested_count(); ++j)
    if (log2_value <= d[j] + kRecordedSnapLog2)
      return j + 1;
  return grid.tested_count() + 1;
}

class MicDataset
{
public:
  MicDataset() = default;
  MicDataset(std::vector<MicObservation> observations, std::map<std::string, DrugGrid> grids)
      : observations_(std::move(observations)), grids_(std::move(grids))
  {
    for (const auto &obs : observations_)
    {
      const auto it = grids_.find(obs.drug_code);
      if (it == grids_.end())
        throw ValidationError("no grid for drug " + obs.drug_code);
      it->second.check_index(obs.dilution_index);
    }
  }

  const std::vector<MicObservation> &observations() const { return observations_; }
  const std::map<std::string, DrugGrid> &grids() const { return grids_; }

  const DrugGrid &grid(const std::string &drug) const
  {
    const auto it = grids_.find(drug);
    if (it == grids_.end())
      throw ValidationError("unknown drug code " + drug);
    return it->second;
  }

  std::map<std::string, std::size_t> counts_by_drug() const
  {
    std::map<std::string, std::size_t> counts;
    for (const auto &obs : observations_)
      ++counts[obs.drug_code];
    return counts;
  }

  std::vector<std::string> drugs() const
  {
    std::vector<std::string> out;
    for (const auto &[code, n] : counts_by_drug())
      out.push_back(code);
    return out;
  }

private:
  std::vector<MicObservation> observations_;
  std::map<std::string, DrugGrid> grids_;
};

// Single-drug view consumed by the samplers.
struct DrugData
{
  DrugGrid grid;
  std::vector<int> index;               // 1-based dilution index per observation
  std::vector<std::string> strain_ids;  // per observation
  std::vector<int> strain_of;           // dense strain number per observation
  std::vector<std::string> strains;     // dense strain number -> id

  std::size_t size() const { return index.size(); }
  std::size_t strain_count() const { return strains.size(); }

  Interval bounds(std::size_t i) const { return interval_bounds(index[i], grid); }
};

inline DrugData drug_data(const MicDataset &data, const std::string &drug)
{
  DrugData out{data.grid(drug), {}, {}, {}, {}};
  std::map<std::string, int> strain_number;
  for (const auto &obs : data.observations())
  {
    if (obs.drug_code != drug)
      continue;
    out.index.push_back(obs.dilution_index);
    out.strain_ids.push_back(obs.strain_id);
    const auto [it, inserted] =
        strain_number.emplace(obs.strain_id, static_cast<int>(out.strains.size()));
    if (inserted)
      out.strains.push_back(obs.strain_id);
    out.strain_of.push_back(it->second);
  }
  if (out.index.empty())
    throw ValidationError("no observations for drug " + drug);
  return out;
}

// ---------------------------------------------------------------------------
// File ingestion

// Rows: `DRUG,d1,d2,...` in log2 units. An optional header starting with
// `drug` may name `censor_label` as its second column, in which case the
// second field of every row is that drug's censor label (blank = d_T + 1).
inline std::map<std::string, DrugGrid> load_dilution_grid(const std::string &path)
{
  const auto lines = csv::read_lines(path);
  std::map<std::string, DrugGrid> grids;
  bool has_censor_column = false;
  for (std::size_t li = 0; li < lines.size(); ++li)
  {
    const auto fields = csv::split(lines[li].text);
    const auto line_no = lines[li].number;
    std::string first = fields[0];
    std::transform(first.begin(), first.end(), first.begin(), ::tolower);
    if (li == 0 && first == "drug")
    {
      has_censor_column = fields.size() > 1 && fields[1] == "censor_label";
      continue;
    }
    if (fields[0].empty())
      throw ParseError("missing drug code", line_no);
    std::size_t start = 1;
    std::optional<double> censor;
    if (has_censor_column)
    {
      if (fields.size() < 2)
        throw ParseError("missing censor_label field", line_no);
      if (!fields[1].empty())
        censor = csv::require_double(fields[1], line_no, "censor_label");
      start = 2;
    }
    std::vector<double> dilutions;
    for (std::size_t f = start; f < fields.size(); ++f)
    {
      if (fields[f].empty())
        continue;
      dilutions.push_back(csv::require_double(fields[f], line_no, "dilution"));
    }
    if (grids.count(fields[0]))
      throw ParseError("duplicate grid for " + fields[0], line_no);
    try
    {
      grids.emplace(fields[0], DrugGrid(fields[0], std::move(dilutions), censor));
    }
    catch (const ValidationError &e)
    {
      throw ValidationError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
  }
  if (grids.empty())
    throw ParseError("grid file has no rows: " + path);
  return grids;
}

enum class MicColumn
{
  mg_per_litre,
  log2,
  dilution_index,
};

// Header `strain_id,drug,<mic column>[,replicate_id]` where the MIC column is
// one of mic_mgL, log2_mic or dilution_index.
inline MicDataset load_mic_dataset(const std::string &path,
                                   const std::map<std::string, DrugGrid> &grids)
{
  const auto lines = csv::read_lines(path);
  if (lines.empty())
    throw ParseError("MIC file is empty: " + path);
  const auto header = csv::split(lines[0].text);
  if (header.size() < 3 || header[0] != "strain_id" || header[1] != "drug")
    throw ParseError("MIC header must start with strain_id,drug", lines[0].number);
  MicColumn mode;
  if (header[2] == "mic_mgL")
    mode = MicColumn::mg_per_litre;
  else if (header[2] == "log2_mic")
    mode = MicColumn::log2;
  else if (header[2] == "dilution_index")
    mode = MicColumn::dilution_index;
  else
    throw ParseError("unknown MIC column '" + header[2] + "'", lines[0].number);
  const bool has_replicate = header.size() > 3 && header[3] == "replicate_id";

  std::vector<MicObservation> observations;
  observations.reserve(lines.size());
  for (std::size_t li = 1; li < lines.size(); ++li)
  {
    const auto &line = lines[li];
    const auto fields = csv::split(line.text);
    if (fields.size() < 3)
      throw ParseError("expected at least 3 fields", line.number);
    MicObservation obs;
    obs.strain_id = fields[0];
    obs.drug_code = fields[1];
    const auto it = grids.find(obs.drug_code);
    if (it == grids.end())
      throw ValidationError("unknown drug code '" + obs.drug_code + "' (line " +
                            std::to_string(line.number) + ")");
    const DrugGrid &grid = it->second;
    try
    {
      switch (mode)
      {
      case MicColumn::mg_per_litre:
      {
        const double mgl = csv::require_double(fields[2], line.number, "mic_mgL");
        if (!(mgl > 0.0))
          throw ValidationError("MIC must be positive in mg/L mode");
        obs.dilution_index = recorded_to_grid(std::log2(mgl), grid);
        break;
      }
      case MicColumn::log2:
        obs.dilution_index =
            recorded_to_grid(csv::require_double(fields[2], line.number, "log2_mic"), grid);
        break;
      case MicColumn::dilution_index:
      {
        const auto idx = csv::require_int(fields[2], line.number, "dilution_index");
        grid.check_index(static_cast<int>(idx));
        obs.dilution_index = static_cast<int>(idx);
        break;
      }
      }
    }
    catch (const ValidationError &e)
    {
      throw ValidationError(std::string(e.what()) + " (line " + std::to_string(line.number) + ")");
    }
    if (has_replicate && fields.size() > 3 && !fields[3].empty())
      obs.replicate_id = csv::require_int(fields[3], line.number, "replicate_id");
    observations.push_back(std::move(obs));
  }
  return MicDataset(std::move(observations), grids);
}

inline std::string grids_to_csv(const std::map<std::string, DrugGrid> &grids)
{
  std::ostringstream out;
  out << "drug,censor_label,dilutions\n";
  for (const auto &[code, grid] : grids)
  {
    out << code << ',' << csv::format_double(grid.censor_label_log2());
    for (double d : grid.tested_log2())
      out << ',' << csv::format_double(d);
    out << '\n';
  }
  return out.str();
}

inline std::string dataset_to_csv(const MicDataset &data)
{
  bool any_replicate = false;
  for (const auto &obs : data.observations())
    any_replicate = any_replicate || obs.replicate_id.has_value();
  std::ostringstream out;
  out << "strain_id,drug,dilution_index" << (any_replicate ? ",replicate_id" : "") << '\n';
  for (const auto &obs : data.observations())
  {
    out << obs.strain_id << ',' << obs.drug_code << ',' << obs.dilution_index;
    if (any_replicate)
    {
      out << ',';
      if (obs.replicate_id)
        out << *obs.replicate_id;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Synthetic data

struct StrainStructure
{
  std::size_t strains = 0;
  std::size_t replicates_per_strain = 1;
  double strain_sd = 0.0;
};

struct SimSpec
{
  DrugGrid grid;
  std::size_t n = 0;
  std::vector<double> weights;
  std::vector<double> means_log2;
  std::vector<double> sds_log2;
  std::optional<StrainStructure> strain_structure;

  void validate() const
  {
    if (weights.empty() || weights.size() != means_log2.size() ||
        weights.size() != sds_log2.size())
      throw ValidationError("SimSpec: weights, means and sds must have equal nonzero length");
    double total = 0.0;
    for (double w : weights)
    {
      if (!(w >= 0.0))
        throw ValidationError("SimSpec: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ValidationError("SimSpec: weights must sum to 1");
    for (double s : sds_log2)
      if (!(s > 0.0))
        throw ValidationError("SimSpec: standard deviations must be positive");
    if (strain_structure && (strain_structure->strains == 0 ||
                             strain_structure->replicates_per_strain == 0 ||
                             strain_structure->strain_sd < 0.0))
      throw ValidationError("SimSpec: invalid strain structure");
  }
};

struct SimulatedData
{
  MicDataset dataset;
  std::vector<int> component;  // 0-based true component per observation
  std::vector<double> latent;  // true latent log2 value per observation
};

inline SimulatedData simulate_with_truth(const SimSpec &spec, std::uint64_t seed)
{
  spec.validate();
  Rng rng = make_rng(seed);
  std::vector<double> cumulative(spec.weights.size());
  std::partial_sum(spec.weights.begin(), spec.weights.end(), cumulative.begin());

  SimulatedData out;
  std::vector<MicObservation> observations;
  const auto &code = spec.grid.drug_code();
  auto strain_name = [](std::size_t s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "S%06zu", s + 1);
    return std::string(buf);
  };

  if (spec.strain_structure)
  {
    const auto &ss = *spec.strain_structure;
    for (std::size_t s = 0; s < ss.strains; ++s)
    {
      const auto k = categorical_from_cumulative(cumulative, rng);
      const double effect = ss.strain_sd > 0.0 ? ss.strain_sd * std_normal(rng) : 0.0;
      for (std::size_t r = 0; r < ss.replicates_per_strain; ++r)
      {
        const double y = spec.means_log2[k] + effect + spec.sds_log2[k] * std_normal(rng);
        observations.push_back({strain_name(s), code, censor_to_grid(y, spec.grid),
                                static_cast<long long>(r + 1)});
        out.component.push_back(static_cast<int>(k));
        out.latent.push_back(y);
      }
    }
  }
  else
  {
    for (std::size_t i = 0; i < spec.n; ++i)
    {
      const auto k = categorical_from_cumulative(cumulative, rng);
      const double y = spec.means_log2[k] + spec.sds_log2[k] * std_normal(rng);
      observations.push_back({strain_name(i), code, censor_to_grid(y, spec.grid), std::nullopt});
      out.component.push_back(static_cast<int>(k));
      out.latent.push_back(y);
    }
  }
  out.dataset = MicDataset(std::move(observations), {{code, spec.grid}});
  return out;
}

inline MicDataset simulate_dataset(const SimSpec &spec, std::uint64_t seed)
{
  return simulate_with_truth(spec, seed).dataset;
}

} // namespace micmix
