#pragma once

// Categorical (softmax) regression of resistance-level labels on binary
// variants with a spike-and-slab prior on variant effects and a polygenic
// random effect:
//
//   P(class k | i) = softmax_k(eta_i),   eta_{i,1} = 0 (reference class)
//   eta_{ik} = a_k + sum_j x_ij gamma_j b_jk + u_ik,   k >= 2
//   gamma_j ~ Bernoulli(w),  w ~ Beta(a_w, b_w),  b_jk ~ N(0, tau_b^2)
//   u_k ~ N(0, sigma_u^2 Sigma),  sigma_u^2 ~ InvGamma(shape, scale)
//
// Sampler: for each non-reference class the softmax conditional is a
// logistic likelihood with offset log(1 + sum_{l != k} exp eta_il); Polya-
// Gamma augmentation makes a_k, the included b_jk and u_k conditionally
// Gaussian. (gamma_j, b_j.) jumps between the spike and the slab by a
// Metropolis-Hastings move on the exact softmax likelihood whose slab
// proposal is a Laplace approximation built without variant j.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "micmix/csv.hpp"
#include "micmix/error.hpp"
#include "micmix/polya_gamma.hpp"
#include "micmix/stats.hpp"

namespace micmix
{

struct SnpMatrix
{
  std::vector<std::string> strains;
  std::vector<std::string> variant_ids;
  std::vector<long long> positions;
  Eigen::MatrixXd genotypes;  // strains x variants, entries 0/1

  std::size_t n() const { return strains.size(); }
  std::size_t p() const { return variant_ids.size(); }

  void validate() const
  {
    if (static_cast<std::size_t>(genotypes.rows()) != n() ||
        static_cast<std::size_t>(genotypes.cols()) != p() || positions.size() != p())
      throw ValidationError("SNP matrix dimensions are inconsistent");
  }
};

// Long form `strain_id,variant_id,position,allele` (absent pairs are 0) or
// wide form `strain_id,<variant ids...>` whose first data row has strain_id
// `position` and carries the genomic positions.
inline SnpMatrix load_snps(const std::string &path)
{
  const auto lines = csv::read_lines(path);
  if (lines.size() < 2)
    throw ParseError("SNP file has no data: " + path);
  const auto header = csv::split(lines[0].text);
  if (header.empty() || header[0] != "strain_id")
    throw ParseError("SNP header must start with strain_id", lines[0].number);

  SnpMatrix out;
  if (header.size() == 4 && header[1] == "variant_id" && header[2] == "position" &&
      header[3] == "allele")
  {
    std::map<std::string, std::size_t> strain_index, variant_index;
    struct Entry
    {
      std::size_t s, v;
      double allele;
    };
    std::vector<Entry> entries;
    for (std::size_t li = 1; li < lines.size(); ++li)
    {
      const auto f = csv::split(lines[li].text);
      if (f.size() != 4)
        throw ParseError("expected 4 fields", lines[li].number);
      const auto [si, s_new] = strain_index.emplace(f[0], out.strains.size());
      if (s_new)
        out.strains.push_back(f[0]);
      const auto pos = csv::require_int(f[2], lines[li].number, "position");
      const auto [vi, v_new] = variant_index.emplace(f[1], out.variant_ids.size());
      if (v_new)
      {
        out.variant_ids.push_back(f[1]);
        out.positions.push_back(pos);
      }
      else if (out.positions[vi->second] != pos)
        throw ParseError("variant " + f[1] + " listed at two positions", lines[li].number);
      const auto allele = csv::require_int(f[3], lines[li].number, "allele");
      if (allele != 0 && allele != 1)
        throw ParseError("allele must be 0 or 1", lines[li].number);
      entries.push_back({si->second, vi->second, static_cast<double>(allele)});
    }
    out.genotypes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.n()),
                                          static_cast<Eigen::Index>(out.p()));
    for (const auto &e : entries)
      out.genotypes(static_cast<Eigen::Index>(e.s), static_cast<Eigen::Index>(e.v)) = e.allele;
    return out;
  }

  out.variant_ids.assign(header.begin() + 1, header.end());
  const auto pos_row = csv::split(lines[1].text);
  if (pos_row.empty() || pos_row[0] != "position" || pos_row.size() != header.size())
    throw ParseError("wide SNP file needs a `position` row after the header", lines[1].number);
  for (std::size_t v = 1; v < pos_row.size(); ++v)
    out.positions.push_back(csv::require_int(pos_row[v], lines[1].number, "position"));
  std::vector<std::vector<double>> rows;
  for (std::size_t li = 2; li < lines.size(); ++li)
  {
    const auto f = csv::split(lines[li].text);
    if (f.size() != header.size())
      throw ParseError("row width differs from header", lines[li].number);
    out.strains.push_back(f[0]);
    std::vector<double> row;
    for (std::size_t v = 1; v < f.size(); ++v)
    {
      const auto allele = csv::require_int(f[v], lines[li].number, "allele");
      if (allele != 0 && allele != 1)
        throw ParseError("allele must be 0 or 1", lines[li].number);
      row.push_back(static_cast<double>(allele));
    }
    rows.push_back(std::move(row));
  }
  out.genotypes.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(out.p()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t v = 0; v < out.p(); ++v)
      out.genotypes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) = rows[i][v];
  return out;
}

// Orders variants by position, drops those with minor-allele frequency
// below `min_maf` (including monomorphic ones) and keeps at most `cap`.
inline SnpMatrix filter_snps(const SnpMatrix &snps, double min_maf = 0.01,
                             std::size_t cap = 20000)
{
  snps.validate();
  std::vector<std::size_t> order(snps.p());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return snps.positions[a] < snps.positions[b]; });
  std::vector<std::size_t> keep;
  const double n = static_cast<double>(snps.n());
  for (auto v : order)
  {
    const double freq = snps.genotypes.col(static_cast<Eigen::Index>(v)).sum() / n;
    const double maf = std::min(freq, 1.0 - freq);
    if (maf > 0.0 && maf >= min_maf)
      keep.push_back(v);
    if (keep.size() == cap)
      break;
  }
  SnpMatrix out;
  out.strains = snps.strains;
  out.genotypes.resize(static_cast<Eigen::Index>(snps.n()), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
  {
    out.variant_ids.push_back(snps.variant_ids[keep[c]]);
    out.positions.push_back(snps.positions[keep[c]]);
    out.genotypes.col(static_cast<Eigen::Index>(c)) =
        snps.genotypes.col(static_cast<Eigen::Index>(keep[c]));
  }
  return out;
}

// Sigma = Z Z^T / p + ridge I, Z the column-standardized genotypes (mean 0,
// population sd 1); monomorphic columns are skipped.
inline Eigen::MatrixXd compute_grm(const SnpMatrix &snps, double ridge = 1e-6)
{
  snps.validate();
  const auto n = static_cast<Eigen::Index>(snps.n());
  std::vector<Eigen::Index> cols;
  for (Eigen::Index v = 0; v < snps.genotypes.cols(); ++v)
  {
    const auto col = snps.genotypes.col(v);
    if (col.maxCoeff() != col.minCoeff())
      cols.push_back(v);
  }
  if (cols.empty())
    throw ValidationError("compute_grm: no polymorphic variants");
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
  {
    const Eigen::VectorXd col = snps.genotypes.col(cols[c]);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    z.col(static_cast<Eigen::Index>(c)) = (col.array() - mean) / sd;
  }
  Eigen::MatrixXd grm = z * z.transpose() / static_cast<double>(cols.size());
  grm.diagonal().array() += ridge;
  return grm;
}

// Overflow-safe softmax.
inline std::vector<double> softmax_probs(std::span<const double> eta)
{
  double top = -kInf;
  for (double e : eta)
    top = std::max(top, e);
  std::vector<double> out(eta.size());
  double total = 0.0;
  for (std::size_t k = 0; k < eta.size(); ++k)
  {
    out[k] = std::exp(eta[k] - top);
    total += out[k];
  }
  for (auto &v : out)
    v /= total;
  return out;
}

struct GwasConfig
{
  double slab_var = 1.0;
  double a_omega = 1.0;
  double b_omega = 0.0;  // 0 selects p
  double su_shape = 2.0;
  double su_scale = 1.0;
  double intercept_var = 10.0;
  long iterations = 3000;
  long burnin = 1000;
  long thin = 2;
  std::uint64_t seed = 1;
  double threshold = 0.95;
  bool random_effect = true;
  // Drops the likelihood: the chain then samples the prior (used to check
  // prior reproduction).
  bool prior_only = false;

  void validate() const
  {
    if (!(slab_var > 0 && a_omega > 0 && b_omega >= 0 && su_shape > 0 && su_scale > 0 &&
          intercept_var > 0))
      throw ConfigError("GWAS prior parameters must be positive");
    if (!(threshold > 0 && threshold < 1))
      throw ConfigError("GWAS threshold must lie in (0, 1)");
    if (iterations <= 0 || burnin < 0 || burnin >= iterations || thin < 1)
      throw ConfigError("GWAS chain needs 0 <= burnin < iterations and thin >= 1");
  }
};

struct GwasTrace
{
  std::vector<int> class_labels;  // original label of each class; [0] is the reference
  std::size_t p = 0;
  std::vector<std::vector<std::uint8_t>> gamma;  // per draw, per variant
  Eigen::MatrixXd beta_included_sum;              // p x (K-1), summed over draws with gamma = 1
  std::vector<double> sigma_u2;
  std::vector<std::vector<double>> intercepts;
  double jump_acceptance = 0.0;

  int classes() const { return static_cast<int>(class_labels.size()); }
};

namespace detail
{

// Softmax log-likelihood with the reference class at eta = 0.
inline double categorical_loglik(const Eigen::MatrixXd &eta, std::span<const int> y)
{
  double total = 0.0;
  const auto n = eta.rows();
  const auto m = eta.cols();
  for (Eigen::Index i = 0; i < n; ++i)
  {
    double top = 0.0;
    for (Eigen::Index r = 0; r < m; ++r)
      top = std::max(top, eta(i, r));
    double s = std::exp(-top);
    for (Eigen::Index r = 0; r < m; ++r)
      s += std::exp(eta(i, r) - top);
    const double own = y[static_cast<std::size_t>(i)] == 0 ? 0.0 : eta(i, y[i] - 1);
    total += own - top - std::log(s);
  }
  return total;
}

inline double log_normal_density(double x, double mean, double var)
{
  return -0.5 * (x - mean) * (x - mean) / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
}

} // namespace detail

// labels: one class label per strain (row of `snps`); the smallest label is
// the reference class.
inline GwasTrace run_gwas_chain(std::span<const int> labels, const SnpMatrix &snps,
                                const Eigen::MatrixXd &grm, const GwasConfig &config,
                                std::uint64_t seed)
{
  config.validate();
  snps.validate();
  const auto n = static_cast<Eigen::Index>(snps.n());
  const auto p = static_cast<Eigen::Index>(snps.p());
  if (labels.size() != snps.n() || grm.rows() != n || grm.cols() != n)
    throw ValidationError("GWAS inputs disagree on the number of strains");
  if (p == 0)
    throw ValidationError("GWAS needs at least one variant");

  GwasTrace trace;
  {
    std::set<int> distinct(labels.begin(), labels.end());
    trace.class_labels.assign(distinct.begin(), distinct.end());
  }
  const int K = trace.classes();
  if (K < 2)
    throw ValidationError("GWAS needs at least two label classes");
  const Eigen::Index m = K - 1;
  trace.p = static_cast<std::size_t>(p);
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    y[i] = static_cast<int>(std::lower_bound(trace.class_labels.begin(), trace.class_labels.end(),
                                             labels[i]) -
                            trace.class_labels.begin());

  Rng rng = make_rng(seed);
  const double b_omega = config.b_omega > 0 ? config.b_omega : static_cast<double>(p);

  Eigen::MatrixXd x = snps.genotypes;
  x.rowwise() -= x.colwise().mean();
  const Eigen::VectorXd x_sq = x.colwise().squaredNorm();

  // u_k = B v_k with B = Q Lambda^{1/2} over the non-negligible spectrum of Sigma.
  Eigen::MatrixXd basis(n, 0);
  if (config.random_effect)
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(grm);
    if (eig.info() != Eigen::Success)
      throw NumericalError("GWAS: eigen-decomposition of the GRM failed");
    const double top = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 0.0))
      throw NumericalError("GWAS: relationship matrix is not positive definite");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index e = 0; e < n; ++e)
      if (eig.eigenvalues()[e] > 1e-3 * top)
        keep.push_back(e);
    basis.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      basis.col(static_cast<Eigen::Index>(c)) =
          eig.eigenvectors().col(keep[c]) * std::sqrt(eig.eigenvalues()[keep[c]]);
  }
  const Eigen::Index rank = basis.cols();

  // State.
  Eigen::VectorXd intercept(m);
  {
    std::vector<double> freq(static_cast<std::size_t>(K), 0.5);
    for (int c : y)
      freq[c] += 1.0;
    for (Eigen::Index r = 0; r < m; ++r)
      intercept[r] = std::log(freq[r + 1] / freq[0]);
  }
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, m);
  std::vector<std::uint8_t> gamma(static_cast<std::size_t>(p), 0);
  double omega = config.a_omega / (config.a_omega + b_omega);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(rank, m);
  double sigma_u2 = config.su_shape > 1.0 ? config.su_scale / (config.su_shape - 1.0) : 1.0;
  Eigen::MatrixXd eta(n, m);
  for (Eigen::Index r = 0; r < m; ++r)
    eta.col(r).setConstant(intercept[r]);

  const bool use_lik = !config.prior_only;
  trace.beta_included_sum = Eigen::MatrixXd::Zero(p, m);
  long jumps_tried = 0, jumps_accepted = 0;

  Eigen::VectorXd w(n), z(n), resid(n);
  Eigen::MatrixXd weighted_basis(n, rank), prec(rank, rank);
  auto class_step = [&](Eigen::Index r) {
    // Logistic conditional of class r with offset from the other classes.
    for (Eigen::Index i = 0; i < n; ++i)
    {
      double top = 0.0;
      for (Eigen::Index l = 0; l < m; ++l)
        if (l != r)
          top = std::max(top, eta(i, l));
      double s = std::exp(-top);
      for (Eigen::Index l = 0; l < m; ++l)
        if (l != r)
          s += std::exp(eta(i, l) - top);
      const double offset = top + std::log(s);
      const double kappa = use_lik ? (y[static_cast<std::size_t>(i)] == r + 1 ? 0.5 : -0.5) : 0.0;
      w[i] = use_lik ? polya_gamma_1(eta(i, r) - offset, rng) : 0.0;
      // Working response; with w = 0 it carries no information.
      z[i] = w[i] > 0.0 ? kappa / w[i] + offset : 0.0;
    }
    // Intercept.
    {
      resid = z - eta.col(r);
      resid.array() += intercept[r];
      const double prec = w.sum() + 1.0 / config.intercept_var;
      const double mean = w.dot(resid) / prec;
      const double draw = mean + std_normal(rng) / std::sqrt(prec);
      eta.col(r).array() += draw - intercept[r];
      intercept[r] = draw;
    }
    // Included variant effects.
    for (Eigen::Index j = 0; j < p; ++j)
    {
      if (!gamma[static_cast<std::size_t>(j)])
        continue;
      const auto xj = x.col(j);
      resid = z - eta.col(r) + xj * b(j, r);
      const double prec = (w.array() * xj.array().square()).sum() + 1.0 / config.slab_var;
      const double mean = (w.array() * xj.array() * resid.array()).sum() / prec;
      const double draw = mean + std_normal(rng) / std::sqrt(prec);
      eta.col(r) += xj * (draw - b(j, r));
      b(j, r) = draw;
    }
    // Polygenic effect, block update of v_r.
    if (rank > 0)
    {
      const Eigen::VectorXd u_old = basis * v.col(r);
      resid = z - eta.col(r) + u_old;
      weighted_basis = basis.array().colwise() * w.array().sqrt();
      prec.setZero();
      prec.selfadjointView<Eigen::Lower>().rankUpdate(weighted_basis.transpose());
      prec.diagonal().array() += 1.0 / sigma_u2;
      Eigen::LLT<Eigen::MatrixXd> llt(prec);
      if (llt.info() != Eigen::Success)
        throw NumericalError("GWAS: random-effect precision is not positive definite");
      const Eigen::VectorXd mean = llt.solve(basis.transpose() * (w.array() * resid.array()).matrix());
      Eigen::VectorXd noise(rank);
      for (Eigen::Index e = 0; e < rank; ++e)
        noise[e] = std_normal(rng);
      const Eigen::VectorXd draw = mean + llt.matrixU().solve(noise);
      v.col(r) = draw;
      eta.col(r) += basis * draw - u_old;
    }
  };

  // exp(eta), refreshed after every class step. A centered binary column
  // takes two values, so adding or removing a variant rescales exp(eta) by
  // one of two factors per class and the jump step needs no exponentials
  // per strain.
  Eigen::MatrixXd expo(n, m), expo_minus(n, m);
  auto refresh_expo = [&] {
    if (eta.cwiseAbs().maxCoeff() > 600.0)
      throw NumericalError("GWAS: linear predictor diverged");
    expo = eta.array().exp().matrix();
  };
  std::vector<std::uint8_t> carrier(static_cast<std::size_t>(n * p));
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      carrier[static_cast<std::size_t>(j * n + i)] = snps.genotypes(i, j) > 0.5;
  const Eigen::RowVectorXd col_mean = snps.genotypes.colwise().mean();

  Eigen::VectorXd prop_mean(m), prop_var(m), bj(m), fac0(m), fac1(m), grad(m), hess(m);
  std::vector<double> own_minus(static_cast<std::size_t>(n));
  auto jump_step = [&](Eigen::Index j) {
    const std::uint8_t *g = &carrier[static_cast<std::size_t>(j * n)];
    const double x0 = -col_mean[j], x1 = 1.0 - col_mean[j];
    const bool on = gamma[static_cast<std::size_t>(j)];

    // exp(eta) and the own-class predictor with variant j removed.
    if (on)
    {
      for (Eigen::Index r = 0; r < m; ++r)
      {
        fac0[r] = std::exp(-x0 * b(j, r));
        fac1[r] = std::exp(-x1 * b(j, r));
      }
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index r = 0; r < m; ++r)
          expo_minus(i, r) = expo(i, r) * (g[i] ? fac1[r] : fac0[r]);
    }
    else
      expo_minus = expo;
    for (Eigen::Index i = 0; i < n; ++i)
    {
      const int c = y[static_cast<std::size_t>(i)];
      own_minus[i] = c == 0 ? 0.0 : eta(i, c - 1) - (on ? (g[i] ? x1 : x0) * b(j, c - 1) : 0.0);
    }

    // Log-likelihood with variant j at effect `val` (zero when absent).
    auto loglik_with = [&](const Eigen::VectorXd *val) {
      if (!use_lik)
        return 0.0;
      if (val)
        for (Eigen::Index r = 0; r < m; ++r)
        {
          fac0[r] = std::exp(x0 * (*val)[r]);
          fac1[r] = std::exp(x1 * (*val)[r]);
        }
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
      {
        double s = 1.0;
        for (Eigen::Index r = 0; r < m; ++r)
          s += expo_minus(i, r) * (val ? (g[i] ? fac1[r] : fac0[r]) : 1.0);
        const int c = y[static_cast<std::size_t>(i)];
        total += own_minus[i] - std::log(s);
        if (val && c > 0)
          total += (g[i] ? x1 : x0) * (*val)[c - 1];
      }
      return total;
    };

    // Laplace proposal from a few diagonal Newton steps, computed without
    // variant j so that it is the same in both directions.
    Eigen::VectorXd mode = Eigen::VectorXd::Zero(m);
    hess.setConstant(1.0 / config.slab_var);
    for (int newton = 0; newton < 3 && use_lik; ++newton)
    {
      grad = -mode / config.slab_var;
      hess.setConstant(1.0 / config.slab_var);
      for (Eigen::Index r = 0; r < m; ++r)
      {
        fac0[r] = std::exp(x0 * mode[r]);
        fac1[r] = std::exp(x1 * mode[r]);
      }
      for (Eigen::Index i = 0; i < n; ++i)
      {
        const double xi = g[i] ? x1 : x0;
        double s = 1.0;
        for (Eigen::Index r = 0; r < m; ++r)
          s += expo_minus(i, r) * (g[i] ? fac1[r] : fac0[r]);
        const int c = y[static_cast<std::size_t>(i)];
        for (Eigen::Index r = 0; r < m; ++r)
        {
          const double pr = expo_minus(i, r) * (g[i] ? fac1[r] : fac0[r]) / s;
          grad[r] += xi * ((c == r + 1 ? 1.0 : 0.0) - pr);
          hess[r] += xi * xi * pr * (1.0 - pr);
        }
      }
      mode += (grad.array() / hess.array()).matrix();
    }
    prop_mean = mode;
    prop_var = hess.cwiseInverse();

    auto log_q = [&](const Eigen::VectorXd &val) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < m; ++r)
        s += detail::log_normal_density(val[r], prop_mean[r], prop_var[r]);
      return s;
    };
    auto log_slab = [&](const Eigen::VectorXd &val) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < m; ++r)
        s += detail::log_normal_density(val[r], 0.0, config.slab_var);
      return s;
    };
    const double ll_off = loglik_with(nullptr);
    ++jumps_tried;
    if (!on)
    {
      for (Eigen::Index r = 0; r < m; ++r)
        bj[r] = prop_mean[r] + std::sqrt(prop_var[r]) * std_normal(rng);
      const double ll_on = loglik_with(&bj);
      const double log_ratio = std::log(omega) - std::log1p(-omega) + ll_on - ll_off +
                               log_slab(bj) - log_q(bj);
      if (std::log(uniform01(rng)) < log_ratio)
      {
        gamma[static_cast<std::size_t>(j)] = 1;
        b.row(j) = bj.transpose();
        for (Eigen::Index r = 0; r < m; ++r)
        {
          eta.col(r) += x.col(j) * bj[r];
          const double e0 = std::exp(x0 * bj[r]), e1 = std::exp(x1 * bj[r]);
          for (Eigen::Index i = 0; i < n; ++i)
            expo(i, r) *= g[i] ? e1 : e0;
        }
        ++jumps_accepted;
      }
    }
    else
    {
      bj = b.row(j).transpose();
      const double ll_on = loglik_with(&bj);
      const double log_ratio = std::log1p(-omega) - std::log(omega) + ll_off - ll_on + log_q(bj) -
                               log_slab(bj);
      if (std::log(uniform01(rng)) < log_ratio)
      {
        gamma[static_cast<std::size_t>(j)] = 0;
        for (Eigen::Index r = 0; r < m; ++r)
          eta.col(r) -= x.col(j) * b(j, r);
        b.row(j).setZero();
        expo = expo_minus;
        ++jumps_accepted;
      }
    }
  };

  for (long it = 1; it <= config.iterations; ++it)
  {
    for (Eigen::Index r = 0; r < m; ++r)
      class_step(r);
    refresh_expo();
    for (Eigen::Index j = 0; j < p; ++j)
      jump_step(j);
    const double included = std::accumulate(gamma.begin(), gamma.end(), 0.0);
    omega = beta_draw(config.a_omega + included, b_omega + static_cast<double>(p) - included, rng);
    omega = std::clamp(omega, 1e-300, 1.0 - 1e-16);
    if (rank > 0)
      sigma_u2 = 1.0 / gamma_draw(config.su_shape + 0.5 * static_cast<double>(rank * m),
                                  config.su_scale + 0.5 * v.squaredNorm(), rng);

    if (it > config.burnin && (it - config.burnin) % config.thin == 0)
    {
      trace.gamma.push_back(gamma);
      for (Eigen::Index j = 0; j < p; ++j)
        if (gamma[static_cast<std::size_t>(j)])
          trace.beta_included_sum.row(j) += b.row(j);
      trace.sigma_u2.push_back(rank > 0 ? sigma_u2 : 0.0);
      trace.intercepts.emplace_back(intercept.data(), intercept.data() + m);
    }
  }
  trace.jump_acceptance =
      jumps_tried > 0 ? static_cast<double>(jumps_accepted) / static_cast<double>(jumps_tried) : 0.0;
  return trace;
}

struct GwasVariantResult
{
  std::string variant_id;
  long long position = 0;
  double pip = 0.0;
  std::vector<double> effects;  // per non-reference class, given inclusion
  bool significant = false;
  double score = 0.0;           // -log10(max(1 - PIP, 1e-6))
};

struct GwasResult
{
  std::vector<GwasVariantResult> variants;  // ordered by position
  std::vector<int> class_labels;
  double sigma_u2_mean = 0.0;
  double threshold = 0.95;

  double threshold_line() const { return -std::log10(1.0 - threshold); }
};

inline constexpr double kManhattanFloor = 1e-6;

inline GwasResult summarize_gwas(const GwasTrace &trace, const GwasConfig &config,
                                 const SnpMatrix &snps)
{
  if (trace.gamma.empty())
    throw ValidationError("summarize_gwas: empty trace");
  if (snps.p() != trace.p)
    throw ValidationError("summarize_gwas: variant count differs from the trace");
  GwasResult out;
  out.class_labels = trace.class_labels;
  out.threshold = config.threshold;
  out.sigma_u2_mean = trace.sigma_u2.empty()
                          ? 0.0
                          : std::accumulate(trace.sigma_u2.begin(), trace.sigma_u2.end(), 0.0) /
                                static_cast<double>(trace.sigma_u2.size());
  const double draws = static_cast<double>(trace.gamma.size());
  const auto m = static_cast<Eigen::Index>(trace.classes() - 1);
  for (std::size_t j = 0; j < trace.p; ++j)
  {
    GwasVariantResult r;
    r.variant_id = snps.variant_ids[j];
    r.position = snps.positions[j];
    double included = 0.0;
    for (const auto &g : trace.gamma)
      included += g[j];
    r.pip = included / draws;
    for (Eigen::Index c = 0; c < m; ++c)
      r.effects.push_back(included > 0.0
                              ? trace.beta_included_sum(static_cast<Eigen::Index>(j), c) / included
                              : 0.0);
    r.significant = r.pip >= config.threshold;
    r.score = -std::log10(std::max(1.0 - r.pip, kManhattanFloor));
    out.variants.push_back(std::move(r));
  }
  std::stable_sort(out.variants.begin(), out.variants.end(),
                   [](const auto &a, const auto &b) { return a.position < b.position; });
  return out;
}

inline std::string gwas_results_csv(const GwasResult &result)
{
  std::ostringstream out;
  out << "variant_id,position,pip";
  for (std::size_t c = 1; c < result.class_labels.size(); ++c)
    out << ",effect_class" << result.class_labels[c];
  out << ",significant\n";
  for (const auto &v : result.variants)
  {
    out << v.variant_id << ',' << v.position << ',' << csv::format_double(v.pip);
    for (double e : v.effects)
      out << ',' << csv::format_double(e);
    out << ',' << (v.significant ? 1 : 0) << '\n';
  }
  return out.str();
}

inline std::string manhattan_csv(const GwasResult &result)
{
  std::ostringstream out;
  out << "variant_id,position,score,threshold_line\n";
  const auto line = csv::format_double(result.threshold_line());
  for (const auto &v : result.variants)
    out << v.variant_id << ',' << v.position << ',' << csv::format_double(v.score) << ',' << line
        << '\n';
  return out.str();
}

} // namespace micmix
