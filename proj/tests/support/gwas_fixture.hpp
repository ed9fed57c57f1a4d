#pragma once

// Synthetic association data: independent binary variants with allele
// frequencies in [0.1, 0.5] and a three-class softmax outcome driven by a
// handful of causal variants.

#include <string>
#include <vector>

#include "micmix/gwas.hpp"

namespace micmix::testing
{

struct GwasFixture
{
  SnpMatrix snps;
  std::vector<int> labels;  // classes 1..3
  std::vector<int> causal;  // variant columns
};

inline GwasFixture make_gwas_fixture(int n, int p, std::vector<int> causal, double effect,
                                     std::uint64_t seed)
{
  Rng rng = make_rng(seed, 99);
  GwasFixture f;
  f.causal = std::move(causal);
  f.snps.genotypes.resize(n, p);
  for (int i = 0; i < n; ++i)
    f.snps.strains.push_back("S" + std::to_string(i));
  std::vector<double> freq(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
  {
    freq[j] = 0.1 + 0.4 * uniform01(rng);
    f.snps.variant_ids.push_back("v" + std::to_string(j));
    f.snps.positions.push_back(1000LL * (j + 1));
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j)
      f.snps.genotypes(i, j) = uniform01(rng) < freq[j] ? 1.0 : 0.0;
  for (int i = 0; i < n; ++i)
  {
    double e2 = -2.5, e3 = -4.0;
    for (int c : f.causal)
    {
      e2 += effect * f.snps.genotypes(i, c);
      e3 += effect * f.snps.genotypes(i, c);
    }
    const double eta[3] = {0.0, e2, e3};
    const auto prob = softmax_probs(eta);
    const double u = uniform01(rng);
    f.labels.push_back(u < prob[0] ? 1 : (u < prob[0] + prob[1] ? 2 : 3));
  }
  return f;
}

} // namespace micmix::testing
