#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "micmix/eval.hpp"
#include "micmix/io.hpp"

using namespace micmix;

namespace
{

const std::string kData = MICMIX_TEST_DATA;

std::string slurp(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabelSet synthetic(const std::string &drug, std::size_t n, std::size_t resistant)
{
  LabelSet out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"S" + std::to_string(i), drug, i < resistant ? 2 : 1});
  return out;
}

TruthSet truth_for(TruthKind kind, const std::string &drug, std::size_t n)
{
  TruthSet t;
  t.kind = kind;
  for (std::size_t i = 0; i < n; ++i)
    t.strains_by_drug[drug].insert("S" + std::to_string(i));
  return t;
}

} // namespace

TEST(TruePositiveRate, Arithmetic)
{
  const auto truth = truth_for(TruthKind::resistant_by_variant, "INH", 1000);
  const auto rows = true_positive_rate(synthetic("INH", 1000, 920), truth);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(format_rate_table({{"cgmm", rows}}), "DRUG,cgmm\nINH,92.000\n");
  const auto none = true_positive_rate(synthetic("INH", 1000, 0), truth);
  EXPECT_EQ(format_rate_table({{"cgmm", none}}), "DRUG,cgmm\nINH,0.000\n");
}

TEST(TrueNegativeRate, Bounds)
{
  const auto truth = truth_for(TruthKind::susceptible_control, "AMI", 150);
  EXPECT_EQ(format_rate_table({{"m", true_negative_rate(synthetic("AMI", 150, 0), truth)}}),
            "DRUG,m\nAMI,100.000\n");
  EXPECT_EQ(format_rate_table({{"m", true_negative_rate(synthetic("AMI", 150, 150), truth)}}),
            "DRUG,m\nAMI,0.000\n");
}

TEST(Rates, KindMismatchAndMissingLabels)
{
  const auto tp = truth_for(TruthKind::resistant_by_variant, "INH", 5);
  EXPECT_THROW(true_negative_rate(synthetic("INH", 5, 1), tp), ValidationError);
  EXPECT_THROW(true_positive_rate(synthetic("INH", 4, 1), tp), ValidationError);
  // A labeled drug without truth strains is omitted.
  auto labels = synthetic("INH", 5, 1);
  labels.push_back({"X", "RIF", 2});
  EXPECT_EQ(true_positive_rate(labels, tp).size(), 1u);
}

TEST(Rates, MultiLevelBreakdown)
{
  const auto truth = truth_for(TruthKind::resistant_by_variant, "INH", 4);
  const LabelSet labels{{"S0", "INH", 1}, {"S1", "INH", 2}, {"S2", "INH", 3}, {"S3", "INH", 3}};
  const auto rows = true_positive_rate(labels, truth);
  EXPECT_EQ(format_rate_table({{"cgmm", rows}}), "DRUG,cgmm\nINH,75.000\n");
  EXPECT_EQ(format_level_breakdown({{"cgmm", rows}}),
            "method,drug,cluster,count,percent\n"
            "cgmm,INH,1,1,25.000\n"
            "cgmm,INH,2,1,25.000\n"
            "cgmm,INH,3,2,50.000\n");
}

TEST(Rates, MethodColumnsSideBySide)
{
  const auto truth = truth_for(TruthKind::resistant_by_variant, "INH", 8);
  const auto a = true_positive_rate(synthetic("INH", 8, 8), truth);
  const auto b = true_positive_rate(synthetic("INH", 8, 3), truth);
  EXPECT_EQ(format_rate_table({{"cgmm", a}, {"ecoff_q0.99", b}}),
            "DRUG,cgmm,ecoff_q0.99\nINH,100.000,37.500\n");
}

TEST(GoldenFiles, PublishedTruePositiveRate)
{
  const auto truth = load_truth(kData + "/eval_truth.csv");
  const auto labels = read_labels(kData + "/eval_labels.csv");
  const auto rows = true_positive_rate(labels, truth.at(TruthKind::resistant_by_variant));
  EXPECT_EQ(format_rate_table({{"cgmm", rows}}), slurp(kData + "/eval_expected_tp.csv"));
}

TEST(GoldenFiles, PublishedTrueNegativeRate)
{
  const auto truth = load_truth(kData + "/eval_truth.csv");
  const auto labels = read_labels(kData + "/eval_labels.csv");
  const auto rows = true_negative_rate(labels, truth.at(TruthKind::susceptible_control));
  EXPECT_EQ(format_rate_table({{"cgmm", rows}}), slurp(kData + "/eval_expected_tn.csv"));
}

TEST(GoldenFiles, ByteStableAcrossRuns)
{
  const auto truth = load_truth(kData + "/eval_truth.csv");
  const auto labels = read_labels(kData + "/eval_labels.csv");
  const auto &tp = truth.at(TruthKind::resistant_by_variant);
  const auto first = format_rate_table({{"cgmm", true_positive_rate(labels, tp)}});
  for (int i = 0; i < 3; ++i)
    EXPECT_EQ(format_rate_table({{"cgmm", true_positive_rate(labels, tp)}}), first);
}

TEST(LoadTruth, Errors)
{
  const std::string path = ::testing::TempDir() + "/bad_truth.csv";
  std::ofstream(path) << "drug,strain_id,kind\nINH,S1,maybe\n";
  try
  {
    load_truth(path);
    FAIL();
  }
  catch (const ParseError &e)
  {
    EXPECT_EQ(e.line(), 2u);
  }
  std::ofstream(path) << "strain,drug,kind\n";
  EXPECT_THROW(load_truth(path), ParseError);
}
