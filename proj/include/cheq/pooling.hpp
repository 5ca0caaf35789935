#pragma once

#include <span>
#include <string>
#include <vector>

#include "cheq/types.hpp"

namespace cheq {

struct RunsTestResult {
  double z = 0.0;
  double p = 1.0;
  int runs = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  int cross_ties = 0;  // ties across sources, broken deterministically (a first)
};

/// Wald-Wolfowitz runs test on the merged, ascending-sorted values.
/// Normal approximation; requires combined n >= 10. Ties across sources are
/// broken by source order (a before b) and counted in cross_ties.
RunsTestResult runs_test(std::span<const double> a, std::span<const double> b);

struct Chi2Result {
  double stat = 0.0;
  int df = 0;
  double p = 1.0;
  int bins_used = 0;
};

/// Pearson chi-square on a 2xK contingency table. Adjacent columns are
/// merged (smallest expected cell first) until every expected count is
/// >= 5; df = K_final - 1.
Chi2Result chi_square_2xk(std::vector<double> counts_a, std::vector<double> counts_b);

/// Homogeneity test: bins are quantiles of the pooled sample (deciles by
/// default), then chi_square_2xk on the source-by-bin counts.
Chi2Result chi_square_homogeneity(std::span<const double> a, std::span<const double> b,
                                  int n_bins = 10);

struct ZTestResult {
  double z = 0.0;
  double p = 1.0;
};

/// Two-sample z-test of weighted means. The variance of each sample is the
/// Bessel-corrected weighted variance, so equal weights reduce to the
/// textbook unweighted test.
ZTestResult z_test_means(std::span<const double> a, std::span<const double> wa,
                         std::span<const double> b, std::span<const double> wb);

enum class PoolVariable { Aexp, OopTotal, PcExp };
PoolVariable pool_variable_from(std::string_view s);
std::string_view to_string(PoolVariable v);

struct PoolabilityReport {
  double runs_z = 0.0;
  double runs_p = 1.0;
  double chi2_stat = 0.0;
  int chi2_df = 0;
  double chi2_p = 1.0;
  double z_means = 0.0;
  double z_means_p = 1.0;
  double alpha = 0.05;
  bool poolable = false;
  PoolVariable variable = PoolVariable::Aexp;
  std::vector<std::string> warnings;
};

/// Runs the three agency-bias tests on the chosen household variable.
/// poolable <=> min(p) > alpha.
PoolabilityReport poolability(const SurveyDataset& central, const SurveyDataset& state,
                              double alpha = 0.05, PoolVariable variable = PoolVariable::Aexp,
                              int n_bins = 10);

struct PoolResult {
  SurveyDataset dataset;
  std::vector<std::string> warnings;
};

/// Concatenates the two samples and rescales multipliers within each
/// (district, sector) stratum by that agency's share of the stratum's
/// sample households; equal matching samples halve every multiplier.
/// Episode multipliers carry their household's factor. Refuses when the
/// report is not poolable unless `force`.
PoolResult pool_datasets(const SurveyDataset& central, const SurveyDataset& state,
                         const PoolabilityReport& report, bool force = false);

}  // namespace cheq
