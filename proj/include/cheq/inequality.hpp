#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cheq/types.hpp"

namespace cheq {

/// Survey-weighted Gini, sorted cumulative form:
///   G = (2/mu) * Sum_i p_i y_i F_i - 1,
/// with F_i the midpoint cumulative population share after sorting by value.
/// Equals the relative-mean-difference definition; O(n log n).
double weighted_gini(std::span<const double> values, std::span<const double> weights);

/// Reference O(n^2) pairwise form G = Sum_ij p_i p_j |y_i - y_j| / (2 mu),
/// kept serial for oracle testing.
double weighted_gini_pairwise(std::span<const double> values, std::span<const double> weights);

/// OpenMP variant of the pairwise form (falls back to serial when built
/// without OpenMP).
double weighted_gini_pairwise_parallel(std::span<const double> values,
                                       std::span<const double> weights);

enum class DecompMode { SignedTwoGroup, StrictPyatt };
DecompMode decomp_mode_from(std::string_view s);
std::string_view to_string(DecompMode m);

struct GroupSummary {
  std::string label;
  long n = 0;
  double pop_share = 0.0;    // p_k
  double value_share = 0.0;  // s_k = p_k mu_k / mu
  double mean = 0.0;         // mu_k
  double gini = 0.0;         // G_k
};

struct GiniDecomposition {
  double total = 0.0;
  double between = 0.0;  // signed in two-group mode
  double within = 0.0;   // Sum_k p_k s_k G_k
  double overlap = 0.0;  // total - between - within
  double between_share = 0.0;  // percent of total
  double within_share = 0.0;
  double overlap_share = 0.0;
  DecompMode mode = DecompMode::StrictPyatt;
  std::vector<GroupSummary> groups;
};

/// Decomposes the weighted Gini by the given per-record category index
/// (0..K-1, labels[k] names category k; labels[reference] is the sign
/// anchor in two-group mode). StrictPyatt computes between as the Gini of
/// the group-mean-substituted distribution (non-negative, K >= 2);
/// SignedTwoGroup requires exactly K = 2 and signs p1 p2 |mu1 - mu2| / mu
/// by (mu_ref - mu_other). total = between + within + overlap holds exactly.
GiniDecomposition decompose(std::span<const double> values, std::span<const double> weights,
                            std::span<const int> category, const std::vector<std::string>& labels,
                            DecompMode mode, int reference = 0);

enum class ValueSelector { PrivateInpatientOop, AllEpisodeOop, HouseholdOop };
ValueSelector value_selector_from(std::string_view s);
std::string_view to_string(ValueSelector v);

enum class AnalysisUnit { Episode, Household };

struct GiniAnalysisConfig {
  ValueSelector value = ValueSelector::PrivateInpatientOop;
  AnalysisUnit unit = AnalysisUnit::Episode;
  DecompMode mode = DecompMode::SignedTwoGroup;
  std::vector<GroupingSpec> groupings;  // empty -> default_groupings()
  bool chronic_only = false;
  int low_n_threshold = 10;
  bool parallel = true;
  double star_level = 0.99;
};

/// One analysis observation: a value/weight pair with its category index
/// per grouping. Episode-unit observations resolve sector through the
/// owning household.
struct Observation {
  double value = 0.0;
  double weight = 0.0;
  int district_code = 0;
  Subsample subsample = Subsample::S1;
  std::vector<int> category;  // parallel to config groupings
};

std::vector<Observation> analysis_observations(const SurveyDataset& ds,
                                               const GiniAnalysisConfig& cfg);

struct DecompCell {
  GiniDecomposition decomp;
  std::optional<double> between_se;  // interpenetrating-subsample SE of between
  bool significant = false;          // |between| CI excludes 0 at star_level
  bool degenerate = false;           // single non-empty category in this domain
};

struct GiniRow {
  std::string label;
  int district_code = 0;
  long n_obs = 0;
  bool low_n = false;
  double total_gini = 0.0;
  std::vector<DecompCell> cells;  // parallel to groupings
};

struct GiniTable {
  std::vector<std::string> grouping_names;
  std::vector<GiniRow> rows;  // districts in map order, state row last
};

/// Table 2 shape: per-district total Gini plus (between, within) per
/// grouping with percent-of-total shares and subsample significance flags.
GiniTable district_decomposition_table(const SurveyDataset& ds, const DistrictMap& districts,
                                       const GiniAnalysisConfig& cfg);

}  // namespace cheq
