#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cheq/types.hpp"

namespace cheq {

/// 1 iff oop_total / aexp >= threshold (the boundary counts as
/// catastrophic). Households with aexp = 0 have no defined ratio and are
/// excluded upstream; calling with one throws ZeroDenominator.
int che_flag(const HouseholdRecord& h, double threshold);

/// Sum(w_i * flag_i) / Sum(w_i). Throws EmptyDomain when no positive weight.
double weighted_proportion(std::span<const double> weights, std::span<const int> flags);

enum class QuintileBasis { PersonWeighted, HouseholdWeighted };

struct QuintileCuts {
  std::array<double, 4> cuts{};  // ascending per-capita expenditure cut points
  QuintileBasis basis = QuintileBasis::PersonWeighted;
};

/// Weighted 0.2/0.4/0.6/0.8 quantiles of per-capita expenditure
/// (aexp / hh_size); person-weighted by default. A degenerate distribution
/// (all cuts equal) is allowed with a warning: everything lands in class 1.
QuintileCuts quintile_cuts(std::span<const HouseholdRecord> households,
                           QuintileBasis basis = QuintileBasis::PersonWeighted,
                           std::vector<std::string>* warnings = nullptr);

/// Class 1..5; the lowest class k with pcexp <= cuts[k-1], else 5. A value
/// exactly at a cut goes to the lower class.
int assign_quintile(const HouseholdRecord& h, const QuintileCuts& cuts);

struct CheEstimate {
  double threshold = 0.0;
  std::string domain;
  double incidence = 0.0;  // weighted share of households in [0,1]
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci99;
  long n_used = 0;
  long n_excluded = 0;  // aexp = 0 households, excluded from the ratio
};

using HouseholdRefs = std::vector<const HouseholdRecord*>;
using EpisodeRefs = std::vector<const EpisodeRecord*>;

/// Household-weighted CHE incidence with the interpenetrating-subsample SE.
CheEstimate che_incidence(const HouseholdRefs& domain, double threshold,
                          const std::string& label);

std::array<CheEstimate, 5> che_by_quintile(std::span<const HouseholdRecord> households,
                                           double threshold, const QuintileCuts& cuts);

/// Person-weighted share of households with any member under a health
/// scheme, same estimate/SE shape as CHE.
CheEstimate coverage_rate(const HouseholdRefs& domain, const std::string& label);

/// share_c = Sum(w_i * cost_ic) / Sum(w_i * total_i); shares sum to 1.
/// Throws EmptyDomain / AllZeroCost.
std::map<std::string, double> component_shares(const EpisodeRefs& episodes, CareType type);

/// Episode-weighted share of delivery episodes that used a public facility.
double delivery_public_share(const EpisodeRefs& episodes);

struct SubsampleEstimate {
  double estimate = 0.0;
  std::optional<double> se;  // missing when one subsample is empty
  std::optional<std::pair<double, double>> ci99;
};

/// Full-sample estimate with se = |y(S1) - y(S2)| / 2 from the two
/// interpenetrating subsamples; ci99 = estimate +/- 2.576 se.
SubsampleEstimate subsample_se(const HouseholdRefs& domain,
                               const std::function<double(const HouseholdRefs&)>& statistic);

// ---- district tables (pipeline building blocks) ----

struct CheRow {
  std::string label;
  int district_code = 0;  // 0 for aggregate rows
  std::vector<CheEstimate> by_threshold;
};

struct CheTable {
  std::vector<double> thresholds;
  std::vector<CheRow> rows;
};

CheTable che_table_overall(const SurveyDataset& ds, const std::vector<double>& thresholds);
CheTable che_table_by_district(const SurveyDataset& ds, const DistrictMap& districts,
                               const std::vector<double>& thresholds, bool parallel = true);
CheTable che_table_by_quintile(const SurveyDataset& ds, const std::vector<double>& thresholds);

struct CoverageRow {
  std::string label;
  int district_code = 0;
  CheEstimate estimate;     // threshold field unused
  std::string flag;         // "high" / "low" / "" vs the state value at 99%
};

struct CoverageTable {
  CoverageRow state;
  std::vector<CoverageRow> rows;
  std::vector<std::pair<std::string, double>> delivery_public;  // district -> share
  std::optional<double> delivery_public_state;
};

CoverageTable coverage_table(const SurveyDataset& ds, const DistrictMap& districts);

struct ComponentTable {
  CareType type = CareType::Inpatient;
  std::vector<std::string> components;
  // rows: district label -> shares (percent); state row last
  std::vector<std::pair<std::string, std::vector<double>>> rows;
};

ComponentTable component_table(const SurveyDataset& ds, const DistrictMap& districts,
                               CareType type);

}  // namespace cheq
