#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cheq/types.hpp"

namespace cheq {

/// Seeded synthetic survey model. A finite population is generated per
/// district (lognormal expenditure, Beta OOP ratio shifted by expenditure
/// quintile, multiplicative group effects on episode costs), then the
/// central and state samples are drawn from it independently. All samplers
/// are implemented locally so a seed maps to identical bytes on any
/// platform.
struct SynthConfig {
  std::uint64_t seed = 42;
  int n_districts = 19;               // uses the first n codes of the district map
  int households_per_district = 400;  // sampled, both agencies combined
  double agency_split = 0.5;          // central share of the sample
  int population_factor = 10;         // population = factor * households_per_district

  double aexp_log_mu = 10.8;  // log-space lognormal parameters for aexp
  double aexp_log_sigma = 0.55;

  double oop_beta_a = 0.55;  // oop/aexp ~ Beta(a, b) * quintile shift
  double oop_beta_b = 4.2;
  std::array<double, 5> quintile_ratio_shift{1.30, 1.12, 1.00, 0.95, 0.90};

  // multiplicative episode-cost effects, reference category = 1.0
  double effect_female = 0.85;
  double effect_rural = 0.80;
  double effect_scst = 0.75;
  double effect_muslim = 0.90;

  std::vector<double> coverage_prob;  // per district; padded with default_coverage
  double default_coverage = 0.141;

  double p_rural = 0.68;
  double p_female = 0.48;
  double p_st = 0.06;
  double p_sc = 0.24;
  double p_obc = 0.18;
  double p_muslim = 0.27;
  double p_inpatient = 0.35;  // households with an inpatient episode
  double p_private = 0.72;
  double p_chronic = 0.25;
  double p_delivery = 0.06;
  double mean_hh_size = 4.3;

  void validate() const;  // throws InvalidConfig
};

SynthConfig load_synth_config(const std::string& path);
std::string synth_config_json(const SynthConfig& cfg);

/// Population-level values obtained by exhaustive evaluation of the
/// generated finite population (independent of the estimation module).
struct GroundTruth {
  long population_households = 0;
  std::map<std::string, double> che_incidence;      // "0.1" -> share
  double gini_household_oop = 0.0;                  // oop_total, unit weights
  double gini_private_inpatient = 0.0;              // episode costs
  double coverage_person_share = 0.0;
  std::map<std::string, double> group_mean_cost;    // category label -> mean episode cost
};

struct SynthOutput {
  SurveyDataset central;
  SurveyDataset state;
  GroundTruth truth;
};

/// Deterministic for a given config; districts generated in parallel from
/// per-district derived seeds.
SynthOutput generate(const SynthConfig& cfg);

/// The full finite population as a dataset with unit multipliers, for
/// oracle tests (estimators on it must reproduce GroundTruth).
SurveyDataset generate_population(const SynthConfig& cfg);

std::string ground_truth_json(const GroundTruth& t);

}  // namespace cheq
