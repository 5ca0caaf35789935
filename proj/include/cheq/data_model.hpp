#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cheq/types.hpp"

namespace cheq {

struct LoadStats {
  std::size_t rows = 0;
  std::vector<std::string> warnings;
};

/// Loads households.csv. Column order is free, names are fixed. Rows that
/// violate field-level invariants (bad enum, nonpositive multiplier or
/// hh_size, negative amount, unknown district, duplicate id) abort the load
/// with a row-numbered diagnostic. `expected_agency`, when set, must match
/// every row's agency column.
SurveyDataset load_households(const std::string& path, std::optional<Agency> expected_agency,
                              const DistrictMap& districts, LoadStats* stats = nullptr);

/// Loads episodes.csv into an existing dataset. Missing chronic/is_delivery
/// columns default to false with a warning. Cost columns outside the row's
/// care-type vocabulary must be empty or zero.
void load_episodes(const std::string& path, SurveyDataset& ds, LoadStats* stats = nullptr);

/// Canonical serialization: fixed column order, floats to 6 decimals.
/// load -> save is lossless for valid files up to column order/formatting.
void save_households(const SurveyDataset& ds, std::ostream& out);
void save_episodes(const SurveyDataset& ds, std::ostream& out);
void save_households(const SurveyDataset& ds, const std::string& path);
void save_episodes(const SurveyDataset& ds, const std::string& path);

struct Violation {
  std::string rule;     // e.g. "component_sum", "dangling_hh_id"
  std::string subject;  // offending hh_id / episode_id
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
};

/// Re-checks every dataset invariant (field ranges, component sums,
/// duplicate ids, referential integrity, district codes). Violations are
/// data, not errors; the report is a pure function of the dataset.
ValidationReport validate_dataset(const SurveyDataset& ds, const DistrictMap& districts);

}  // namespace cheq
