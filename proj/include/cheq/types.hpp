#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cheq {

enum class Sector { Rural, Urban };
enum class Agency { Central, State };
enum class Subsample { S1, S2 };
enum class CareType { Inpatient, Outpatient };
enum class Facility { Public, Private };
enum class Sex { Male, Female };
enum class SocialGroup { ST, SC, OBC, Others };
enum class Religion { Muslim, Others };

/// Error categories surfaced by the library. The CLI maps these onto
/// process exit codes (validation = 2, not poolable = 3, internal = 4).
enum class Errc {
  MissingColumn,
  BadEnum,
  BadValue,
  NegativeValue,
  DuplicateId,
  IoError,
  TooFewObservations,
  DegenerateBins,
  ZeroVariance,
  NotPoolable,
  EmptyDomain,
  AllZeroCost,
  ZeroDenominator,
  ZeroMean,
  EmptyCategory,
  NotBinary,
  ConstantInput,
  InvalidConfig,
  Internal,
};

class CheqError : public std::runtime_error {
 public:
  CheqError(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw CheqError(code, msg); }

std::string_view to_string(Sector v);
std::string_view to_string(Agency v);
std::string_view to_string(Subsample v);
std::string_view to_string(CareType v);
std::string_view to_string(Facility v);
std::string_view to_string(Sex v);
std::string_view to_string(SocialGroup v);
std::string_view to_string(Religion v);

Sector sector_from(std::string_view s);
Agency agency_from(std::string_view s);
Subsample subsample_from(std::string_view s);
CareType care_type_from(std::string_view s);
Facility facility_from(std::string_view s);
Sex sex_from(std::string_view s);
SocialGroup social_group_from(std::string_view s);
Religion religion_from(std::string_view s);

/// One surveyed household. `multiplier` is the survey design weight
/// (population units represented by this sample household); `aexp` and the
/// `oop_*` fields are annual amounts in currency units.
struct HouseholdRecord {
  std::string hh_id;
  int district_code = 0;
  Sector sector = Sector::Rural;
  Agency agency = Agency::Central;
  Subsample subsample = Subsample::S1;
  std::string stratum_id;
  double multiplier = 0.0;
  int hh_size = 0;
  double aexp = 0.0;
  double oop_total = 0.0;
  double oop_inpatient = 0.0;
  double oop_outpatient = 0.0;
  bool coverage = false;

  double person_weight() const { return multiplier * static_cast<double>(hh_size); }
  double pcexp() const { return aexp / static_cast<double>(hh_size); }
};

/// Ordered component vocabulary for one care type (inpatient: 8 names,
/// outpatient: 7). Episode cost vectors are parallel to this list.
const std::vector<std::string>& component_names(CareType type);

/// Union of both vocabularies, in canonical episodes.csv column order.
const std::vector<std::string>& all_component_names();

/// One care episode. `costs` is parallel to component_names(care_type).
struct EpisodeRecord {
  std::string episode_id;
  std::string hh_id;
  CareType care_type = CareType::Inpatient;
  Facility facility = Facility::Public;
  Sex patient_sex = Sex::Male;
  SocialGroup social_group = SocialGroup::Others;
  Religion religion = Religion::Others;
  bool chronic = false;
  bool is_delivery = false;
  double multiplier = 0.0;
  std::vector<double> costs;

  double total_cost() const {
    double s = 0.0;
    for (double c : costs) s += c;
    return s;
  }
};

struct SurveyDataset {
  std::vector<HouseholdRecord> households;
  std::vector<EpisodeRecord> episodes;
  std::string label;
};

/// hh_id -> index into ds.households. Duplicate ids keep the first entry;
/// validate_dataset reports the duplicates.
std::unordered_map<std::string, std::size_t> household_index(const SurveyDataset& ds);

/// District code -> name map. Defaults to the 19 districts of West Bengal
/// in reporting order; replaceable from a two-column CSV.
class DistrictMap {
 public:
  static DistrictMap defaults();
  static DistrictMap from_csv(const std::string& path);

  bool contains(int code) const { return by_code_.count(code) > 0; }
  const std::string& name(int code) const;
  const std::vector<std::pair<int, std::string>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::pair<int, std::string>> entries_;
  std::unordered_map<int, std::size_t> by_code_;
  void rebuild_index();
};

/// Which categorical field a grouping reads.
enum class GroupField { PatientSex, Sector, SocialGroup, Religion };

GroupField group_field_from(std::string_view s);
std::string_view to_string(GroupField f);

/// A subgroup partition for Gini decomposition. `categories` lists the
/// merged labels with the reference (sign anchor) first; `merge_rules` maps
/// raw field labels onto merged ones (identity when absent).
struct GroupingSpec {
  std::string name;
  GroupField field = GroupField::PatientSex;
  std::vector<std::string> categories;
  std::unordered_map<std::string, std::string> merge_rules;

  const std::string& reference() const { return categories.front(); }

  /// Merged label for a raw field value; throws BadEnum if the merged label
  /// is not a declared category.
  const std::string& category_for(std::string_view raw) const;
  int category_index(std::string_view raw) const;

  void validate() const;
};

/// The paper's four factors: sex (ref Male), sector (ref Urban),
/// social group SC&ST-combined vs Others (ref Others), religion Muslim vs
/// Others (ref Others). Reference categories are overridable.
std::vector<GroupingSpec> default_groupings();
GroupingSpec make_grouping(GroupField field, const std::string& reference);

}  // namespace cheq
