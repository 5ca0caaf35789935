#include "cheq/types.hpp"

#include <algorithm>

#include "cheq/csv.hpp"
#include "cheq/util.hpp"

namespace cheq {

namespace {

template <typename E>
[[noreturn]] void bad_enum(std::string_view field, std::string_view value) {
  fail(Errc::BadEnum, std::string(field) + ": unknown value '" + std::string(value) + "'");
}

}  // namespace

std::string_view to_string(Sector v) { return v == Sector::Rural ? "Rural" : "Urban"; }
std::string_view to_string(Agency v) { return v == Agency::Central ? "Central" : "State"; }
std::string_view to_string(Subsample v) { return v == Subsample::S1 ? "S1" : "S2"; }
std::string_view to_string(CareType v) {
  return v == CareType::Inpatient ? "Inpatient" : "Outpatient";
}
std::string_view to_string(Facility v) { return v == Facility::Public ? "Public" : "Private"; }
std::string_view to_string(Sex v) { return v == Sex::Male ? "Male" : "Female"; }
std::string_view to_string(SocialGroup v) {
  switch (v) {
    case SocialGroup::ST: return "ST";
    case SocialGroup::SC: return "SC";
    case SocialGroup::OBC: return "OBC";
    default: return "Others";
  }
}
std::string_view to_string(Religion v) { return v == Religion::Muslim ? "Muslim" : "Others"; }

Sector sector_from(std::string_view s) {
  if (s == "Rural") return Sector::Rural;
  if (s == "Urban") return Sector::Urban;
  bad_enum<Sector>("sector", s);
}

Agency agency_from(std::string_view s) {
  if (s == "Central") return Agency::Central;
  if (s == "State") return Agency::State;
  bad_enum<Agency>("agency", s);
}

Subsample subsample_from(std::string_view s) {
  if (s == "S1") return Subsample::S1;
  if (s == "S2") return Subsample::S2;
  bad_enum<Subsample>("subsample", s);
}

CareType care_type_from(std::string_view s) {
  if (s == "Inpatient") return CareType::Inpatient;
  if (s == "Outpatient") return CareType::Outpatient;
  bad_enum<CareType>("care_type", s);
}

Facility facility_from(std::string_view s) {
  if (s == "Public") return Facility::Public;
  if (s == "Private") return Facility::Private;
  bad_enum<Facility>("facility", s);
}

Sex sex_from(std::string_view s) {
  if (s == "Male") return Sex::Male;
  if (s == "Female") return Sex::Female;
  bad_enum<Sex>("patient_sex", s);
}

SocialGroup social_group_from(std::string_view s) {
  if (s == "ST") return SocialGroup::ST;
  if (s == "SC") return SocialGroup::SC;
  if (s == "OBC") return SocialGroup::OBC;
  if (s == "Others") return SocialGroup::Others;
  bad_enum<SocialGroup>("social_group", s);
}

Religion religion_from(std::string_view s) {
  if (s == "Muslim") return Religion::Muslim;
  if (s == "Others") return Religion::Others;
  bad_enum<Religion>("religion", s);
}

const std::vector<std::string>& component_names(CareType type) {
  static const std::vector<std::string> inpatient = {
      "package",       "doctor_fee", "medicines", "diagnostics",
      "bed_charges",   "other_medical", "transport", "other_nonmedical"};
  static const std::vector<std::string> outpatient = {
      "doctor_fee",    "medicines_ayush", "medicines_other", "diagnostics",
      "other_medical", "transport",       "other_nonmedical"};
  return type == CareType::Inpatient ? inpatient : outpatient;
}

const std::vector<std::string>& all_component_names() {
  static const std::vector<std::string> all = {
      "package",     "doctor_fee",    "medicines", "medicines_ayush", "medicines_other",
      "diagnostics", "bed_charges",   "other_medical", "transport",   "other_nonmedical"};
  return all;
}

std::unordered_map<std::string, std::size_t> household_index(const SurveyDataset& ds) {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(ds.households.size());
  for (std::size_t i = 0; i < ds.households.size(); ++i)
    idx.emplace(ds.households[i].hh_id, i);
  return idx;
}

void DistrictMap::rebuild_index() {
  by_code_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) by_code_[entries_[i].first] = i;
}

DistrictMap DistrictMap::defaults() {
  DistrictMap m;
  m.entries_ = {
      {1, "Darjeeling"},      {2, "Jalpaiguri"},        {3, "Coochbehar"},
      {4, "Uttar Dinajpur"},  {5, "Dakshin Dinajpur"},  {6, "Maldah"},
      {7, "Murshidabad"},     {8, "Birbhum"},           {9, "Barddhaman"},
      {10, "Nadia"},          {11, "North 24 Parganas"}, {12, "Hooghly"},
      {13, "Bankura"},        {14, "Purulia"},          {15, "Howrah"},
      {16, "Kolkata"},        {17, "South 24 Parganas"}, {18, "Paschim Medinipur"},
      {19, "Purba Medinipur"}};
  m.rebuild_index();
  return m;
}

DistrictMap DistrictMap::from_csv(const std::string& path) {
  auto table = csv::read_file(path);
  auto code_col = table.column("district_code");
  auto name_col = table.column("name");
  if (!code_col || !name_col)
    fail(Errc::MissingColumn, "district map needs district_code and name columns: " + path);
  DistrictMap m;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool ok = false;
    long code = parse_long(table.rows[r][*code_col], &ok);
    if (!ok) fail(Errc::BadValue, "district map row " + std::to_string(r + 2) + ": bad code");
    m.entries_.emplace_back(static_cast<int>(code), table.rows[r][*name_col]);
  }
  if (m.entries_.empty()) fail(Errc::BadValue, "district map is empty: " + path);
  m.rebuild_index();
  if (m.by_code_.size() != m.entries_.size())
    fail(Errc::DuplicateId, "district map has duplicate codes: " + path);
  return m;
}

const std::string& DistrictMap::name(int code) const {
  auto it = by_code_.find(code);
  if (it == by_code_.end())
    fail(Errc::BadEnum, "unknown district code " + std::to_string(code));
  return entries_[it->second].second;
}

GroupField group_field_from(std::string_view s) {
  auto l = lower(s);
  if (l == "sex" || l == "patient_sex" || l == "gender") return GroupField::PatientSex;
  if (l == "sector") return GroupField::Sector;
  if (l == "social" || l == "social_group") return GroupField::SocialGroup;
  if (l == "religion") return GroupField::Religion;
  fail(Errc::BadEnum, "grouping field: unknown value '" + std::string(s) + "'");
}

std::string_view to_string(GroupField f) {
  switch (f) {
    case GroupField::PatientSex: return "sex";
    case GroupField::Sector: return "sector";
    case GroupField::SocialGroup: return "social";
    default: return "religion";
  }
}

const std::string& GroupingSpec::category_for(std::string_view raw) const {
  auto it = merge_rules.find(std::string(raw));
  const std::string* label = it != merge_rules.end() ? &it->second : nullptr;
  for (const auto& c : categories) {
    if (label ? (c == *label) : (c == raw)) return c;
  }
  fail(Errc::BadEnum,
       "grouping " + name + ": value '" + std::string(raw) + "' maps to no declared category");
}

int GroupingSpec::category_index(std::string_view raw) const {
  const std::string& c = category_for(raw);
  for (std::size_t i = 0; i < categories.size(); ++i)
    if (categories[i] == c) return static_cast<int>(i);
  return -1;  // unreachable, category_for already validated
}

void GroupingSpec::validate() const {
  if (categories.empty()) fail(Errc::InvalidConfig, "grouping " + name + ": no categories");
  for (std::size_t i = 0; i < categories.size(); ++i)
    for (std::size_t j = i + 1; j < categories.size(); ++j)
      if (categories[i] == categories[j])
        fail(Errc::InvalidConfig, "grouping " + name + ": duplicate category " + categories[i]);
  for (const auto& [raw, merged] : merge_rules) {
    if (std::find(categories.begin(), categories.end(), merged) == categories.end())
      fail(Errc::InvalidConfig,
           "grouping " + name + ": merge target '" + merged + "' not a category");
  }
}

GroupingSpec make_grouping(GroupField field, const std::string& reference) {
  GroupingSpec g;
  g.field = field;
  g.name = std::string(to_string(field));
  switch (field) {
    case GroupField::PatientSex:
      g.categories = {"Male", "Female"};
      break;
    case GroupField::Sector:
      g.categories = {"Urban", "Rural"};
      break;
    case GroupField::SocialGroup:
      g.categories = {"Others", "SC&ST"};
      g.merge_rules = {{"SC", "SC&ST"}, {"ST", "SC&ST"}, {"OBC", "Others"}};
      break;
    case GroupField::Religion:
      g.categories = {"Others", "Muslim"};
      break;
  }
  auto it = std::find(g.categories.begin(), g.categories.end(), reference);
  if (it == g.categories.end())
    fail(Errc::InvalidConfig,
         "grouping " + g.name + ": reference '" + reference + "' is not a category");
  std::rotate(g.categories.begin(), it, it + 1);
  g.validate();
  return g;
}

std::vector<GroupingSpec> default_groupings() {
  return {make_grouping(GroupField::PatientSex, "Male"),
          make_grouping(GroupField::Sector, "Urban"),
          make_grouping(GroupField::SocialGroup, "Others"),
          make_grouping(GroupField::Religion, "Others")};
}

}  // namespace cheq
