#include "cheq/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cheq/csv.hpp"
#include "cheq/util.hpp"

namespace cheq {

namespace {

constexpr double kComponentTol = 1e-6;

std::string row_tag(std::size_t row) { return "row " + std::to_string(row + 2); }  // header = line 1

double require_double(const csv::Table& t, std::size_t row, std::size_t col) {
  bool ok = false;
  double v = parse_double(t.rows[row][col], &ok);
  if (!ok)
    fail(Errc::BadValue, row_tag(row) + ", " + t.header[col] + ": not a number ('" +
                             t.rows[row][col] + "')");
  return v;
}

long require_long(const csv::Table& t, std::size_t row, std::size_t col) {
  bool ok = false;
  long v = parse_long(t.rows[row][col], &ok);
  if (!ok)
    fail(Errc::BadValue, row_tag(row) + ", " + t.header[col] + ": not an integer ('" +
                             t.rows[row][col] + "')");
  return v;
}

bool parse_bool(std::string_view s, bool* ok) {
  *ok = true;
  auto l = lower(s);
  if (l == "1" || l == "true") return true;
  if (l == "0" || l == "false") return false;
  *ok = false;
  return false;
}

bool require_bool(const csv::Table& t, std::size_t row, std::size_t col) {
  bool ok = false;
  bool v = parse_bool(t.rows[row][col], &ok);
  if (!ok)
    fail(Errc::BadEnum, row_tag(row) + ", " + t.header[col] + ": expected 0/1/true/false, got '" +
                            t.rows[row][col] + "'");
  return v;
}

std::size_t require_column(const csv::Table& t, const std::string& file,
                           std::string_view name) {
  auto col = t.column(name);
  if (!col) fail(Errc::MissingColumn, file + ": missing column '" + std::string(name) + "'");
  return *col;
}

template <typename Fn>
auto wrap_enum(std::size_t row, Fn&& fn) {
  try {
    return fn();
  } catch (const CheqError& e) {
    if (e.code() == Errc::BadEnum) throw CheqError(Errc::BadEnum, row_tag(row) + ", " + e.what());
    throw;
  }
}

}  // namespace

SurveyDataset load_households(const std::string& path, std::optional<Agency> expected_agency,
                              const DistrictMap& districts, LoadStats* stats) {
  auto t = csv::read_file(path);
  const char* cols[] = {"hh_id",      "district_code", "sector",     "agency",
                        "subsample",  "stratum_id",    "multiplier", "hh_size",
                        "aexp",       "oop_total",     "oop_inpatient",
                        "oop_outpatient", "coverage"};
  std::size_t c[13];
  for (std::size_t i = 0; i < 13; ++i) c[i] = require_column(t, path, cols[i]);

  SurveyDataset ds;
  ds.label = expected_agency ? lower(to_string(*expected_agency)) : "data";
  ds.households.reserve(t.rows.size());
  std::unordered_set<std::string> seen;
  seen.reserve(t.rows.size());

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    HouseholdRecord h;
    h.hh_id = t.rows[r][c[0]];
    if (h.hh_id.empty()) fail(Errc::BadValue, row_tag(r) + ", hh_id: empty");
    if (!seen.insert(h.hh_id).second)
      fail(Errc::DuplicateId, row_tag(r) + ", hh_id: duplicate id '" + h.hh_id + "'");
    h.district_code = static_cast<int>(require_long(t, r, c[1]));
    if (!districts.contains(h.district_code))
      fail(Errc::BadEnum,
           row_tag(r) + ", district_code: unknown district " + std::to_string(h.district_code));
    h.sector = wrap_enum(r, [&] { return sector_from(t.rows[r][c[2]]); });
    h.agency = wrap_enum(r, [&] { return agency_from(t.rows[r][c[3]]); });
    if (expected_agency && h.agency != *expected_agency)
      fail(Errc::BadEnum, row_tag(r) + ", agency: expected " +
                              std::string(to_string(*expected_agency)) + ", got " +
                              std::string(to_string(h.agency)));
    h.subsample = wrap_enum(r, [&] { return subsample_from(t.rows[r][c[4]]); });
    h.stratum_id = t.rows[r][c[5]];
    h.multiplier = require_double(t, r, c[6]);
    if (!(h.multiplier > 0.0))
      fail(Errc::NegativeValue, row_tag(r) + ", multiplier: must be > 0, got " +
                                    t.rows[r][c[6]]);
    h.hh_size = static_cast<int>(require_long(t, r, c[7]));
    if (h.hh_size <= 0)
      fail(Errc::NegativeValue, row_tag(r) + ", hh_size: must be > 0, got " + t.rows[r][c[7]]);
    h.aexp = require_double(t, r, c[8]);
    h.oop_total = require_double(t, r, c[9]);
    h.oop_inpatient = require_double(t, r, c[10]);
    h.oop_outpatient = require_double(t, r, c[11]);
    const double* amounts[] = {&h.aexp, &h.oop_total, &h.oop_inpatient, &h.oop_outpatient};
    for (std::size_t i = 0; i < 4; ++i)
      if (*amounts[i] < 0.0)
        fail(Errc::NegativeValue, row_tag(r) + ", " + cols[8 + i] + ": negative value");
    h.coverage = require_bool(t, r, c[12]);
    ds.households.push_back(std::move(h));
  }
  if (ds.households.empty()) fail(Errc::BadValue, path + ": no household rows");
  if (stats) stats->rows += t.rows.size();
  return ds;
}

void load_episodes(const std::string& path, SurveyDataset& ds, LoadStats* stats) {
  auto t = csv::read_file(path);
  const char* cols[] = {"episode_id", "hh_id",      "care_type", "facility",  "patient_sex",
                        "social_group", "religion", "multiplier"};
  std::size_t c[8];
  for (std::size_t i = 0; i < 8; ++i) c[i] = require_column(t, path, cols[i]);

  auto chronic_col = t.column("chronic");
  auto delivery_col = t.column("is_delivery");
  if (!chronic_col && stats)
    stats->warnings.push_back(path + ": no 'chronic' column, defaulting to false");
  if (!delivery_col && stats)
    stats->warnings.push_back(path + ": no 'is_delivery' column, defaulting to false");

  const auto& all = all_component_names();
  std::vector<std::size_t> comp_col(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) comp_col[i] = require_column(t, path, all[i]);

  std::unordered_set<std::string> seen;
  seen.reserve(t.rows.size());
  ds.episodes.reserve(ds.episodes.size() + t.rows.size());

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    EpisodeRecord e;
    e.episode_id = t.rows[r][c[0]];
    if (e.episode_id.empty()) fail(Errc::BadValue, row_tag(r) + ", episode_id: empty");
    if (!seen.insert(e.episode_id).second)
      fail(Errc::DuplicateId, row_tag(r) + ", episode_id: duplicate id '" + e.episode_id + "'");
    e.hh_id = t.rows[r][c[1]];
    e.care_type = wrap_enum(r, [&] { return care_type_from(t.rows[r][c[2]]); });
    e.facility = wrap_enum(r, [&] { return facility_from(t.rows[r][c[3]]); });
    e.patient_sex = wrap_enum(r, [&] { return sex_from(t.rows[r][c[4]]); });
    e.social_group = wrap_enum(r, [&] { return social_group_from(t.rows[r][c[5]]); });
    e.religion = wrap_enum(r, [&] { return religion_from(t.rows[r][c[6]]); });
    e.multiplier = require_double(t, r, c[7]);
    if (!(e.multiplier > 0.0))
      fail(Errc::NegativeValue, row_tag(r) + ", multiplier: must be > 0");
    e.chronic = chronic_col ? require_bool(t, r, *chronic_col) : false;
    e.is_delivery = delivery_col ? require_bool(t, r, *delivery_col) : false;

    const auto& names = component_names(e.care_type);
    e.costs.assign(names.size(), 0.0);
    for (std::size_t i = 0; i < all.size(); ++i) {
      const std::string& cell = t.rows[r][comp_col[i]];
      auto it = std::find(names.begin(), names.end(), all[i]);
      if (it == names.end()) {
        // column outside this care type's vocabulary must be empty or zero
        if (!cell.empty()) {
          bool ok = false;
          double v = parse_double(cell, &ok);
          if (!ok || v != 0.0)
            fail(Errc::BadValue, row_tag(r) + ", " + all[i] + ": not a " +
                                     std::string(to_string(e.care_type)) + " component");
        }
        continue;
      }
      if (cell.empty())
        fail(Errc::BadValue, row_tag(r) + ", " + all[i] + ": required for " +
                                 std::string(to_string(e.care_type)));
      double v = require_double(t, r, comp_col[i]);
      if (v < 0.0) fail(Errc::NegativeValue, row_tag(r) + ", " + all[i] + ": negative value");
      e.costs[static_cast<std::size_t>(it - names.begin())] = v;
    }
    ds.episodes.push_back(std::move(e));
  }
  if (stats) stats->rows += t.rows.size();
}

namespace {

std::vector<std::string> household_row(const HouseholdRecord& h) {
  return {h.hh_id,
          std::to_string(h.district_code),
          std::string(to_string(h.sector)),
          std::string(to_string(h.agency)),
          std::string(to_string(h.subsample)),
          h.stratum_id,
          fmt_value(h.multiplier),
          std::to_string(h.hh_size),
          fmt_value(h.aexp),
          fmt_value(h.oop_total),
          fmt_value(h.oop_inpatient),
          fmt_value(h.oop_outpatient),
          h.coverage ? "1" : "0"};
}

}  // namespace

void save_households(const SurveyDataset& ds, std::ostream& out) {
  csv::write_row(out, {"hh_id", "district_code", "sector", "agency", "subsample", "stratum_id",
                       "multiplier", "hh_size", "aexp", "oop_total", "oop_inpatient",
                       "oop_outpatient", "coverage"});
  for (const auto& h : ds.households) csv::write_row(out, household_row(h));
}

void save_episodes(const SurveyDataset& ds, std::ostream& out) {
  std::vector<std::string> header = {"episode_id", "hh_id",    "care_type",
                                     "facility",   "patient_sex", "social_group",
                                     "religion",   "chronic",  "is_delivery", "multiplier"};
  const auto& all = all_component_names();
  header.insert(header.end(), all.begin(), all.end());
  csv::write_row(out, header);
  for (const auto& e : ds.episodes) {
    std::vector<std::string> row = {e.episode_id,
                                    e.hh_id,
                                    std::string(to_string(e.care_type)),
                                    std::string(to_string(e.facility)),
                                    std::string(to_string(e.patient_sex)),
                                    std::string(to_string(e.social_group)),
                                    std::string(to_string(e.religion)),
                                    e.chronic ? "1" : "0",
                                    e.is_delivery ? "1" : "0",
                                    fmt_value(e.multiplier)};
    const auto& names = component_names(e.care_type);
    for (const auto& comp : all) {
      auto it = std::find(names.begin(), names.end(), comp);
      if (it == names.end()) {
        row.emplace_back();
      } else {
        row.push_back(fmt_value(e.costs[static_cast<std::size_t>(it - names.begin())]));
      }
    }
    csv::write_row(out, row);
  }
}

void save_households(const SurveyDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  save_households(ds, out);
}

void save_episodes(const SurveyDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  save_episodes(ds, out);
}

ValidationReport validate_dataset(const SurveyDataset& ds, const DistrictMap& districts) {
  ValidationReport report;
  auto add = [&](std::string rule, std::string subject, std::string detail) {
    report.violations.push_back({std::move(rule), std::move(subject), std::move(detail)});
  };

  if (ds.households.empty()) add("empty_households", ds.label, "dataset has no households");

  std::unordered_set<std::string> hh_ids;
  for (const auto& h : ds.households) {
    if (!hh_ids.insert(h.hh_id).second) add("duplicate_hh_id", h.hh_id, "hh_id repeats");
    if (!(h.multiplier > 0.0)) add("multiplier_positive", h.hh_id, "multiplier <= 0");
    if (h.hh_size <= 0) add("hh_size_positive", h.hh_id, "hh_size <= 0");
    if (h.aexp < 0.0) add("aexp_nonnegative", h.hh_id, "aexp < 0");
    if (h.oop_total < 0.0 || h.oop_inpatient < 0.0 || h.oop_outpatient < 0.0)
      add("oop_nonnegative", h.hh_id, "negative OOP amount");
    if (h.oop_inpatient + h.oop_outpatient > h.oop_total + kComponentTol)
      add("component_sum", h.hh_id,
          "oop_inpatient + oop_outpatient exceeds oop_total by " +
              fmt_value(h.oop_inpatient + h.oop_outpatient - h.oop_total));
    if (!districts.contains(h.district_code))
      add("district_known", h.hh_id, "district_code " + std::to_string(h.district_code));
  }

  std::unordered_set<std::string> ep_ids;
  for (const auto& e : ds.episodes) {
    if (!ep_ids.insert(e.episode_id).second)
      add("duplicate_episode_id", e.episode_id, "episode_id repeats");
    if (hh_ids.find(e.hh_id) == hh_ids.end())
      add("dangling_hh_id", e.episode_id, "hh_id '" + e.hh_id + "' not in households");
    if (!(e.multiplier > 0.0)) add("multiplier_positive", e.episode_id, "multiplier <= 0");
    if (e.costs.size() != component_names(e.care_type).size())
      add("component_schema", e.episode_id, "cost vector does not match care_type schema");
    for (double v : e.costs)
      if (v < 0.0) {
        add("component_nonnegative", e.episode_id, "negative cost component");
        break;
      }
  }
  return report;
}

}  // namespace cheq
