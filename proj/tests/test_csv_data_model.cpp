#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cheq/csv.hpp"
#include "cheq/data_model.hpp"
#include "cheq/util.hpp"

using namespace cheq;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = fs::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

const char* kHouseholdHeader =
    "hh_id,district_code,sector,agency,subsample,stratum_id,multiplier,hh_size,aexp,"
    "oop_total,oop_inpatient,oop_outpatient,coverage\n";

std::string three_row_file() {
  std::string s = kHouseholdHeader;
  s += "H1,1,Rural,Central,S1,D1-R,10,4,50000,6000,2000,4000,0\n";
  s += "H2,1,Urban,Central,S2,D1-U,12.5,2,80000,0,0,0,1\n";
  s += "H3,2,Rural,Central,S1,D2-R,9,5,20000,2500,2500,0,0\n";
  return s;
}

}  // namespace

TEST_CASE("csv parses quoted fields and reports bad shapes") {
  auto t = csv::read_string("a,b\n1,\"x,\"\"y\"\n");
  CHECK(t.header.size() == 2);
  CHECK(t.rows[0][1] == "x,\"y");
  CHECK(csv::escape("plain") == "plain");
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK_THROWS_AS((void)csv::read_string("a,b\n1\n"), CheqError);
}

TEST_CASE("well-formed three-row file loads as three households") {
  auto path = write_temp("cheq_hh_ok.csv", three_row_file());
  auto ds = load_households(path, Agency::Central, DistrictMap::defaults());
  CHECK(ds.households.size() == 3);
  CHECK(ds.households[1].coverage);
  CHECK(ds.households[0].multiplier == doctest::Approx(10.0));
  CHECK(ds.label == "central");
}

TEST_CASE("zero multiplier rejected with a row-numbered NegativeValue") {
  std::string s = kHouseholdHeader;
  s += "H1,1,Rural,Central,S1,D1-R,10,4,50000,6000,2000,4000,0\n";
  s += "H2,1,Rural,Central,S1,D1-R,0,4,50000,6000,2000,4000,0\n";
  auto path = write_temp("cheq_hh_zero_mult.csv", s);
  try {
    load_households(path, Agency::Central, DistrictMap::defaults());
    FAIL("expected NegativeValue");
  } catch (const CheqError& e) {
    CHECK(e.code() == Errc::NegativeValue);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    CHECK(std::string(e.what()).find("multiplier") != std::string::npos);
  }
}

TEST_CASE("missing column, bad enum, duplicate id and unknown district rejected") {
  auto no_col = write_temp("cheq_hh_nocol.csv",
                           "hh_id,district_code,sector\nH1,1,Rural\n");
  CHECK_THROWS_WITH_AS((void)load_households(no_col, std::nullopt, DistrictMap::defaults()),
                       doctest::Contains("missing column"), CheqError);

  std::string bad_enum = kHouseholdHeader;
  bad_enum += "H1,1,Countryside,Central,S1,x,10,4,5,1,0,1,0\n";
  auto p2 = write_temp("cheq_hh_badenum.csv", bad_enum);
  try {
    load_households(p2, std::nullopt, DistrictMap::defaults());
    FAIL("expected BadEnum");
  } catch (const CheqError& e) {
    CHECK(e.code() == Errc::BadEnum);
  }

  std::string dup = three_row_file();
  dup += "H1,1,Rural,Central,S1,D1-R,10,4,50000,6000,2000,4000,0\n";
  auto p3 = write_temp("cheq_hh_dup.csv", dup);
  try {
    load_households(p3, std::nullopt, DistrictMap::defaults());
    FAIL("expected DuplicateId");
  } catch (const CheqError& e) {
    CHECK(e.code() == Errc::DuplicateId);
  }

  std::string unknown = kHouseholdHeader;
  unknown += "H1,99,Rural,Central,S1,x,10,4,5,1,0,1,0\n";
  auto p4 = write_temp("cheq_hh_unknown.csv", unknown);
  try {
    load_households(p4, std::nullopt, DistrictMap::defaults());
    FAIL("expected BadEnum for district");
  } catch (const CheqError& e) {
    CHECK(e.code() == Errc::BadEnum);
    CHECK(std::string(e.what()).find("district") != std::string::npos);
  }
}

TEST_CASE("episode loading enforces the care-type component schema") {
  auto hh = write_temp("cheq_hh_for_ep.csv", three_row_file());
  auto ds = load_households(hh, Agency::Central, DistrictMap::defaults());

  std::string header =
      "episode_id,hh_id,care_type,facility,patient_sex,social_group,religion,chronic,"
      "is_delivery,multiplier,package,doctor_fee,medicines,medicines_ayush,medicines_other,"
      "diagnostics,bed_charges,other_medical,transport,other_nonmedical\n";

  SUBCASE("valid inpatient and outpatient rows") {
    std::string s = header;
    s += "E1,H1,Inpatient,Private,Male,SC,Others,1,0,10,100,50,30,,,20,10,5,5,5\n";
    s += "E2,H2,Outpatient,Public,Female,Others,Muslim,0,0,12.5,,40,,5,60,10,,5,5,5\n";
    auto path = write_temp("cheq_ep_ok.csv", s);
    load_episodes(path, ds);
    CHECK(ds.episodes.size() == 2);
    CHECK(ds.episodes[0].costs.size() == 8);
    CHECK(ds.episodes[0].total_cost() == doctest::Approx(225.0));
    CHECK(ds.episodes[1].costs.size() == 7);
    auto report = validate_dataset(ds, DistrictMap::defaults());
    CHECK(report.valid());
  }

  SUBCASE("outpatient row with a package value is rejected") {
    std::string s = header;
    s += "E1,H1,Outpatient,Public,Male,SC,Others,0,0,10,77,40,,5,60,10,,5,5,5\n";
    auto path = write_temp("cheq_ep_bad.csv", s);
    CHECK_THROWS_AS(load_episodes(path, ds), CheqError);
  }

  SUBCASE("missing chronic column defaults to false with a warning") {
    std::string s =
        "episode_id,hh_id,care_type,facility,patient_sex,social_group,religion,"
        "is_delivery,multiplier,package,doctor_fee,medicines,medicines_ayush,"
        "medicines_other,diagnostics,bed_charges,other_medical,transport,other_nonmedical\n";
    s += "E1,H1,Inpatient,Private,Male,SC,Others,0,10,100,50,30,,,20,10,5,5,5\n";
    auto path = write_temp("cheq_ep_nochronic.csv", s);
    LoadStats stats;
    load_episodes(path, ds, &stats);
    CHECK(!ds.episodes.back().chronic);
    CHECK(stats.warnings.size() == 1);
  }
}

TEST_CASE("validate_dataset reports violations as data") {
  auto path = write_temp("cheq_hh_valid.csv", three_row_file());
  auto ds = load_households(path, Agency::Central, DistrictMap::defaults());

  SUBCASE("consistent dataset yields an empty report") {
    auto report = validate_dataset(ds, DistrictMap::defaults());
    CHECK(report.valid());
  }

  SUBCASE("dangling episode hh_id yields one referential violation") {
    EpisodeRecord e;
    e.episode_id = "E9";
    e.hh_id = "NOPE";
    e.care_type = CareType::Outpatient;
    e.multiplier = 1.0;
    e.costs.assign(7, 0.0);
    ds.episodes.push_back(e);
    auto report = validate_dataset(ds, DistrictMap::defaults());
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].rule == "dangling_hh_id");
    CHECK(report.violations[0].subject == "E9");
  }

  SUBCASE("component sum above total by 5 yields one component-sum violation") {
    ds.households[0].oop_inpatient = 8.0;
    ds.households[0].oop_outpatient = 3.0;
    ds.households[0].oop_total = 6.0;
    auto report = validate_dataset(ds, DistrictMap::defaults());
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].rule == "component_sum");
  }

  SUBCASE("the report is a pure function of the dataset") {
    auto r1 = validate_dataset(ds, DistrictMap::defaults());
    auto r2 = validate_dataset(ds, DistrictMap::defaults());
    CHECK(r1.violations.size() == r2.violations.size());
  }
}

TEST_CASE("load then re-serialize is stable after one canonicalization") {
  // scrambled column order and short float formatting on the way in
  std::string s =
      "coverage,hh_id,aexp,district_code,sector,agency,subsample,stratum_id,multiplier,"
      "hh_size,oop_total,oop_inpatient,oop_outpatient\n";
  s += "0,H1,50000.5,1,Rural,Central,S1,D1-R,10.25,4,6000,2000,4000\n";
  s += "1,H2,80000,2,Urban,Central,S2,D2-U,12.125,2,0,0,0\n";
  auto path = write_temp("cheq_roundtrip_in.csv", s);
  auto ds = load_households(path, std::nullopt, DistrictMap::defaults());

  std::ostringstream first;
  save_households(ds, first);
  auto path2 = write_temp("cheq_roundtrip_mid.csv", first.str());
  auto ds2 = load_households(path2, std::nullopt, DistrictMap::defaults());
  std::ostringstream second;
  save_households(ds2, second);
  CHECK(first.str() == second.str());

  // same for episodes
  EpisodeRecord e;
  e.episode_id = "E1";
  e.hh_id = "H1";
  e.care_type = CareType::Inpatient;
  e.facility = Facility::Private;
  e.patient_sex = Sex::Female;
  e.social_group = SocialGroup::OBC;
  e.religion = Religion::Muslim;
  e.multiplier = 3.5;
  e.costs = {10.123456, 0, 5, 0, 0, 1, 2, 3};
  ds.episodes.push_back(e);
  std::ostringstream ep1;
  save_episodes(ds, ep1);
  auto path3 = write_temp("cheq_roundtrip_ep.csv", ep1.str());
  SurveyDataset ds3 = ds;
  ds3.episodes.clear();
  load_episodes(path3, ds3);
  std::ostringstream ep2;
  save_episodes(ds3, ep2);
  CHECK(ep1.str() == ep2.str());
}

TEST_CASE("district map defaults to the 19 reporting districts") {
  auto m = DistrictMap::defaults();
  CHECK(m.size() == 19);
  CHECK(m.name(1) == "Darjeeling");
  CHECK(m.name(19) == "Purba Medinipur");
  CHECK(!m.contains(20));
}

TEST_CASE("grouping specs merge and validate categories") {
  auto social = make_grouping(GroupField::SocialGroup, "Others");
  CHECK(social.reference() == "Others");
  CHECK(social.category_for("SC") == "SC&ST");
  CHECK(social.category_for("ST") == "SC&ST");
  CHECK(social.category_for("OBC") == "Others");
  CHECK(social.category_index("Others") == 0);

  auto flipped = make_grouping(GroupField::SocialGroup, "SC&ST");
  CHECK(flipped.reference() == "SC&ST");
  CHECK(flipped.category_index("SC") == 0);

  CHECK_THROWS_AS((void)make_grouping(GroupField::PatientSex, "NotACat"), CheqError);
}
