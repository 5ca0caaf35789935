#include "cheq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cheq/csv.hpp"
#include "cheq/data_model.hpp"
#include "cheq/estimation.hpp"
#include "cheq/stats.hpp"
#include "cheq/util.hpp"

namespace cheq {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void RunConfig::validate() const {
  if (central_households.empty() || state_households.empty())
    fail(Errc::InvalidConfig, "run config: central and state household files are required");
  if (out_dir.empty()) fail(Errc::InvalidConfig, "run config: out_dir is required");
  if (thresholds.empty()) fail(Errc::InvalidConfig, "run config: at least one threshold");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
      fail(Errc::InvalidConfig, "run config: thresholds must lie in (0,1)");
    if (i > 0 && thresholds[i] <= thresholds[i - 1])
      fail(Errc::InvalidConfig, "run config: thresholds must be strictly ascending");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) fail(Errc::InvalidConfig, "run config: alpha in (0,1)");
}

std::vector<GroupingSpec> RunConfig::groupings() const {
  return {make_grouping(GroupField::PatientSex, ref_sex),
          make_grouping(GroupField::Sector, ref_sector),
          make_grouping(GroupField::SocialGroup, ref_social),
          make_grouping(GroupField::Religion, ref_religion)};
}

DistrictMap RunConfig::districts() const {
  return districts_path.empty() ? DistrictMap::defaults() : DistrictMap::from_csv(districts_path);
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    fail(Errc::InvalidConfig, std::string("run config: ") + e.what());
  }
  RunConfig cfg;
  auto get_str = [&](const char* key, std::string& out) {
    if (j.contains(key)) out = j.at(key).get<std::string>();
  };
  get_str("central_households", cfg.central_households);
  get_str("central_episodes", cfg.central_episodes);
  get_str("state_households", cfg.state_households);
  get_str("state_episodes", cfg.state_episodes);
  get_str("out_dir", cfg.out_dir);
  get_str("districts", cfg.districts_path);
  if (j.contains("thresholds")) cfg.thresholds = j.at("thresholds").get<std::vector<double>>();
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("pool_variable"))
    cfg.pool_variable = pool_variable_from(j.at("pool_variable").get<std::string>());
  if (j.contains("force_pool")) cfg.force_pool = j.at("force_pool").get<bool>();
  if (j.contains("value")) cfg.value = value_selector_from(j.at("value").get<std::string>());
  if (j.contains("unit"))
    cfg.unit = lower(j.at("unit").get<std::string>()) == "household" ? AnalysisUnit::Household
                                                                     : AnalysisUnit::Episode;
  if (j.contains("mode")) cfg.mode = decomp_mode_from(j.at("mode").get<std::string>());
  get_str("ref_sex", cfg.ref_sex);
  get_str("ref_sector", cfg.ref_sector);
  get_str("ref_social", cfg.ref_social);
  get_str("ref_religion", cfg.ref_religion);
  if (j.contains("chronic_variant")) cfg.chronic_variant = j.at("chronic_variant").get<bool>();
  return cfg;
}

namespace {

std::string pct(double share01) { return fmt_fixed(100.0 * share01, 1); }

std::string opt_pct(const std::optional<double>& v) {
  return v ? pct(*v) : std::string("NA");
}

// Accumulates emitted files so a failing stage can remove its partial output.
class OutputTracker {
 public:
  explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {}

  std::ofstream open(const std::string& rel) {
    fs::create_directories((dir_ / rel).parent_path());
    std::ofstream out(dir_ / rel, std::ios::binary);
    if (!out) fail(Errc::IoError, "cannot write " + (dir_ / rel).string());
    written_.push_back(rel);
    return out;
  }

  void write(const std::string& rel, const std::string& bytes) {
    auto out = open(rel);
    out << bytes;
  }

  const std::vector<std::string>& written() const { return written_; }

  void remove_all() {
    for (const auto& rel : written_) {
      std::error_code ec;
      fs::remove(dir_ / rel, ec);
    }
  }

  std::string hash_of(const std::string& rel) const {
    return fnv1a64_hex(read_file_bytes((dir_ / rel).string()));
  }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

std::string poolability_json(const PoolabilityReport& rep) {
  json j;
  j["variable"] = std::string(to_string(rep.variable));
  j["alpha"] = rep.alpha;
  j["runs_z"] = rep.runs_z;
  j["runs_p"] = rep.runs_p;
  j["chi2_stat"] = rep.chi2_stat;
  j["chi2_df"] = rep.chi2_df;
  j["chi2_p"] = rep.chi2_p;
  j["z_means"] = rep.z_means;
  j["z_means_p"] = rep.z_means_p;
  j["poolable"] = rep.poolable;
  j["warnings"] = rep.warnings;
  return j.dump(2) + "\n";
}

void write_che_table(std::ostream& out, const CheTable& table) {
  std::vector<std::string> header{"domain"};
  for (double t : table.thresholds) {
    const std::string tag = pct(t);
    header.push_back("incidence_" + tag);
    header.push_back("se_" + tag);
    header.push_back("ci99_lo_" + tag);
    header.push_back("ci99_hi_" + tag);
    header.push_back("n_" + tag);
    header.push_back("excluded_" + tag);
  }
  csv::write_row(out, header);
  for (const auto& row : table.rows) {
    std::vector<std::string> cells{row.label};
    for (const auto& est : row.by_threshold) {
      cells.push_back(pct(est.incidence));
      cells.push_back(opt_pct(est.se));
      cells.push_back(est.ci99 ? pct(est.ci99->first) : "NA");
      cells.push_back(est.ci99 ? pct(est.ci99->second) : "NA");
      cells.push_back(std::to_string(est.n_used));
      cells.push_back(std::to_string(est.n_excluded));
    }
    csv::write_row(out, cells);
  }
}

json che_table_json(const CheTable& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json r;
    r["domain"] = row.label;
    json by = json::array();
    for (const auto& est : row.by_threshold) {
      json e;
      e["threshold"] = est.threshold;
      e["incidence"] = est.incidence;
      if (est.se) e["se"] = *est.se;
      e["n"] = est.n_used;
      e["excluded"] = est.n_excluded;
      by.push_back(std::move(e));
    }
    r["estimates"] = std::move(by);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_coverage(std::ostream& out, const CoverageTable& table) {
  csv::write_row(out, {"domain", "coverage_pct", "se", "ci99_lo", "ci99_hi", "flag", "n"});
  auto row = [&](const CoverageRow& r) {
    csv::write_row(out, {r.label, pct(r.estimate.incidence), opt_pct(r.estimate.se),
                         r.estimate.ci99 ? pct(r.estimate.ci99->first) : "NA",
                         r.estimate.ci99 ? pct(r.estimate.ci99->second) : "NA", r.flag,
                         std::to_string(r.estimate.n_used)});
  };
  for (const auto& r : table.rows) row(r);
  row(table.state);
}

void write_delivery(std::ostream& out, const CoverageTable& table) {
  csv::write_row(out, {"domain", "public_delivery_pct"});
  for (const auto& [name, share] : table.delivery_public)
    csv::write_row(out, {name, pct(share)});
  if (table.delivery_public_state)
    csv::write_row(out, {"West Bengal", pct(*table.delivery_public_state)});
}

void write_components(std::ostream& out, const ComponentTable& table) {
  std::vector<std::string> header{"domain"};
  header.insert(header.end(), table.components.begin(), table.components.end());
  csv::write_row(out, header);
  for (const auto& [label, shares] : table.rows) {
    std::vector<std::string> cells{label};
    for (double s : shares) cells.push_back(fmt_fixed(s, 1));
    csv::write_row(out, cells);
  }
}

void write_gini_table(std::ostream& out, const GiniTable& table) {
  std::vector<std::string> header{"domain", "n", "low_n", "total_gini"};
  for (const auto& g : table.grouping_names) {
    header.push_back(g + "_between");
    header.push_back(g + "_between_share");
    header.push_back(g + "_between_sig");
    header.push_back(g + "_within");
    header.push_back(g + "_within_share");
    header.push_back(g + "_overlap");
    header.push_back(g + "_overlap_share");
  }
  csv::write_row(out, header);
  for (const auto& row : table.rows) {
    std::vector<std::string> cells{row.label, std::to_string(row.n_obs),
                                   row.low_n ? "1" : "0", fmt_fixed(row.total_gini, 4)};
    for (const auto& cell : row.cells) {
      const auto& d = cell.decomp;
      cells.push_back(fmt_fixed(d.between, 4));
      cells.push_back(fmt_fixed(d.between_share, 1));
      cells.push_back(cell.degenerate ? "na" : (cell.significant ? "***" : ""));
      cells.push_back(fmt_fixed(d.within, 4));
      cells.push_back(fmt_fixed(d.within_share, 1));
      cells.push_back(fmt_fixed(d.overlap, 4));
      cells.push_back(fmt_fixed(d.overlap_share, 1));
    }
    csv::write_row(out, cells);
  }
}

}  // namespace

int exit_code_for(const CheqError& e) {
  switch (e.code()) {
    case Errc::NotPoolable:
      return 3;
    case Errc::MissingColumn:
    case Errc::BadEnum:
    case Errc::BadValue:
    case Errc::NegativeValue:
    case Errc::DuplicateId:
    case Errc::InvalidConfig:
    case Errc::IoError:
      return 2;
    default:
      return 4;
  }
}

PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  const auto districts = cfg.districts();
  OutputTracker out(cfg.out_dir);
  PipelineResult result;

  std::string stage = "load";
  try {
    // ---- load + validate ----
    LoadStats load_stats;
    auto central = load_households(cfg.central_households, Agency::Central, districts,
                                   &load_stats);
    if (!cfg.central_episodes.empty()) load_episodes(cfg.central_episodes, central, &load_stats);
    auto state = load_households(cfg.state_households, Agency::State, districts, &load_stats);
    if (!cfg.state_episodes.empty()) load_episodes(cfg.state_episodes, state, &load_stats);
    result.warnings = load_stats.warnings;

    for (const auto* ds : {&central, &state}) {
      auto report = validate_dataset(*ds, districts);
      if (!report.valid()) {
        std::string msg = ds->label + " sample fails validation: ";
        msg += std::to_string(report.violations.size()) + " violation(s); first: " +
               report.violations.front().rule + " on " + report.violations.front().subject;
        fail(Errc::BadValue, msg);
      }
    }

    // input-content hash over the four data files, for the manifest
    std::string input_bytes = read_file_bytes(cfg.central_households);
    if (!cfg.central_episodes.empty()) input_bytes += read_file_bytes(cfg.central_episodes);
    input_bytes += read_file_bytes(cfg.state_households);
    if (!cfg.state_episodes.empty()) input_bytes += read_file_bytes(cfg.state_episodes);
    const std::string input_hash = fnv1a64_hex(input_bytes);

    // ---- poolability ----
    stage = "poolability";
    auto pool_report = poolability(central, state, cfg.alpha, cfg.pool_variable);
    out.write("poolability.json", poolability_json(pool_report));
    result.entries.push_back({"poolability", {"poolability.json"}});

    // ---- pool ----
    stage = "pool";
    auto pooled = pool_datasets(central, state, pool_report, cfg.force_pool);
    for (const auto& w : pooled.warnings) result.warnings.push_back("pool: " + w);
    const SurveyDataset& data = pooled.dataset;

    // ---- estimate ----
    stage = "estimate";
    auto che_overall = che_table_overall(data, cfg.thresholds);
    auto che_district = che_table_by_district(data, districts, cfg.thresholds);
    auto che_quintile = che_table_by_quintile(data, cfg.thresholds);
    {
      auto f = out.open("che_overall.csv");
      write_che_table(f, che_overall);
    }
    {
      auto f = out.open("che_by_district.csv");
      write_che_table(f, che_district);
    }
    {
      auto f = out.open("che_by_quintile.csv");
      write_che_table(f, che_quintile);
    }
    result.entries.push_back(
        {"che", {"che_overall.csv", "che_by_district.csv", "che_by_quintile.csv"}});

    stage = "coverage";
    auto coverage = coverage_table(data, districts);
    {
      auto f = out.open("coverage.csv");
      write_coverage(f, coverage);
    }
    {
      auto f = out.open("delivery_public.csv");
      write_delivery(f, coverage);
    }
    result.entries.push_back({"coverage", {"coverage.csv", "delivery_public.csv"}});

    // ---- gini ----
    stage = "gini";
    GiniAnalysisConfig gcfg;
    gcfg.value = cfg.value;
    gcfg.unit = cfg.unit;
    gcfg.mode = cfg.mode;
    gcfg.groupings = cfg.groupings();
    auto gini = district_decomposition_table(data, districts, gcfg);
    {
      auto f = out.open("gini_decomposition.csv");
      write_gini_table(f, gini);
    }
    std::vector<std::string> gini_files{"gini_decomposition.csv"};
    std::optional<GiniTable> gini_chronic;
    if (cfg.chronic_variant && cfg.unit == AnalysisUnit::Episode) {
      GiniAnalysisConfig ccfg = gcfg;
      ccfg.chronic_only = true;
      try {
        gini_chronic = district_decomposition_table(data, districts, ccfg);
        auto f = out.open("gini_decomposition_chronic.csv");
        write_gini_table(f, *gini_chronic);
        gini_files.push_back("gini_decomposition_chronic.csv");
      } catch (const CheqError& e) {
        result.warnings.push_back(std::string("gini (chronic-only) skipped: ") + e.what());
      }
    }
    result.entries.push_back({"gini", std::move(gini_files)});

    // ---- components ----
    stage = "components";
    std::vector<std::string> comp_files;
    for (CareType type : {CareType::Inpatient, CareType::Outpatient}) {
      try {
        auto table = component_table(data, districts, type);
        const std::string name = type == CareType::Inpatient
                                     ? "components_inpatient.csv"
                                     : "components_outpatient.csv";
        auto f = out.open(name);
        write_components(f, table);
        comp_files.push_back(name);
      } catch (const CheqError& e) {
        result.warnings.push_back(std::string("components skipped: ") + e.what());
      }
    }
    result.entries.push_back({"components", std::move(comp_files)});

    // ---- stats ----
    stage = "stats";
    json stats_out;
    stats_out["poolable"] = pool_report.poolable;

    // rank correlation between district CHE vectors at the first two thresholds
    if (cfg.thresholds.size() >= 2) {
      std::vector<double> v1, v2;
      for (const auto& row : che_district.rows) {
        if (row.district_code == 0) continue;  // state row
        v1.push_back(row.by_threshold[0].incidence);
        v2.push_back(row.by_threshold[1].incidence);
      }
      if (v1.size() >= 3) {
        try {
          auto corr = stats::spearman(v1, v2);
          json c;
          c["threshold_a"] = cfg.thresholds[0];
          c["threshold_b"] = cfg.thresholds[1];
          c["rho"] = corr.rho;
          c["n"] = corr.n;
          c["p_two_sided"] = corr.p_two_sided;
          stats_out["che_measures_rank_correlation"] = std::move(c);
        } catch (const CheqError& e) {
          stats_out["che_measures_rank_correlation"] = std::string("skipped: ") + e.what();
        }
      }
    }

    // coverage vs CHE at the first threshold, raw and sign-aligned
    {
      std::vector<double> cov, che;
      for (const auto& row : coverage.rows) {
        for (const auto& crow : che_district.rows) {
          if (crow.district_code == row.district_code) {
            cov.push_back(row.estimate.incidence);
            che.push_back(crow.by_threshold[0].incidence);
            break;
          }
        }
      }
      if (cov.size() >= 3) {
        try {
          auto raw = stats::spearman(cov, che);
          std::vector<double> neg_cov(cov.size());
          for (std::size_t i = 0; i < cov.size(); ++i) neg_cov[i] = -cov[i];
          auto aligned = stats::spearman(neg_cov, che);
          json c;
          c["n"] = raw.n;
          c["rho_raw"] = raw.rho;
          c["p_raw"] = raw.p_two_sided;
          c["rho_sign_aligned"] = aligned.rho;
          c["p_sign_aligned"] = aligned.p_two_sided;
          stats_out["coverage_vs_che"] = std::move(c);
        } catch (const CheqError& e) {
          stats_out["coverage_vs_che"] = std::string("skipped: ") + e.what();
        }
      }
    }

    // chronic-vs-overall t-test on per-district total Ginis
    if (gini_chronic) {
      std::vector<double> overall, chronic;
      for (const auto& row : gini.rows)
        if (row.district_code != 0) overall.push_back(row.total_gini);
      for (const auto& row : gini_chronic->rows)
        if (row.district_code != 0) chronic.push_back(row.total_gini);
      if (overall.size() >= 2 && chronic.size() >= 2) {
        try {
          auto tt = stats::welch_t(overall, chronic);
          json c;
          c["t"] = tt.t;
          c["df"] = tt.df;
          c["p_two_sided"] = tt.p;
          stats_out["gini_overall_vs_chronic_ttest"] = std::move(c);
        } catch (const CheqError& e) {
          stats_out["gini_overall_vs_chronic_ttest"] = std::string("skipped: ") + e.what();
        }
      }
    }

    // across-district CI of |between share| per grouping
    {
      json shares;
      for (std::size_t g = 0; g < gini.grouping_names.size(); ++g) {
        std::vector<double> abs_shares;
        for (const auto& row : gini.rows) {
          if (row.district_code == 0 || row.cells[g].degenerate) continue;
          abs_shares.push_back(std::fabs(row.cells[g].decomp.between_share));
        }
        if (abs_shares.size() >= 2) {
          auto ci = stats::across_district_ci(abs_shares, 0.99);
          json c;
          c["mean"] = ci.mean;
          c["ci99_lo"] = ci.lo;
          c["ci99_hi"] = ci.hi;
          c["n"] = abs_shares.size();
          shares[gini.grouping_names[g]] = std::move(c);
        }
      }
      stats_out["abs_between_share_ci"] = std::move(shares);
    }
    out.write("stats_summary.json", stats_out.dump(2) + "\n");
    result.entries.push_back({"stats", {"stats_summary.json"}});

    // ---- choropleth ----
    stage = "choropleth";
    std::vector<std::string> choro_files;
    for (std::size_t ti = 0; ti < cfg.thresholds.size(); ++ti) {
      const std::string name = "choropleth_che_" + pct(cfg.thresholds[ti]) + ".csv";
      auto f = out.open(name);
      csv::write_row(f, {"district_code", "value"});
      for (const auto& row : che_district.rows) {
        if (row.district_code == 0) continue;
        csv::write_row(f, {std::to_string(row.district_code),
                           pct(row.by_threshold[ti].incidence)});
      }
      choro_files.push_back(name);
    }
    {
      auto f = out.open("choropleth_coverage.csv");
      csv::write_row(f, {"district_code", "value"});
      for (const auto& row : coverage.rows)
        csv::write_row(f, {std::to_string(row.district_code), pct(row.estimate.incidence)});
      choro_files.push_back("choropleth_coverage.csv");
    }
    result.entries.push_back({"choropleth", std::move(choro_files)});

    // ---- combined report + manifest ----
    stage = "manifest";
    json combined;
    combined["poolability"] = json::parse(poolability_json(pool_report));
    combined["che_overall"] = che_table_json(che_overall);
    combined["che_by_district"] = che_table_json(che_district);
    combined["che_by_quintile"] = che_table_json(che_quintile);
    combined["stats"] = stats_out;
    out.write("report.json", combined.dump(2) + "\n");
    // report.json belongs to the stats entry
    for (auto& entry : result.entries)
      if (entry.name == "stats") entry.files.push_back("report.json");

    json manifest;
    manifest["input_hash"] = input_hash;
    manifest["artifact_count"] = result.entries.size();
    json artifacts = json::array();
    for (const auto& entry : result.entries) {
      json e;
      e["name"] = entry.name;
      json files = json::array();
      for (const auto& rel : entry.files) {
        json fj;
        fj["path"] = rel;
        fj["hash"] = out.hash_of(rel);
        files.push_back(std::move(fj));
      }
      e["files"] = std::move(files);
      artifacts.push_back(std::move(e));
    }
    manifest["artifacts"] = std::move(artifacts);
    const std::string manifest_rel = "manifest.json";
    out.write(manifest_rel, manifest.dump(2) + "\n");
    result.manifest_path = (fs::path(cfg.out_dir) / manifest_rel).string();
    return result;
  } catch (const CheqError& e) {
    out.remove_all();
    throw CheqError(e.code(), "stage " + stage + ": " + e.what());
  } catch (const std::exception& e) {
    out.remove_all();
    throw CheqError(Errc::Internal, "stage " + stage + ": " + e.what());
  }
}

}  // namespace cheq
