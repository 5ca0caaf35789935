// cheq: survey-weighted catastrophic health expenditure and inequality
// toolkit. Subcommands cover the full pipeline plus each stage on its own.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cheq/csv.hpp"
#include "cheq/data_model.hpp"
#include "cheq/estimation.hpp"
#include "cheq/inequality.hpp"
#include "cheq/pipeline.hpp"
#include "cheq/pooling.hpp"
#include "cheq/stats.hpp"
#include "cheq/synth.hpp"
#include "cheq/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

cheq::DistrictMap districts_for(const std::string& path) {
  return path.empty() ? cheq::DistrictMap::defaults() : cheq::DistrictMap::from_csv(path);
}

cheq::SurveyDataset load_sample(const std::string& households, const std::string& episodes,
                                std::optional<cheq::Agency> agency,
                                const cheq::DistrictMap& districts) {
  cheq::LoadStats stats;
  auto ds = cheq::load_households(households, agency, districts, &stats);
  if (!episodes.empty()) cheq::load_episodes(episodes, ds, &stats);
  print_warnings(stats.warnings);
  auto report = cheq::validate_dataset(ds, districts);
  if (!report.valid()) {
    for (const auto& v : report.violations)
      std::cerr << "violation: " << v.rule << " (" << v.subject << "): " << v.detail << "\n";
    cheq::fail(cheq::Errc::BadValue, households + ": dataset fails validation with " +
                                         std::to_string(report.violations.size()) +
                                         " violation(s)");
  }
  return ds;
}

std::vector<double> read_numeric_column(const std::string& path) {
  auto table = cheq::csv::read_file(path);
  std::vector<double> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bool ok = false;
    double v = cheq::parse_double(table.rows[r].front(), &ok);
    if (!ok)
      cheq::fail(cheq::Errc::BadValue,
                 path + ": row " + std::to_string(r + 2) + " is not numeric");
    out.push_back(v);
  }
  return out;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"survey-weighted CHE incidence and OOP inequality toolkit"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic survey");
  std::string synth_config, synth_out = ".";
  std::optional<std::uint64_t> synth_seed;
  std::optional<int> synth_n, synth_districts;
  bool emit_population = false;
  synth->add_option("--config", synth_config, "synth config JSON");
  synth->add_option("--seed", synth_seed, "override the config seed");
  synth->add_option("--households", synth_n, "households per district (both agencies)");
  synth->add_option("--districts", synth_districts, "number of districts (1..19)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_flag("--emit-population", emit_population,
                  "also write the full finite population");

  // ---- poolability ----
  auto* poolability = app.add_subcommand("poolability", "run the agency-bias tests");
  std::string pb_central, pb_state, pb_out, pb_variable = "aexp";
  double pb_alpha = 0.05;
  poolability->add_option("--central", pb_central, "central households CSV")->required();
  poolability->add_option("--state", pb_state, "state households CSV")->required();
  poolability->add_option("--alpha", pb_alpha, "significance level");
  poolability->add_option("--variable", pb_variable, "aexp | oop_total | pcexp");
  poolability->add_option("--out", pb_out, "report JSON path (default stdout)");

  // ---- pool ----
  auto* pool = app.add_subcommand("pool", "pool the two samples with rescaled multipliers");
  std::string pl_central, pl_state, pl_central_ep, pl_state_ep, pl_out, pl_out_ep;
  std::string pl_variable = "aexp";
  double pl_alpha = 0.05;
  bool pl_force = false;
  pool->add_option("--central", pl_central, "central households CSV")->required();
  pool->add_option("--state", pl_state, "state households CSV")->required();
  pool->add_option("--central-episodes", pl_central_ep, "central episodes CSV");
  pool->add_option("--state-episodes", pl_state_ep, "state episodes CSV");
  pool->add_option("--alpha", pl_alpha, "significance level");
  pool->add_option("--variable", pl_variable, "poolability variable");
  pool->add_flag("--force", pl_force, "pool even when the tests reject");
  pool->add_option("--out", pl_out, "pooled households CSV")->required();
  pool->add_option("--out-episodes", pl_out_ep, "pooled episodes CSV");

  // ---- estimate ----
  auto* estimate = app.add_subcommand("estimate", "CHE, coverage and component tables");
  std::string es_data, es_episodes, es_out = ".", es_by = "district,quintile";
  std::string es_thresholds = "0.1,0.2,0.4", es_districts_path;
  bool es_choropleth = false;
  estimate->add_option("--data", es_data, "households CSV (pooled or single sample)")
      ->required();
  estimate->add_option("--episodes", es_episodes, "episodes CSV");
  estimate->add_option("--thresholds", es_thresholds, "comma-separated CHE thresholds");
  estimate->add_option("--by", es_by, "tables to emit: district,quintile");
  estimate->add_option("--districts", es_districts_path, "district code->name CSV");
  estimate->add_flag("--choropleth", es_choropleth, "emit district_code,value CSVs");
  estimate->add_option("--out", es_out, "output directory")->required();

  // ---- gini ----
  auto* gini = app.add_subcommand("gini", "weighted Gini decomposition by subgroups");
  std::string gn_data, gn_episodes, gn_out, gn_value = "oop_private_inpatient";
  std::string gn_groups = "sex,sector,social,religion", gn_mode = "signed", gn_unit = "episode";
  std::string gn_districts_path;
  std::string gn_ref_sex = "Male", gn_ref_sector = "Urban", gn_ref_social = "Others",
              gn_ref_religion = "Others";
  bool gn_chronic = false;
  gini->add_option("--data", gn_data, "households CSV")->required();
  gini->add_option("--episodes", gn_episodes, "episodes CSV");
  gini->add_option("--value", gn_value,
                   "oop_private_inpatient | oop_all_episodes | oop_household");
  gini->add_option("--group", gn_groups, "comma-separated groupings");
  gini->add_option("--mode", gn_mode, "signed | strict");
  gini->add_option("--unit", gn_unit, "episode | household");
  gini->add_option("--ref-sex", gn_ref_sex, "sign reference for sex");
  gini->add_option("--ref-sector", gn_ref_sector, "sign reference for sector");
  gini->add_option("--ref-social", gn_ref_social, "sign reference for social group");
  gini->add_option("--ref-religion", gn_ref_religion, "sign reference for religion");
  gini->add_flag("--chronic-only", gn_chronic, "restrict to chronic-disease episodes");
  gini->add_option("--districts", gn_districts_path, "district code->name CSV");
  gini->add_option("--out", gn_out, "output CSV (default stdout)");

  // ---- stats ----
  auto* stats_cmd = app.add_subcommand("stats", "spearman / welch t on CSV columns");
  std::string st_kind, st_in;
  stats_cmd->add_option("kind", st_kind, "spearman | ttest")->required();
  stats_cmd->add_option("--in", st_in, "two single-column CSVs: a.csv,b.csv")->required();

  // ---- run ----
  auto* run = app.add_subcommand("run", "full pipeline");
  std::string rn_config, rn_out;
  std::string rn_central, rn_central_ep, rn_state, rn_state_ep, rn_mode, rn_value,
      rn_thresholds, rn_districts_path;
  bool rn_force = false;
  run->add_option("--config", rn_config, "run config JSON");
  run->add_option("--central", rn_central, "central households CSV");
  run->add_option("--central-episodes", rn_central_ep, "central episodes CSV");
  run->add_option("--state", rn_state, "state households CSV");
  run->add_option("--state-episodes", rn_state_ep, "state episodes CSV");
  run->add_option("--thresholds", rn_thresholds, "comma-separated CHE thresholds");
  run->add_option("--mode", rn_mode, "signed | strict");
  run->add_option("--value", rn_value, "gini value selector");
  run->add_option("--districts", rn_districts_path, "district code->name CSV");
  run->add_flag("--force", rn_force, "pool even when the tests reject");
  run->add_option("--out", rn_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  auto parse_thresholds = [](const std::string& text) {
    std::vector<double> out;
    for (const auto& part : cheq::split(text, ',')) {
      bool ok = false;
      double v = cheq::parse_double(part, &ok);
      if (!ok || !(v > 0.0 && v < 1.0))
        cheq::fail(cheq::Errc::InvalidConfig, "bad threshold '" + part + "'");
      out.push_back(v);
    }
    return out;
  };

  if (synth->parsed()) {
    cheq::SynthConfig cfg;
    if (!synth_config.empty()) cfg = cheq::load_synth_config(synth_config);
    if (synth_seed) cfg.seed = *synth_seed;
    if (synth_n) cfg.households_per_district = *synth_n;
    if (synth_districts) cfg.n_districts = *synth_districts;
    auto output = cheq::generate(cfg);
    fs::create_directories(synth_out);
    cheq::save_households(output.central, (fs::path(synth_out) / "households_central.csv").string());
    cheq::save_episodes(output.central, (fs::path(synth_out) / "episodes_central.csv").string());
    cheq::save_households(output.state, (fs::path(synth_out) / "households_state.csv").string());
    cheq::save_episodes(output.state, (fs::path(synth_out) / "episodes_state.csv").string());
    std::ofstream truth((fs::path(synth_out) / "truth.json").string(), std::ios::binary);
    truth << cheq::ground_truth_json(output.truth);
    std::ofstream cfg_out((fs::path(synth_out) / "synth_config.json").string(), std::ios::binary);
    cfg_out << cheq::synth_config_json(cfg);
    if (emit_population) {
      auto pop = cheq::generate_population(cfg);
      cheq::save_households(pop, (fs::path(synth_out) / "households_population.csv").string());
      cheq::save_episodes(pop, (fs::path(synth_out) / "episodes_population.csv").string());
    }
    std::cout << "synth: wrote " << output.central.households.size() << " central and "
              << output.state.households.size() << " state households to " << synth_out << "\n";
    return 0;
  }

  if (poolability->parsed()) {
    auto districts = cheq::DistrictMap::defaults();
    auto central = load_sample(pb_central, "", cheq::Agency::Central, districts);
    auto state = load_sample(pb_state, "", cheq::Agency::State, districts);
    auto report = cheq::poolability(central, state, pb_alpha,
                                    cheq::pool_variable_from(pb_variable));
    print_warnings(report.warnings);
    json j;
    j["variable"] = std::string(to_string(report.variable));
    j["alpha"] = report.alpha;
    j["runs_z"] = report.runs_z;
    j["runs_p"] = report.runs_p;
    j["chi2_stat"] = report.chi2_stat;
    j["chi2_df"] = report.chi2_df;
    j["chi2_p"] = report.chi2_p;
    j["z_means"] = report.z_means;
    j["z_means_p"] = report.z_means_p;
    j["poolable"] = report.poolable;
    const std::string text = j.dump(2) + "\n";
    if (pb_out.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(pb_out, std::ios::binary);
      out << text;
      std::cout << "poolability: " << (report.poolable ? "poolable" : "NOT poolable")
                << ", report at " << pb_out << "\n";
    }
    return report.poolable ? 0 : 3;
  }

  if (pool->parsed()) {
    auto districts = cheq::DistrictMap::defaults();
    auto central = load_sample(pl_central, pl_central_ep, cheq::Agency::Central, districts);
    auto state = load_sample(pl_state, pl_state_ep, cheq::Agency::State, districts);
    auto report = cheq::poolability(central, state, pl_alpha,
                                    cheq::pool_variable_from(pl_variable));
    auto pooled = cheq::pool_datasets(central, state, report, pl_force);
    print_warnings(pooled.warnings);
    cheq::save_households(pooled.dataset, pl_out);
    if (!pl_out_ep.empty()) cheq::save_episodes(pooled.dataset, pl_out_ep);
    std::cout << "pool: wrote " << pooled.dataset.households.size() << " households to "
              << pl_out << "\n";
    return 0;
  }

  if (estimate->parsed()) {
    auto districts = districts_for(es_districts_path);
    auto data = load_sample(es_data, es_episodes, std::nullopt, districts);
    auto thresholds = parse_thresholds(es_thresholds);
    fs::create_directories(es_out);
    json combined;

    auto write_table = [&](const std::string& name, const cheq::CheTable& table) {
      std::ofstream f((fs::path(es_out) / name).string(), std::ios::binary);
      std::vector<std::string> header{"domain"};
      for (double t : table.thresholds) {
        const auto tag = cheq::fmt_fixed(100.0 * t, 1);
        header.insert(header.end(), {"incidence_" + tag, "se_" + tag, "n_" + tag});
      }
      cheq::csv::write_row(f, header);
      for (const auto& row : table.rows) {
        std::vector<std::string> cells{row.label};
        for (const auto& est : row.by_threshold) {
          cells.push_back(cheq::fmt_fixed(100.0 * est.incidence, 1));
          cells.push_back(est.se ? cheq::fmt_fixed(100.0 * *est.se, 1) : "NA");
          cells.push_back(std::to_string(est.n_used));
        }
        cheq::csv::write_row(f, cells);
      }
    };

    const auto views = cheq::split(es_by, ',');
    auto wants = [&](std::string_view v) {
      return std::find(views.begin(), views.end(), std::string(v)) != views.end();
    };
    write_table("che_overall.csv", cheq::che_table_overall(data, thresholds));
    cheq::CheTable district_table;
    if (wants("district")) {
      district_table = cheq::che_table_by_district(data, districts, thresholds);
      write_table("che_by_district.csv", district_table);
    }
    if (wants("quintile"))
      write_table("che_by_quintile.csv", cheq::che_table_by_quintile(data, thresholds));
    if (es_choropleth && wants("district")) {
      for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        const auto tag = cheq::fmt_fixed(100.0 * thresholds[ti], 1);
        std::ofstream f((fs::path(es_out) / ("choropleth_che_" + tag + ".csv")).string(),
                        std::ios::binary);
        cheq::csv::write_row(f, {"district_code", "value"});
        for (const auto& row : district_table.rows)
          if (row.district_code != 0)
            cheq::csv::write_row(f, {std::to_string(row.district_code),
                                     cheq::fmt_fixed(100.0 * row.by_threshold[ti].incidence, 1)});
      }
    }
    combined["thresholds"] = thresholds;
    combined["rows"] = data.households.size();
    std::ofstream cj((fs::path(es_out) / "estimate.json").string(), std::ios::binary);
    cj << combined.dump(2) << "\n";
    std::cout << "estimate: tables written to " << es_out << "\n";
    return 0;
  }

  if (gini->parsed()) {
    auto districts = districts_for(gn_districts_path);
    auto data = load_sample(gn_data, gn_episodes, std::nullopt, districts);
    cheq::GiniAnalysisConfig cfg;
    cfg.value = cheq::value_selector_from(gn_value);
    cfg.mode = cheq::decomp_mode_from(gn_mode);
    cfg.unit = cheq::lower(gn_unit) == "household" ? cheq::AnalysisUnit::Household
                                                   : cheq::AnalysisUnit::Episode;
    cfg.chronic_only = gn_chronic;
    for (const auto& g : cheq::split(gn_groups, ',')) {
      auto field = cheq::group_field_from(g);
      switch (field) {
        case cheq::GroupField::PatientSex:
          cfg.groupings.push_back(cheq::make_grouping(field, gn_ref_sex));
          break;
        case cheq::GroupField::Sector:
          cfg.groupings.push_back(cheq::make_grouping(field, gn_ref_sector));
          break;
        case cheq::GroupField::SocialGroup:
          cfg.groupings.push_back(cheq::make_grouping(field, gn_ref_social));
          break;
        case cheq::GroupField::Religion:
          cfg.groupings.push_back(cheq::make_grouping(field, gn_ref_religion));
          break;
      }
    }
    auto table = cheq::district_decomposition_table(data, districts, cfg);

    std::ostringstream buf;
    std::vector<std::string> header{"domain", "n", "total_gini"};
    for (const auto& g : table.grouping_names)
      for (const char* suffix : {"_between", "_between_share", "_sig", "_within",
                                 "_within_share"})
        header.push_back(g + suffix);
    cheq::csv::write_row(buf, header);
    for (const auto& row : table.rows) {
      std::vector<std::string> cells{row.label, std::to_string(row.n_obs),
                                     cheq::fmt_fixed(row.total_gini, 4)};
      for (const auto& cell : row.cells) {
        cells.push_back(cheq::fmt_fixed(cell.decomp.between, 4));
        cells.push_back(cheq::fmt_fixed(cell.decomp.between_share, 1));
        cells.push_back(cell.degenerate ? "na" : (cell.significant ? "***" : ""));
        cells.push_back(cheq::fmt_fixed(cell.decomp.within, 4));
        cells.push_back(cheq::fmt_fixed(cell.decomp.within_share, 1));
      }
      cheq::csv::write_row(buf, cells);
    }
    if (gn_out.empty()) {
      std::cout << buf.str();
    } else {
      std::ofstream f(gn_out, std::ios::binary);
      f << buf.str();
      std::cout << "gini: table written to " << gn_out << "\n";
    }
    return 0;
  }

  if (stats_cmd->parsed()) {
    auto files = cheq::split(st_in, ',');
    if (files.size() != 2)
      cheq::fail(cheq::Errc::InvalidConfig, "stats: --in needs exactly two files");
    auto a = read_numeric_column(files[0]);
    auto b = read_numeric_column(files[1]);
    json j;
    if (st_kind == "spearman") {
      auto r = cheq::stats::spearman(a, b);
      j["rho"] = r.rho;
      j["n"] = r.n;
      j["t_stat"] = r.t_stat;
      j["p_two_sided"] = r.p_two_sided;
    } else if (st_kind == "ttest") {
      auto r = cheq::stats::welch_t(a, b);
      j["t"] = r.t;
      j["df"] = r.df;
      j["p_two_sided"] = r.p;
    } else {
      cheq::fail(cheq::Errc::InvalidConfig, "stats: kind must be spearman or ttest");
    }
    std::cout << j.dump(2) << "\n";
    return 0;
  }

  if (run->parsed()) {
    cheq::RunConfig cfg;
    if (!rn_config.empty()) cfg = cheq::load_run_config(rn_config);
    if (!rn_central.empty()) cfg.central_households = rn_central;
    if (!rn_central_ep.empty()) cfg.central_episodes = rn_central_ep;
    if (!rn_state.empty()) cfg.state_households = rn_state;
    if (!rn_state_ep.empty()) cfg.state_episodes = rn_state_ep;
    if (!rn_thresholds.empty()) cfg.thresholds = parse_thresholds(rn_thresholds);
    if (!rn_mode.empty()) cfg.mode = cheq::decomp_mode_from(rn_mode);
    if (!rn_value.empty()) cfg.value = cheq::value_selector_from(rn_value);
    if (!rn_districts_path.empty()) cfg.districts_path = rn_districts_path;
    if (!rn_out.empty()) cfg.out_dir = rn_out;
    if (rn_force) cfg.force_pool = true;
    auto result = cheq::run_pipeline(cfg);
    print_warnings(result.warnings);
    std::cout << "run: " << result.entries.size() << " artifact groups, manifest at "
              << result.manifest_path << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const cheq::CheqError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cheq::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
