#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cheq/inequality.hpp"
#include "cheq/pooling.hpp"
#include "cheq/types.hpp"

namespace cheq {

struct RunConfig {
  std::string central_households;
  std::string central_episodes;
  std::string state_households;
  std::string state_episodes;
  std::string out_dir;
  std::string districts_path;  // empty -> built-in 19-district map

  std::vector<double> thresholds{0.1, 0.2, 0.4};
  double alpha = 0.05;
  PoolVariable pool_variable = PoolVariable::Aexp;
  bool force_pool = false;

  ValueSelector value = ValueSelector::PrivateInpatientOop;
  AnalysisUnit unit = AnalysisUnit::Episode;
  DecompMode mode = DecompMode::SignedTwoGroup;
  std::string ref_sex = "Male";
  std::string ref_sector = "Urban";
  std::string ref_social = "Others";
  std::string ref_religion = "Others";
  bool chronic_variant = true;  // also emit the chronic-only Gini table

  void validate() const;  // throws InvalidConfig
  std::vector<GroupingSpec> groupings() const;
  DistrictMap districts() const;
};

RunConfig load_run_config(const std::string& path);

struct ManifestEntry {
  std::string name;
  std::vector<std::string> files;  // paths relative to out_dir
};

struct PipelineResult {
  std::string manifest_path;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
};

/// Full pipeline: load + validate -> poolability -> pool -> estimate ->
/// gini -> stats, emitting CSV tables, choropleth exports and a manifest
/// keyed by an input-content hash. Any stage error removes partial outputs
/// and rethrows with the stage name.
PipelineResult run_pipeline(const RunConfig& cfg);

/// Exit code for an error per the CLI contract: 2 validation, 3 not
/// poolable, 4 internal.
int exit_code_for(const CheqError& e);

}  // namespace cheq
