#include "cheq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "cheq/stats.hpp"
#include "cheq/util.hpp"

namespace cheq {

namespace {

using json = nlohmann::ordered_json;

// Local RNG and samplers: the standard distributions are implementation
// defined, so a seed would not map to the same data on every platform.
struct Rng {
  std::uint64_t s;

  explicit Rng(std::uint64_t seed) : s(seed) {}

  std::uint64_t next_u64() {  // splitmix64
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {  // Box-Muller, no spare caching
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double gamma(double shape) {  // Marsaglia-Tsang
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  int poisson(double lambda) {  // Knuth, fine for small lambda
    const double limit = std::exp(-lambda);
    double prod = uniform();
    int k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }

  // Fisher-Yates over indices [0, n)
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_u64() % i);
      std::swap(idx[i - 1], idx[j]);
    }
    return idx;
  }
};

std::uint64_t district_seed(std::uint64_t seed, int district, int stream) {
  Rng r(seed ^ (0x51f0c9e4a3b2d817ull * static_cast<std::uint64_t>(district * 8 + stream + 1)));
  return r.next_u64();
}

struct PopHousehold {
  HouseholdRecord hh;
  std::vector<EpisodeRecord> episodes;
};

double group_cost_multiplier(const SynthConfig& cfg, Sex sex, Sector sector, SocialGroup social,
                             Religion religion) {
  double m = 1.0;
  if (sex == Sex::Female) m *= cfg.effect_female;
  if (sector == Sector::Rural) m *= cfg.effect_rural;
  if (social == SocialGroup::SC || social == SocialGroup::ST) m *= cfg.effect_scst;
  if (religion == Religion::Muslim) m *= cfg.effect_muslim;
  return m;
}

// Splits an amount across the component vocabulary with gamma noise around
// fixed mean shares.
std::vector<double> split_components(Rng& rng, CareType type, double amount) {
  static const std::vector<double> in_shares = {0.38, 0.10, 0.20, 0.10, 0.05, 0.06, 0.06, 0.05};
  static const std::vector<double> out_shares = {0.14, 0.02, 0.62, 0.10, 0.02, 0.07, 0.03};
  const auto& shares = type == CareType::Inpatient ? in_shares : out_shares;
  std::vector<double> draw(shares.size());
  double total = 0.0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    draw[i] = rng.gamma(shares[i] * 8.0);
    total += draw[i];
  }
  for (double& d : draw) d = amount * (total > 0.0 ? d / total : 0.0);
  return draw;
}

std::vector<PopHousehold> generate_district_population(const SynthConfig& cfg, int district,
                                                       std::uint64_t seed) {
  Rng rng(seed);
  const int pop_n = cfg.households_per_district * cfg.population_factor;
  const double cov_p = static_cast<std::size_t>(district - 1) < cfg.coverage_prob.size()
                           ? cfg.coverage_prob[static_cast<std::size_t>(district - 1)]
                           : cfg.default_coverage;

  std::vector<PopHousehold> pop;
  pop.reserve(static_cast<std::size_t>(pop_n));
  for (int i = 0; i < pop_n; ++i) {
    PopHousehold p;
    HouseholdRecord& h = p.hh;
    h.hh_id = "D" + std::to_string(district) + "-P" + std::to_string(i);
    h.district_code = district;
    h.sector = rng.bernoulli(cfg.p_rural) ? Sector::Rural : Sector::Urban;
    h.stratum_id = "D" + std::to_string(district) +
                   (h.sector == Sector::Rural ? "-R" : "-U");
    h.hh_size = 1 + rng.poisson(cfg.mean_hh_size - 1.0);
    h.multiplier = 1.0;
    h.coverage = rng.bernoulli(cov_p);

    const double z = rng.normal();
    h.aexp = std::exp(cfg.aexp_log_mu + cfg.aexp_log_sigma * z);
    // population quantile of aexp is known in closed form
    const int quintile = std::min(4, static_cast<int>(5.0 * stats::normal_cdf(z)));
    const Sex sex = rng.bernoulli(cfg.p_female) ? Sex::Female : Sex::Male;
    const double u_social = rng.uniform();
    SocialGroup social = SocialGroup::Others;
    if (u_social < cfg.p_st) social = SocialGroup::ST;
    else if (u_social < cfg.p_st + cfg.p_sc) social = SocialGroup::SC;
    else if (u_social < cfg.p_st + cfg.p_sc + cfg.p_obc) social = SocialGroup::OBC;
    const Religion religion = rng.bernoulli(cfg.p_muslim) ? Religion::Muslim : Religion::Others;

    double ratio = rng.beta(cfg.oop_beta_a, cfg.oop_beta_b) *
                   cfg.quintile_ratio_shift[static_cast<std::size_t>(quintile)];
    ratio *= group_cost_multiplier(cfg, sex, h.sector, social, religion);
    ratio = std::min(ratio, 0.95);
    const double oop = ratio * h.aexp;

    // amounts quantized to the CSV precision so serialization cannot
    // disturb the component-sum invariant
    auto q6 = [](double v) { return std::round(v * 1e6) / 1e6; };
    h.aexp = q6(h.aexp);
    const bool has_inpatient = oop > 0.0 && rng.bernoulli(cfg.p_inpatient);
    const double in_share = has_inpatient ? 0.2 + 0.6 * rng.uniform() : 0.0;
    h.oop_inpatient = q6(oop * in_share);
    h.oop_outpatient = q6(oop - oop * in_share);
    h.oop_total = h.oop_inpatient + h.oop_outpatient;

    auto add_episode = [&](CareType type, double amount, int ordinal) {
      if (!(amount > 0.0)) return;
      EpisodeRecord e;
      e.episode_id = h.hh_id + "-E" + std::to_string(ordinal);
      e.hh_id = h.hh_id;
      e.care_type = type;
      e.facility = rng.bernoulli(cfg.p_private) ? Facility::Private : Facility::Public;
      e.patient_sex = sex;
      e.social_group = social;
      e.religion = religion;
      e.chronic = rng.bernoulli(cfg.p_chronic);
      e.is_delivery = type == CareType::Inpatient && rng.bernoulli(cfg.p_delivery);
      e.multiplier = 1.0;
      e.costs = split_components(rng, type, amount);
      p.episodes.push_back(std::move(e));
    };
    add_episode(CareType::Inpatient, h.oop_inpatient, 1);
    add_episode(CareType::Outpatient, h.oop_outpatient, 2);
    pop.push_back(std::move(p));
  }
  return pop;
}

void sample_into(const std::vector<PopHousehold>& pop, std::size_t n_sample, Agency agency,
                 std::uint64_t seed, SurveyDataset& out) {
  Rng rng(seed);
  auto perm = rng.permutation(pop.size());
  const double multiplier =
      static_cast<double>(pop.size()) / static_cast<double>(n_sample);
  const char* tag = agency == Agency::Central ? "C" : "S";
  for (std::size_t k = 0; k < n_sample; ++k) {
    const PopHousehold& src = pop[perm[k]];
    HouseholdRecord h = src.hh;
    h.hh_id = tag + src.hh.hh_id;
    h.agency = agency;
    h.subsample = k % 2 == 0 ? Subsample::S1 : Subsample::S2;
    h.multiplier = multiplier;
    out.households.push_back(h);
    for (const auto& e : src.episodes) {
      EpisodeRecord copy = e;
      copy.episode_id = tag + e.episode_id;
      copy.hh_id = h.hh_id;
      copy.multiplier = multiplier;
      out.episodes.push_back(std::move(copy));
    }
  }
}

GroundTruth evaluate_truth(const std::vector<PopHousehold>& pop) {
  GroundTruth t;
  t.population_households = static_cast<long>(pop.size());

  // CHE incidence by exhaustive count
  const double thresholds[] = {0.1, 0.2, 0.4};
  for (double th : thresholds) {
    long flagged = 0, usable = 0;
    for (const auto& p : pop) {
      if (!(p.hh.aexp > 0.0)) continue;
      ++usable;
      if (p.hh.oop_total / p.hh.aexp >= th) ++flagged;
    }
    t.che_incidence[fmt_fixed(th, 1)] =
        usable > 0 ? static_cast<double>(flagged) / static_cast<double>(usable) : 0.0;
  }

  // person-weighted coverage
  double persons = 0.0, covered = 0.0;
  for (const auto& p : pop) {
    persons += p.hh.hh_size;
    if (p.hh.coverage) covered += p.hh.hh_size;
  }
  t.coverage_person_share = covered / persons;

  // Gini via the Lorenz-curve trapezoid identity, independent of the
  // inequality module's forms
  auto lorenz_gini = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double total = 0.0;
    for (double x : v) total += x;
    if (!(total > 0.0)) return 0.0;
    const double n = static_cast<double>(v.size());
    double cum = 0.0, area = 0.0;
    for (double x : v) {
      const double prev = cum;
      cum += x / total;
      area += (prev + cum) / n;
    }
    return 1.0 - area;
  };
  std::vector<double> oop;
  oop.reserve(pop.size());
  for (const auto& p : pop) oop.push_back(p.hh.oop_total);
  t.gini_household_oop = lorenz_gini(std::move(oop));

  std::vector<double> priv_in;
  for (const auto& p : pop)
    for (const auto& e : p.episodes)
      if (e.care_type == CareType::Inpatient && e.facility == Facility::Private)
        priv_in.push_back(e.total_cost());
  if (!priv_in.empty()) t.gini_private_inpatient = lorenz_gini(std::move(priv_in));

  // mean episode cost per category of the default groupings
  struct Acc {
    double sum = 0.0;
    long n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& p : pop)
    for (const auto& e : p.episodes) {
      const double c = e.total_cost();
      acc[std::string("sex:") + std::string(to_string(e.patient_sex))].sum += c;
      acc[std::string("sex:") + std::string(to_string(e.patient_sex))].n += 1;
      acc[std::string("sector:") + std::string(to_string(p.hh.sector))].sum += c;
      acc[std::string("sector:") + std::string(to_string(p.hh.sector))].n += 1;
      const bool scst = e.social_group == SocialGroup::SC || e.social_group == SocialGroup::ST;
      acc[scst ? "social:SC&ST" : "social:Others"].sum += c;
      acc[scst ? "social:SC&ST" : "social:Others"].n += 1;
      acc[std::string("religion:") + std::string(to_string(e.religion))].sum += c;
      acc[std::string("religion:") + std::string(to_string(e.religion))].n += 1;
    }
  for (const auto& [k, a] : acc)
    t.group_mean_cost[k] = a.n > 0 ? a.sum / static_cast<double>(a.n) : 0.0;
  return t;
}

}  // namespace

void SynthConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (n_districts < 1 || n_districts > 19)
    fail(Errc::InvalidConfig, "synth: n_districts must be in 1..19");
  if (households_per_district < 2)
    fail(Errc::InvalidConfig, "synth: households_per_district must be >= 2");
  if (population_factor < 1) fail(Errc::InvalidConfig, "synth: population_factor must be >= 1");
  if (!(agency_split > 0.0 && agency_split < 1.0))
    fail(Errc::InvalidConfig, "synth: agency_split must be in (0,1)");
  if (!(aexp_log_sigma > 0.0)) fail(Errc::InvalidConfig, "synth: aexp_log_sigma must be > 0");
  if (!(oop_beta_a > 0.0 && oop_beta_b > 0.0))
    fail(Errc::InvalidConfig, "synth: beta parameters must be > 0");
  for (double s : quintile_ratio_shift)
    if (!(s > 0.0)) fail(Errc::InvalidConfig, "synth: quintile shifts must be > 0");
  for (double p : {p_rural, p_female, p_st, p_sc, p_obc, p_muslim, p_inpatient, p_private,
                   p_chronic, p_delivery, default_coverage})
    if (!prob(p)) fail(Errc::InvalidConfig, "synth: probabilities must be in [0,1]");
  for (double p : coverage_prob)
    if (!prob(p)) fail(Errc::InvalidConfig, "synth: coverage probabilities must be in [0,1]");
  if (p_st + p_sc + p_obc > 1.0)
    fail(Errc::InvalidConfig, "synth: social group probabilities exceed 1");
  if (!(mean_hh_size >= 1.0)) fail(Errc::InvalidConfig, "synth: mean_hh_size must be >= 1");
  for (double e : {effect_female, effect_rural, effect_scst, effect_muslim})
    if (!(e > 0.0)) fail(Errc::InvalidConfig, "synth: group effects must be > 0");
}

SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthOutput out;
  out.central.label = "central";
  out.state.label = "state";

  const int nd = cfg.n_districts;
  std::vector<std::vector<PopHousehold>> pops(static_cast<std::size_t>(nd));
  std::vector<SurveyDataset> central_parts(static_cast<std::size_t>(nd));
  std::vector<SurveyDataset> state_parts(static_cast<std::size_t>(nd));

  const auto n_central = static_cast<std::size_t>(
      std::lround(cfg.agency_split * cfg.households_per_district));
  const auto n_state = static_cast<std::size_t>(cfg.households_per_district) - n_central;
  if (n_central == 0 || n_state == 0)
    fail(Errc::InvalidConfig, "synth: agency split leaves one sample empty");

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int d = 1; d <= nd; ++d) {
    const auto di = static_cast<std::size_t>(d - 1);
    pops[di] = generate_district_population(cfg, d, district_seed(cfg.seed, d, 0));
    sample_into(pops[di], n_central, Agency::Central, district_seed(cfg.seed, d, 1),
                central_parts[di]);
    sample_into(pops[di], n_state, Agency::State, district_seed(cfg.seed, d, 2),
                state_parts[di]);
  }

  std::vector<PopHousehold> all_pop;
  for (int d = 0; d < nd; ++d) {
    const auto di = static_cast<std::size_t>(d);
    auto& c = central_parts[di];
    auto& s = state_parts[di];
    out.central.households.insert(out.central.households.end(), c.households.begin(),
                                  c.households.end());
    out.central.episodes.insert(out.central.episodes.end(), c.episodes.begin(),
                                c.episodes.end());
    out.state.households.insert(out.state.households.end(), s.households.begin(),
                                s.households.end());
    out.state.episodes.insert(out.state.episodes.end(), s.episodes.begin(), s.episodes.end());
    all_pop.insert(all_pop.end(), std::make_move_iterator(pops[di].begin()),
                   std::make_move_iterator(pops[di].end()));
  }
  out.truth = evaluate_truth(all_pop);
  return out;
}

SurveyDataset generate_population(const SynthConfig& cfg) {
  cfg.validate();
  SurveyDataset ds;
  ds.label = "population";
  for (int d = 1; d <= cfg.n_districts; ++d) {
    auto pop = generate_district_population(cfg, d, district_seed(cfg.seed, d, 0));
    for (auto& p : pop) {
      ds.households.push_back(std::move(p.hh));
      for (auto& e : p.episodes) ds.episodes.push_back(std::move(e));
    }
  }
  return ds;
}

namespace {

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SynthConfig load_synth_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    fail(Errc::InvalidConfig, std::string("synth config: ") + e.what());
  }
  SynthConfig cfg;
  maybe_get(j, "seed", cfg.seed);
  maybe_get(j, "n_districts", cfg.n_districts);
  maybe_get(j, "households_per_district", cfg.households_per_district);
  maybe_get(j, "agency_split", cfg.agency_split);
  maybe_get(j, "population_factor", cfg.population_factor);
  maybe_get(j, "aexp_log_mu", cfg.aexp_log_mu);
  maybe_get(j, "aexp_log_sigma", cfg.aexp_log_sigma);
  maybe_get(j, "oop_beta_a", cfg.oop_beta_a);
  maybe_get(j, "oop_beta_b", cfg.oop_beta_b);
  if (j.contains("quintile_ratio_shift")) {
    auto v = j.at("quintile_ratio_shift").get<std::vector<double>>();
    if (v.size() != 5)
      fail(Errc::InvalidConfig, "synth config: quintile_ratio_shift needs 5 entries");
    std::copy(v.begin(), v.end(), cfg.quintile_ratio_shift.begin());
  }
  maybe_get(j, "effect_female", cfg.effect_female);
  maybe_get(j, "effect_rural", cfg.effect_rural);
  maybe_get(j, "effect_scst", cfg.effect_scst);
  maybe_get(j, "effect_muslim", cfg.effect_muslim);
  maybe_get(j, "coverage_prob", cfg.coverage_prob);
  maybe_get(j, "default_coverage", cfg.default_coverage);
  maybe_get(j, "p_rural", cfg.p_rural);
  maybe_get(j, "p_female", cfg.p_female);
  maybe_get(j, "p_st", cfg.p_st);
  maybe_get(j, "p_sc", cfg.p_sc);
  maybe_get(j, "p_obc", cfg.p_obc);
  maybe_get(j, "p_muslim", cfg.p_muslim);
  maybe_get(j, "p_inpatient", cfg.p_inpatient);
  maybe_get(j, "p_private", cfg.p_private);
  maybe_get(j, "p_chronic", cfg.p_chronic);
  maybe_get(j, "p_delivery", cfg.p_delivery);
  maybe_get(j, "mean_hh_size", cfg.mean_hh_size);
  cfg.validate();
  return cfg;
}

std::string synth_config_json(const SynthConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["n_districts"] = cfg.n_districts;
  j["households_per_district"] = cfg.households_per_district;
  j["agency_split"] = cfg.agency_split;
  j["population_factor"] = cfg.population_factor;
  j["aexp_log_mu"] = cfg.aexp_log_mu;
  j["aexp_log_sigma"] = cfg.aexp_log_sigma;
  j["oop_beta_a"] = cfg.oop_beta_a;
  j["oop_beta_b"] = cfg.oop_beta_b;
  j["quintile_ratio_shift"] = cfg.quintile_ratio_shift;
  j["effect_female"] = cfg.effect_female;
  j["effect_rural"] = cfg.effect_rural;
  j["effect_scst"] = cfg.effect_scst;
  j["effect_muslim"] = cfg.effect_muslim;
  j["coverage_prob"] = cfg.coverage_prob;
  j["default_coverage"] = cfg.default_coverage;
  j["p_rural"] = cfg.p_rural;
  j["p_female"] = cfg.p_female;
  j["p_st"] = cfg.p_st;
  j["p_sc"] = cfg.p_sc;
  j["p_obc"] = cfg.p_obc;
  j["p_muslim"] = cfg.p_muslim;
  j["p_inpatient"] = cfg.p_inpatient;
  j["p_private"] = cfg.p_private;
  j["p_chronic"] = cfg.p_chronic;
  j["p_delivery"] = cfg.p_delivery;
  j["mean_hh_size"] = cfg.mean_hh_size;
  return j.dump(2) + "\n";
}

std::string ground_truth_json(const GroundTruth& t) {
  json j;
  j["population_households"] = t.population_households;
  j["che_incidence"] = t.che_incidence;
  j["gini_household_oop"] = t.gini_household_oop;
  j["gini_private_inpatient"] = t.gini_private_inpatient;
  j["coverage_person_share"] = t.coverage_person_share;
  j["group_mean_cost"] = t.group_mean_cost;
  return j.dump(2) + "\n";
}

}  // namespace cheq
