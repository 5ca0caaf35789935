#include "cheq/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cheq/stats.hpp"
#include "cheq/util.hpp"

namespace cheq {

namespace {

constexpr double kZ99 = 2.576;

}  // namespace

int che_flag(const HouseholdRecord& h, double threshold) {
  if (!(h.aexp > 0.0))
    fail(Errc::ZeroDenominator, "che_flag: household " + h.hh_id + " has aexp = 0");
  return h.oop_total / h.aexp >= threshold ? 1 : 0;
}

double weighted_proportion(std::span<const double> weights, std::span<const int> flags) {
  if (weights.size() != flags.size())
    fail(Errc::BadValue, "weighted_proportion: length mismatch");
  double sw = 0.0, swf = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    sw += weights[i];
    if (flags[i]) swf += weights[i];
  }
  if (!(sw > 0.0)) fail(Errc::EmptyDomain, "weighted_proportion: no positive weight");
  return swf / sw;
}

QuintileCuts quintile_cuts(std::span<const HouseholdRecord> households, QuintileBasis basis,
                           std::vector<std::string>* warnings) {
  if (households.size() < 5)
    fail(Errc::TooFewObservations, "quintile_cuts: need at least 5 households");

  struct Point {
    double pcexp;
    double w;
  };
  std::vector<Point> pts;
  pts.reserve(households.size());
  double total_w = 0.0;
  for (const auto& h : households) {
    const double w =
        basis == QuintileBasis::PersonWeighted ? h.person_weight() : h.multiplier;
    pts.push_back({h.pcexp(), w});
    total_w += w;
  }
  if (!(total_w > 0.0)) fail(Errc::EmptyDomain, "quintile_cuts: no positive weight");
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.pcexp < b.pcexp; });

  QuintileCuts qc;
  qc.basis = basis;
  // lower weighted quantile: smallest value whose cumulative share reaches q
  std::size_t i = 0;
  double cum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double target = 0.2 * static_cast<double>(k + 1) * total_w;
    while (i < pts.size() && cum + pts[i].w < target) cum += pts[i].w, ++i;
    qc.cuts[k] = pts[std::min(i, pts.size() - 1)].pcexp;
  }
  if (qc.cuts[0] == qc.cuts[3] && warnings)
    warnings->push_back("quintile_cuts: degenerate per-capita expenditure distribution; "
                        "all households fall in class 1");
  return qc;
}

int assign_quintile(const HouseholdRecord& h, const QuintileCuts& cuts) {
  const double v = h.pcexp();
  for (int k = 0; k < 4; ++k)
    if (v <= cuts.cuts[static_cast<std::size_t>(k)]) return k + 1;
  return 5;
}

namespace {

// Weighted proportion over a household domain; flags from `pred`, weights
// from `wfn`. Households rejected by `use` are excluded (tracked by caller).
template <typename WeightFn, typename PredFn>
double domain_proportion(const HouseholdRefs& domain, WeightFn wfn, PredFn pred) {
  double sw = 0.0, swf = 0.0;
  for (const auto* h : domain) {
    const double w = wfn(*h);
    sw += w;
    if (pred(*h)) swf += w;
  }
  if (!(sw > 0.0)) fail(Errc::EmptyDomain, "estimation: empty domain");
  return swf / sw;
}

}  // namespace

SubsampleEstimate subsample_se(const HouseholdRefs& domain,
                               const std::function<double(const HouseholdRefs&)>& statistic) {
  SubsampleEstimate out;
  out.estimate = statistic(domain);
  HouseholdRefs s1, s2;
  for (const auto* h : domain)
    (h->subsample == Subsample::S1 ? s1 : s2).push_back(h);
  if (s1.empty() || s2.empty()) return out;  // se stays missing
  const double y1 = statistic(s1);
  const double y2 = statistic(s2);
  out.se = std::fabs(y1 - y2) / 2.0;
  out.ci99 = std::make_pair(out.estimate - kZ99 * *out.se, out.estimate + kZ99 * *out.se);
  return out;
}

CheEstimate che_incidence(const HouseholdRefs& domain, double threshold,
                          const std::string& label) {
  CheEstimate est;
  est.threshold = threshold;
  est.domain = label;

  HouseholdRefs usable;
  usable.reserve(domain.size());
  for (const auto* h : domain) {
    if (h->aexp > 0.0)
      usable.push_back(h);
    else
      ++est.n_excluded;
  }
  est.n_used = static_cast<long>(usable.size());
  if (usable.empty()) fail(Errc::EmptyDomain, "che_incidence: no household with aexp > 0 in " + label);

  auto stat = [threshold](const HouseholdRefs& hs) {
    return domain_proportion(
        hs, [](const HouseholdRecord& h) { return h.multiplier; },
        [threshold](const HouseholdRecord& h) { return che_flag(h, threshold) == 1; });
  };
  auto sub = subsample_se(usable, stat);
  est.incidence = sub.estimate;
  est.se = sub.se;
  est.ci99 = sub.ci99;
  return est;
}

std::array<CheEstimate, 5> che_by_quintile(std::span<const HouseholdRecord> households,
                                           double threshold, const QuintileCuts& cuts) {
  std::array<HouseholdRefs, 5> classes;
  for (const auto& h : households)
    classes[static_cast<std::size_t>(assign_quintile(h, cuts) - 1)].push_back(&h);
  std::array<CheEstimate, 5> out;
  for (std::size_t k = 0; k < 5; ++k) {
    if (classes[k].empty()) {
      out[k].threshold = threshold;
      out[k].domain = "quintile " + std::to_string(k + 1);
      out[k].n_used = 0;
      continue;
    }
    out[k] = che_incidence(classes[k], threshold, "quintile " + std::to_string(k + 1));
  }
  return out;
}

CheEstimate coverage_rate(const HouseholdRefs& domain, const std::string& label) {
  CheEstimate est;
  est.domain = label;
  est.n_used = static_cast<long>(domain.size());
  if (domain.empty()) fail(Errc::EmptyDomain, "coverage_rate: empty domain " + label);
  auto stat = [](const HouseholdRefs& hs) {
    return domain_proportion(
        hs, [](const HouseholdRecord& h) { return h.person_weight(); },
        [](const HouseholdRecord& h) { return h.coverage; });
  };
  auto sub = subsample_se(domain, stat);
  est.incidence = sub.estimate;
  est.se = sub.se;
  est.ci99 = sub.ci99;
  return est;
}

std::map<std::string, double> component_shares(const EpisodeRefs& episodes, CareType type) {
  const auto& names = component_names(type);
  std::vector<double> sums(names.size(), 0.0);
  double total = 0.0;
  long n = 0;
  for (const auto* e : episodes) {
    if (e->care_type != type) continue;
    ++n;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double wc = e->multiplier * e->costs[i];
      sums[i] += wc;
      total += wc;
    }
  }
  if (n == 0) fail(Errc::EmptyDomain, "component_shares: no episodes of the requested care type");
  if (!(total > 0.0)) fail(Errc::AllZeroCost, "component_shares: all episode costs are zero");
  std::map<std::string, double> shares;
  for (std::size_t i = 0; i < names.size(); ++i) shares[names[i]] = sums[i] / total;
  return shares;
}

double delivery_public_share(const EpisodeRefs& episodes) {
  double sw = 0.0, swp = 0.0;
  for (const auto* e : episodes) {
    if (!e->is_delivery) continue;
    sw += e->multiplier;
    if (e->facility == Facility::Public) swp += e->multiplier;
  }
  if (!(sw > 0.0)) fail(Errc::EmptyDomain, "delivery_public_share: no delivery episodes");
  return swp / sw;
}

// ---- tables ----

namespace {

HouseholdRefs all_households(const SurveyDataset& ds) {
  HouseholdRefs refs;
  refs.reserve(ds.households.size());
  for (const auto& h : ds.households) refs.push_back(&h);
  return refs;
}

HouseholdRefs district_households(const SurveyDataset& ds, int code) {
  HouseholdRefs refs;
  for (const auto& h : ds.households)
    if (h.district_code == code) refs.push_back(&h);
  return refs;
}

}  // namespace

CheTable che_table_overall(const SurveyDataset& ds, const std::vector<double>& thresholds) {
  CheTable table;
  table.thresholds = thresholds;
  auto refs = all_households(ds);
  HouseholdRefs rural, urban;
  for (const auto* h : refs)
    (h->sector == Sector::Rural ? rural : urban).push_back(h);

  auto make_row = [&](const std::string& label, const HouseholdRefs& domain) {
    CheRow row;
    row.label = label;
    for (double t : thresholds) row.by_threshold.push_back(che_incidence(domain, t, label));
    table.rows.push_back(std::move(row));
  };
  make_row("All", refs);
  if (!rural.empty()) make_row("Rural", rural);
  if (!urban.empty()) make_row("Urban", urban);
  return table;
}

CheTable che_table_by_district(const SurveyDataset& ds, const DistrictMap& districts,
                               const std::vector<double>& thresholds, bool parallel) {
  CheTable table;
  table.thresholds = thresholds;
  const auto& entries = districts.entries();
  std::vector<CheRow> rows(entries.size());
  std::vector<char> present(entries.size(), 0);

  std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
  for (std::size_t d = 0; d < entries.size(); ++d) {
    try {
      auto refs = district_households(ds, entries[d].first);
      if (refs.empty()) continue;
      present[d] = 1;
      CheRow row;
      row.label = entries[d].second;
      row.district_code = entries[d].first;
      for (double t : thresholds)
        row.by_threshold.push_back(che_incidence(refs, t, entries[d].second));
      rows[d] = std::move(row);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  for (std::size_t d = 0; d < entries.size(); ++d)
    if (present[d]) table.rows.push_back(std::move(rows[d]));

  CheRow state;
  state.label = "West Bengal";
  auto refs = all_households(ds);
  for (double t : thresholds) state.by_threshold.push_back(che_incidence(refs, t, "West Bengal"));
  table.rows.push_back(std::move(state));
  return table;
}

CheTable che_table_by_quintile(const SurveyDataset& ds, const std::vector<double>& thresholds) {
  CheTable table;
  table.thresholds = thresholds;
  auto cuts = quintile_cuts(ds.households);
  std::vector<std::array<CheEstimate, 5>> per_threshold;
  per_threshold.reserve(thresholds.size());
  for (double t : thresholds) per_threshold.push_back(che_by_quintile(ds.households, t, cuts));
  static const char* kLabels[5] = {"1 (Poorest)", "2", "3", "4", "5 (Richest)"};
  for (std::size_t k = 0; k < 5; ++k) {
    CheRow row;
    row.label = kLabels[k];
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti)
      row.by_threshold.push_back(per_threshold[ti][k]);
    table.rows.push_back(std::move(row));
  }
  return table;
}

CoverageTable coverage_table(const SurveyDataset& ds, const DistrictMap& districts) {
  CoverageTable table;
  auto refs = all_households(ds);
  table.state.label = "West Bengal";
  table.state.estimate = coverage_rate(refs, "West Bengal");

  EpisodeRefs all_eps;
  all_eps.reserve(ds.episodes.size());
  auto hh_idx = household_index(ds);
  for (const auto& e : ds.episodes) all_eps.push_back(&e);

  const double state_value = table.state.estimate.incidence;
  for (const auto& [code, name] : districts.entries()) {
    auto dom = district_households(ds, code);
    if (dom.empty()) continue;
    CoverageRow row;
    row.label = name;
    row.district_code = code;
    row.estimate = coverage_rate(dom, name);
    if (row.estimate.ci99) {
      if (row.estimate.ci99->first > state_value) row.flag = "high";
      else if (row.estimate.ci99->second < state_value) row.flag = "low";
    }
    table.rows.push_back(std::move(row));

    EpisodeRefs dist_eps;
    for (const auto& e : ds.episodes) {
      auto it = hh_idx.find(e.hh_id);
      if (it != hh_idx.end() && ds.households[it->second].district_code == code)
        dist_eps.push_back(&e);
    }
    try {
      table.delivery_public.emplace_back(name, delivery_public_share(dist_eps));
    } catch (const CheqError&) {
      // no delivery episodes in this district
    }
  }
  try {
    table.delivery_public_state = delivery_public_share(all_eps);
  } catch (const CheqError&) {
  }
  return table;
}

ComponentTable component_table(const SurveyDataset& ds, const DistrictMap& districts,
                               CareType type) {
  ComponentTable table;
  table.type = type;
  table.components = component_names(type);
  auto hh_idx = household_index(ds);

  auto shares_row = [&](const EpisodeRefs& eps) {
    auto shares = component_shares(eps, type);
    std::vector<double> row;
    row.reserve(table.components.size());
    for (const auto& c : table.components) row.push_back(100.0 * shares.at(c));
    return row;
  };

  EpisodeRefs all_eps;
  for (const auto& e : ds.episodes)
    if (e.care_type == type) all_eps.push_back(&e);

  for (const auto& [code, name] : districts.entries()) {
    EpisodeRefs eps;
    for (const auto* e : all_eps) {
      auto it = hh_idx.find(e->hh_id);
      if (it != hh_idx.end() && ds.households[it->second].district_code == code)
        eps.push_back(e);
    }
    if (eps.empty()) continue;
    table.rows.emplace_back(name, shares_row(eps));
  }
  if (!all_eps.empty()) table.rows.emplace_back("West Bengal", shares_row(all_eps));
  return table;
}

}  // namespace cheq
