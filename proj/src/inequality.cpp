#include "cheq/inequality.hpp"

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

void check_gini_input(std::span<const double> values, std::span<const double> weights) {
  if (values.size() != weights.size())
    fail(Errc::BadValue, "weighted_gini: value/weight length mismatch");
  if (values.empty()) fail(Errc::EmptyDomain, "weighted_gini: empty input");
  for (double v : values)
    if (v < 0.0) fail(Errc::NegativeValue, "weighted_gini: negative value");
  for (double w : weights)
    if (!(w > 0.0)) fail(Errc::BadValue, "weighted_gini: weights must be positive");
}

double weighted_mean(std::span<const double> values, std::span<const double> weights,
                     double* total_weight) {
  double sw = 0.0, swv = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    swv += weights[i] * values[i];
  }
  *total_weight = sw;
  return swv / sw;
}

}  // namespace

double weighted_gini(std::span<const double> values, std::span<const double> weights) {
  check_gini_input(values, weights);
  double sw = 0.0;
  const double mu = weighted_mean(values, weights, &sw);
  if (!(mu > 0.0)) fail(Errc::ZeroMean, "weighted_gini: weighted mean is zero");

  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

  // G = (2/mu) * sum_i p_i y_i F_i - 1, F_i the midpoint cumulative share
  double cum = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = weights[order[k]] / sw;
    const double f = cum + 0.5 * p;
    acc += p * values[order[k]] * f;
    cum += p;
  }
  double g = 2.0 * acc / mu - 1.0;
  if (g < 0.0 && g > -1e-12) g = 0.0;
  if (g > 1.0 && g < 1.0 + 1e-12) g = 1.0;
  return g;
}

double weighted_gini_pairwise(std::span<const double> values, std::span<const double> weights) {
  check_gini_input(values, weights);
  double sw = 0.0;
  const double mu = weighted_mean(values, weights, &sw);
  if (!(mu > 0.0)) fail(Errc::ZeroMean, "weighted_gini: weighted mean is zero");
  const std::size_t n = values.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      acc += 2.0 * weights[i] * weights[j] * std::fabs(values[i] - values[j]);
  return acc / (sw * sw) / (2.0 * mu);
}

double weighted_gini_pairwise_parallel(std::span<const double> values,
                                       std::span<const double> weights) {
  check_gini_input(values, weights);
  double sw = 0.0;
  const double mu = weighted_mean(values, weights, &sw);
  if (!(mu > 0.0)) fail(Errc::ZeroMean, "weighted_gini: weighted mean is zero");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(values.size());
  double acc = 0.0;
#ifdef _OPENMP
#pragma omp parallel for reduction(+ : acc) schedule(static)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::ptrdiff_t j = i + 1; j < n; ++j)
      row += weights[static_cast<std::size_t>(j)] *
             std::fabs(values[static_cast<std::size_t>(i)] - values[static_cast<std::size_t>(j)]);
    acc += 2.0 * weights[static_cast<std::size_t>(i)] * row;
  }
  return acc / (sw * sw) / (2.0 * mu);
}

DecompMode decomp_mode_from(std::string_view s) {
  auto l = lower(s);
  if (l == "signed" || l == "signed_two_group") return DecompMode::SignedTwoGroup;
  if (l == "strict" || l == "pyatt" || l == "strict_pyatt") return DecompMode::StrictPyatt;
  fail(Errc::BadEnum, "decomposition mode: unknown value '" + std::string(s) + "'");
}

std::string_view to_string(DecompMode m) {
  return m == DecompMode::SignedTwoGroup ? "signed" : "strict";
}

GiniDecomposition decompose(std::span<const double> values, std::span<const double> weights,
                            std::span<const int> category, const std::vector<std::string>& labels,
                            DecompMode mode, int reference) {
  if (values.size() != category.size())
    fail(Errc::BadValue, "decompose: category vector length mismatch");
  const int k_count = static_cast<int>(labels.size());
  if (k_count < 2) fail(Errc::BadValue, "decompose: need at least two categories");
  if (reference < 0 || reference >= k_count)
    fail(Errc::BadValue, "decompose: reference index out of range");
  for (int c : category)
    if (c < 0 || c >= k_count)
      fail(Errc::BadValue, "decompose: record maps to no declared category");

  GiniDecomposition out;
  out.mode = mode;
  out.total = weighted_gini(values, weights);

  double sw = 0.0;
  const double mu = weighted_mean(values, weights, &sw);

  std::vector<std::vector<double>> gvals(static_cast<std::size_t>(k_count));
  std::vector<std::vector<double>> gwts(static_cast<std::size_t>(k_count));
  for (std::size_t i = 0; i < values.size(); ++i) {
    gvals[static_cast<std::size_t>(category[i])].push_back(values[i]);
    gwts[static_cast<std::size_t>(category[i])].push_back(weights[i]);
  }
  for (int k = 0; k < k_count; ++k)
    if (gvals[static_cast<std::size_t>(k)].empty())
      fail(Errc::EmptyCategory, "decompose: category '" + labels[static_cast<std::size_t>(k)] +
                                    "' has no records");
  if (mode == DecompMode::SignedTwoGroup && k_count != 2)
    fail(Errc::NotBinary, "decompose: signed two-group mode requires exactly 2 categories");

  out.groups.resize(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    auto& g = out.groups[static_cast<std::size_t>(k)];
    const auto& v = gvals[static_cast<std::size_t>(k)];
    const auto& w = gwts[static_cast<std::size_t>(k)];
    double gw = 0.0;
    g.label = labels[static_cast<std::size_t>(k)];
    g.n = static_cast<long>(v.size());
    g.mean = weighted_mean(v, w, &gw);
    g.pop_share = gw / sw;
    g.value_share = g.pop_share * g.mean / mu;
    g.gini = g.mean > 0.0 ? weighted_gini(v, w) : 0.0;
    out.within += g.pop_share * g.value_share * g.gini;
  }

  if (mode == DecompMode::StrictPyatt) {
    // between = Gini of the distribution with every value replaced by its
    // group mean; the residual overlap is non-negative by construction
    std::vector<double> mean_sub(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      mean_sub[i] = out.groups[static_cast<std::size_t>(category[i])].mean;
    out.between = weighted_gini(mean_sub, weights);
    out.overlap = out.total - out.within - out.between;
    if (out.overlap < 0.0 && out.overlap >= -1e-12) out.overlap = 0.0;
  } else {
    const auto& ref = out.groups[static_cast<std::size_t>(reference)];
    const auto& other = out.groups[static_cast<std::size_t>(1 - reference)];
    const double magnitude = ref.pop_share * other.pop_share * std::fabs(ref.mean - other.mean) / mu;
    out.between = ref.mean >= other.mean ? magnitude : -magnitude;
    out.overlap = out.total - out.within - out.between;
  }

  if (out.total != 0.0) {
    out.between_share = 100.0 * out.between / out.total;
    out.within_share = 100.0 * out.within / out.total;
    out.overlap_share = 100.0 * out.overlap / out.total;
  }
  return out;
}

ValueSelector value_selector_from(std::string_view s) {
  auto l = lower(s);
  if (l == "oop_private_inpatient" || l == "private_inpatient")
    return ValueSelector::PrivateInpatientOop;
  if (l == "oop_all_episodes" || l == "all_episodes") return ValueSelector::AllEpisodeOop;
  if (l == "oop_household" || l == "household") return ValueSelector::HouseholdOop;
  fail(Errc::BadEnum, "value selector: unknown value '" + std::string(s) + "'");
}

std::string_view to_string(ValueSelector v) {
  switch (v) {
    case ValueSelector::PrivateInpatientOop: return "oop_private_inpatient";
    case ValueSelector::AllEpisodeOop: return "oop_all_episodes";
    default: return "oop_household";
  }
}

std::vector<Observation> analysis_observations(const SurveyDataset& ds,
                                               const GiniAnalysisConfig& cfg) {
  const auto groupings = cfg.groupings.empty() ? default_groupings() : cfg.groupings;
  std::vector<Observation> obs;

  if (cfg.unit == AnalysisUnit::Household || cfg.value == ValueSelector::HouseholdOop) {
    for (const auto& g : groupings)
      if (g.field != GroupField::Sector)
        fail(Errc::InvalidConfig,
             "household-unit analysis supports only the sector grouping; '" + g.name +
                 "' reads episode attributes");
    for (const auto& h : ds.households) {
      Observation o;
      o.value = h.oop_total;
      o.weight = h.multiplier;
      o.district_code = h.district_code;
      o.subsample = h.subsample;
      for (const auto& g : groupings)
        o.category.push_back(g.category_index(to_string(h.sector)));
      obs.push_back(std::move(o));
    }
    return obs;
  }

  auto hh_idx = household_index(ds);
  for (const auto& e : ds.episodes) {
    if (cfg.value == ValueSelector::PrivateInpatientOop &&
        (e.care_type != CareType::Inpatient || e.facility != Facility::Private))
      continue;
    if (cfg.chronic_only && !e.chronic) continue;
    auto it = hh_idx.find(e.hh_id);
    if (it == hh_idx.end())
      fail(Errc::BadValue, "analysis: episode " + e.episode_id + " references unknown household");
    const auto& h = ds.households[it->second];
    Observation o;
    o.value = e.total_cost();
    o.weight = e.multiplier;
    o.district_code = h.district_code;
    o.subsample = h.subsample;
    for (const auto& g : groupings) {
      switch (g.field) {
        case GroupField::PatientSex:
          o.category.push_back(g.category_index(to_string(e.patient_sex)));
          break;
        case GroupField::Sector:
          o.category.push_back(g.category_index(to_string(h.sector)));
          break;
        case GroupField::SocialGroup:
          o.category.push_back(g.category_index(to_string(e.social_group)));
          break;
        case GroupField::Religion:
          o.category.push_back(g.category_index(to_string(e.religion)));
          break;
      }
    }
    obs.push_back(std::move(o));
  }
  return obs;
}

namespace {

struct ObsView {
  std::vector<double> values;
  std::vector<double> weights;
  std::vector<Subsample> subsample;
  std::vector<std::vector<int>> category;  // per grouping
};

ObsView view_of(const std::vector<const Observation*>& obs, std::size_t n_groupings) {
  ObsView v;
  v.values.reserve(obs.size());
  v.weights.reserve(obs.size());
  v.subsample.reserve(obs.size());
  v.category.resize(n_groupings);
  for (auto& c : v.category) c.reserve(obs.size());
  for (const auto* o : obs) {
    v.values.push_back(o->value);
    v.weights.push_back(o->weight);
    v.subsample.push_back(o->subsample);
    for (std::size_t g = 0; g < n_groupings; ++g) v.category[g].push_back(o->category[g]);
  }
  return v;
}

// Decomposition for one domain and grouping, handling the degenerate
// single-category case (e.g. Kolkata has no rural episodes) the way the
// source tables do: between = 0, within = total.
DecompCell decompose_cell(const ObsView& v, std::size_t g, const GroupingSpec& spec,
                          DecompMode mode, double star_level) {
  DecompCell cell;
  const auto& cat = v.category[g];
  std::vector<char> seen(spec.categories.size(), 0);
  for (int c : cat) seen[static_cast<std::size_t>(c)] = 1;
  int non_empty = 0;
  for (char s : seen) non_empty += s;

  if (non_empty < 2) {
    cell.degenerate = true;
    auto& d = cell.decomp;
    d.mode = mode;
    d.total = weighted_gini(v.values, v.weights);
    d.within = d.total;
    d.between = 0.0;
    d.overlap = 0.0;
    if (d.total != 0.0) {
      d.within_share = 100.0;
    }
    return cell;
  }

  cell.decomp = decompose(v.values, v.weights, cat, spec.categories, mode, 0);

  // subsample SE of the between component, for the significance flag
  std::vector<double> val1, wt1, val2, wt2;
  std::vector<int> cat1, cat2;
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    if (v.subsample[i] == Subsample::S1) {
      val1.push_back(v.values[i]);
      wt1.push_back(v.weights[i]);
      cat1.push_back(cat[i]);
    } else {
      val2.push_back(v.values[i]);
      wt2.push_back(v.weights[i]);
      cat2.push_back(cat[i]);
    }
  }
  auto side_between = [&](const std::vector<double>& val, const std::vector<double>& wt,
                          const std::vector<int>& c) -> std::optional<double> {
    if (val.empty()) return std::nullopt;
    try {
      return decompose(val, wt, c, spec.categories, mode, 0).between;
    } catch (const CheqError&) {
      return std::nullopt;  // a category empty within the half-sample
    }
  };
  auto b1 = side_between(val1, wt1, cat1);
  auto b2 = side_between(val2, wt2, cat2);
  if (b1 && b2) {
    cell.between_se = std::fabs(*b1 - *b2) / 2.0;
    const double z = stats::z_quantile(star_level);
    cell.significant = std::fabs(cell.decomp.between) > z * *cell.between_se;
  }
  return cell;
}

}  // namespace

GiniTable district_decomposition_table(const SurveyDataset& ds, const DistrictMap& districts,
                                       const GiniAnalysisConfig& cfg) {
  const auto groupings = cfg.groupings.empty() ? default_groupings() : cfg.groupings;
  GiniTable table;
  for (const auto& g : groupings) table.grouping_names.push_back(g.name);

  auto obs = analysis_observations(ds, cfg);
  if (obs.empty()) fail(Errc::EmptyDomain, "gini analysis: no observations after filtering");

  auto make_row = [&](const std::string& label, int code,
                      const std::vector<const Observation*>& dom) {
    GiniRow row;
    row.label = label;
    row.district_code = code;
    row.n_obs = static_cast<long>(dom.size());
    row.low_n = row.n_obs < cfg.low_n_threshold;
    auto v = view_of(dom, groupings.size());
    row.total_gini = weighted_gini(v.values, v.weights);
    for (std::size_t g = 0; g < groupings.size(); ++g)
      row.cells.push_back(decompose_cell(v, g, groupings[g], cfg.mode, cfg.star_level));
    return row;
  };

  const auto& entries = districts.entries();
  std::vector<GiniRow> rows(entries.size());
  std::vector<char> present(entries.size(), 0);
  std::exception_ptr err;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
#endif
  for (std::size_t d = 0; d < entries.size(); ++d) {
    try {
      std::vector<const Observation*> dom;
      for (const auto& o : obs)
        if (o.district_code == entries[d].first) dom.push_back(&o);
      if (dom.empty()) continue;
      double positive = 0.0;
      for (const auto* o : dom) positive += o->value;
      if (!(positive > 0.0)) continue;  // all-zero spending, Gini undefined
      present[d] = 1;
      rows[d] = make_row(entries[d].second, entries[d].first, dom);
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
  if (table.rows.empty()) fail(Errc::EmptyDomain, "gini analysis: no district has usable spending");

  std::vector<const Observation*> all;
  all.reserve(obs.size());
  for (const auto& o : obs) all.push_back(&o);
  table.rows.push_back(make_row("West Bengal", 0, all));
  return table;
}

}  // namespace cheq
