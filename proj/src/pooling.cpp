#include "cheq/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "cheq/stats.hpp"
#include "cheq/util.hpp"

namespace cheq {

RunsTestResult runs_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    fail(Errc::TooFewObservations, "runs_test: both samples must be non-empty");
  if (a.size() + b.size() < 10)
    fail(Errc::TooFewObservations, "runs_test: combined n must be >= 10 for the normal "
                                   "approximation");

  struct Tagged {
    double v;
    int src;  // 0 = a, 1 = b
  };
  std::vector<Tagged> merged;
  merged.reserve(a.size() + b.size());
  for (double v : a) merged.push_back({v, 0});
  for (double v : b) merged.push_back({v, 1});
  // ties across sources broken deterministically: source a (Central) first
  std::stable_sort(merged.begin(), merged.end(), [](const Tagged& x, const Tagged& y) {
    if (x.v != y.v) return x.v < y.v;
    return x.src < y.src;
  });

  RunsTestResult res;
  res.n1 = a.size();
  res.n2 = b.size();
  res.runs = 1;
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (merged[i].src != merged[i - 1].src) ++res.runs;
    if (merged[i].v == merged[i - 1].v && merged[i].src != merged[i - 1].src) ++res.cross_ties;
  }
  const double n1 = static_cast<double>(res.n1);
  const double n2 = static_cast<double>(res.n2);
  const double n = n1 + n2;
  const double mu = 2.0 * n1 * n2 / n + 1.0;
  const double var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n1 - n2) / (n * n * (n - 1.0));
  if (!(var > 0.0)) fail(Errc::DegenerateBins, "runs_test: degenerate run-count variance");
  res.z = (static_cast<double>(res.runs) - mu) / std::sqrt(var);
  res.p = 2.0 * (1.0 - stats::normal_cdf(std::fabs(res.z)));
  return res;
}

Chi2Result chi_square_2xk(std::vector<double> counts_a, std::vector<double> counts_b) {
  if (counts_a.size() != counts_b.size() || counts_a.size() < 2)
    fail(Errc::BadValue, "chi_square_2xk: need two count rows of equal length >= 2");

  auto expected_min = [&]() {
    double ra = 0.0, rb = 0.0, tot = 0.0;
    for (std::size_t k = 0; k < counts_a.size(); ++k) {
      ra += counts_a[k];
      rb += counts_b[k];
    }
    tot = ra + rb;
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < counts_a.size(); ++k) {
      const double col = counts_a[k] + counts_b[k];
      mn = std::min(mn, ra * col / tot);
      mn = std::min(mn, rb * col / tot);
    }
    return mn;
  };

  // merge the column holding the smallest expected cell into its neighbour
  // until every expected count reaches 5; never below two columns
  while (counts_a.size() > 2 && expected_min() < 5.0) {
    double ra = 0.0, rb = 0.0;
    for (std::size_t k = 0; k < counts_a.size(); ++k) {
      ra += counts_a[k];
      rb += counts_b[k];
    }
    const double tot = ra + rb;
    std::size_t worst = 0;
    double worst_e = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < counts_a.size(); ++k) {
      const double col = counts_a[k] + counts_b[k];
      const double e = std::min(ra, rb) * col / tot;
      if (e < worst_e) {
        worst_e = e;
        worst = k;
      }
    }
    const std::size_t into = worst == 0 ? 1 : worst - 1;
    counts_a[into] += counts_a[worst];
    counts_b[into] += counts_b[worst];
    counts_a.erase(counts_a.begin() + static_cast<std::ptrdiff_t>(worst));
    counts_b.erase(counts_b.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  if (counts_a.size() < 2)
    fail(Errc::DegenerateBins, "chi_square: too few observations to keep expected counts >= 5");

  double ra = 0.0, rb = 0.0;
  for (std::size_t k = 0; k < counts_a.size(); ++k) {
    ra += counts_a[k];
    rb += counts_b[k];
  }
  const double tot = ra + rb;
  Chi2Result res;
  res.bins_used = static_cast<int>(counts_a.size());
  res.df = res.bins_used - 1;
  for (std::size_t k = 0; k < counts_a.size(); ++k) {
    const double col = counts_a[k] + counts_b[k];
    const double ea = ra * col / tot;
    const double eb = rb * col / tot;
    res.stat += (counts_a[k] - ea) * (counts_a[k] - ea) / ea;
    res.stat += (counts_b[k] - eb) * (counts_b[k] - eb) / eb;
  }
  res.p = 1.0 - stats::chi_square_cdf(res.stat, static_cast<double>(res.df));
  return res;
}

Chi2Result chi_square_homogeneity(std::span<const double> a, std::span<const double> b,
                                  int n_bins) {
  if (n_bins < 2) fail(Errc::BadValue, "chi_square_homogeneity: n_bins must be >= 2");
  if (a.empty() || b.empty())
    fail(Errc::TooFewObservations, "chi_square_homogeneity: both samples must be non-empty");

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());
  if (pooled.front() == pooled.back())
    fail(Errc::DegenerateBins, "chi_square_homogeneity: all values equal");

  // bin edges at the k/n_bins quantiles of the pooled sample
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(n_bins) - 1);
  const std::size_t n = pooled.size();
  for (int k = 1; k < n_bins; ++k) {
    std::size_t idx = static_cast<std::size_t>(
        std::ceil(static_cast<double>(k) / n_bins * static_cast<double>(n))) - 1;
    idx = std::min(idx, n - 1);
    edges.push_back(pooled[idx]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  auto bin_of = [&](double v) {
    return static_cast<std::size_t>(
        std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  };
  std::vector<double> ca(edges.size() + 1, 0.0), cb(edges.size() + 1, 0.0);
  for (double v : a) ca[bin_of(v)] += 1.0;
  for (double v : b) cb[bin_of(v)] += 1.0;
  return chi_square_2xk(std::move(ca), std::move(cb));
}

namespace {

struct WeightedMoments {
  double mean = 0.0;
  double var = 0.0;  // Bessel-corrected weighted variance
  std::size_t n = 0;
};

WeightedMoments weighted_moments(std::span<const double> x, std::span<const double> w) {
  if (x.size() != w.size()) fail(Errc::BadValue, "z_test_means: value/weight length mismatch");
  WeightedMoments m;
  m.n = x.size();
  double sw = 0.0, swx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    swx += w[i] * x[i];
  }
  if (!(sw > 0.0)) fail(Errc::BadValue, "z_test_means: nonpositive total weight");
  m.mean = swx / sw;
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += w[i] * (x[i] - m.mean) * (x[i] - m.mean);
  const double nn = static_cast<double>(m.n);
  m.var = m.n > 1 ? (sq / sw) * (nn / (nn - 1.0)) : 0.0;
  return m;
}

}  // namespace

ZTestResult z_test_means(std::span<const double> a, std::span<const double> wa,
                         std::span<const double> b, std::span<const double> wb) {
  if (a.size() < 2 || b.size() < 2)
    fail(Errc::TooFewObservations, "z_test_means: each sample needs >= 2 values");
  auto ma = weighted_moments(a, wa);
  auto mb = weighted_moments(b, wb);
  if (ma.var == 0.0 && mb.var == 0.0)
    fail(Errc::ZeroVariance, "z_test_means: both samples have zero variance");
  ZTestResult res;
  res.z = (ma.mean - mb.mean) /
          std::sqrt(ma.var / static_cast<double>(ma.n) + mb.var / static_cast<double>(mb.n));
  res.p = 2.0 * (1.0 - stats::normal_cdf(std::fabs(res.z)));
  return res;
}

PoolVariable pool_variable_from(std::string_view s) {
  auto l = lower(s);
  if (l == "aexp") return PoolVariable::Aexp;
  if (l == "oop_total" || l == "oop") return PoolVariable::OopTotal;
  if (l == "pcexp") return PoolVariable::PcExp;
  fail(Errc::BadEnum, "pool variable: unknown value '" + std::string(s) + "'");
}

std::string_view to_string(PoolVariable v) {
  switch (v) {
    case PoolVariable::Aexp: return "aexp";
    case PoolVariable::OopTotal: return "oop_total";
    default: return "pcexp";
  }
}

namespace {

double pool_value(const HouseholdRecord& h, PoolVariable v) {
  switch (v) {
    case PoolVariable::Aexp: return h.aexp;
    case PoolVariable::OopTotal: return h.oop_total;
    default: return h.pcexp();
  }
}

}  // namespace

PoolabilityReport poolability(const SurveyDataset& central, const SurveyDataset& state,
                              double alpha, PoolVariable variable, int n_bins) {
  PoolabilityReport rep;
  rep.alpha = alpha;
  rep.variable = variable;

  std::vector<double> va, wa, vb, wb;
  va.reserve(central.households.size());
  wa.reserve(central.households.size());
  for (const auto& h : central.households) {
    va.push_back(pool_value(h, variable));
    wa.push_back(h.multiplier);
  }
  vb.reserve(state.households.size());
  wb.reserve(state.households.size());
  for (const auto& h : state.households) {
    vb.push_back(pool_value(h, variable));
    wb.push_back(h.multiplier);
  }

  auto runs = runs_test(va, vb);
  rep.runs_z = runs.z;
  rep.runs_p = runs.p;
  if (runs.cross_ties > 0)
    rep.warnings.push_back("runs_test: " + std::to_string(runs.cross_ties) +
                           " cross-source ties broken deterministically (Central first)");

  auto chi2 = chi_square_homogeneity(va, vb, n_bins);
  rep.chi2_stat = chi2.stat;
  rep.chi2_df = chi2.df;
  rep.chi2_p = chi2.p;

  auto z = z_test_means(va, wa, vb, wb);
  rep.z_means = z.z;
  rep.z_means_p = z.p;

  rep.poolable = std::min({rep.runs_p, rep.chi2_p, rep.z_means_p}) > alpha;
  return rep;
}

PoolResult pool_datasets(const SurveyDataset& central, const SurveyDataset& state,
                         const PoolabilityReport& report, bool force) {
  if (!report.poolable && !force)
    fail(Errc::NotPoolable,
         "samples fail the poolability tests (min p <= alpha); pass force to pool anyway");

  PoolResult out;
  if (!report.poolable)
    out.warnings.push_back("pooling forced despite failed poolability tests");

  // per (district, sector) stratum household counts, by source side
  std::map<std::pair<int, int>, std::pair<long, long>> stratum;  // -> (n_central, n_state)
  auto key = [](const HouseholdRecord& h) {
    return std::make_pair(h.district_code, static_cast<int>(h.sector));
  };
  for (const auto& h : central.households) stratum[key(h)].first++;
  for (const auto& h : state.households) stratum[key(h)].second++;

  long lone_strata = 0;
  for (const auto& [k, counts] : stratum)
    if (counts.first == 0 || counts.second == 0) ++lone_strata;
  if (lone_strata > 0)
    out.warnings.push_back(std::to_string(lone_strata) +
                           " strata present in one agency only; their multipliers kept at scale 1");

  // side: 0 = central argument, 1 = state argument
  auto factor = [&](const HouseholdRecord& h, int side) {
    const auto& [nc, ns] = stratum.at(key(h));
    if (nc == 0 || ns == 0) return 1.0;  // stratum present in one agency only
    const double n = static_cast<double>(nc + ns);
    return side == 0 ? static_cast<double>(nc) / n : static_cast<double>(ns) / n;
  };

  // hh_id collision across the two samples forces a side prefix on every id
  bool collision = false;
  {
    std::unordered_map<std::string, int> ids;
    for (const auto& h : central.households) ids[h.hh_id] = 1;
    for (const auto& h : state.households)
      if (ids.count(h.hh_id)) {
        collision = true;
        break;
      }
  }
  if (collision)
    out.warnings.push_back("hh_id values collide across samples; ids prefixed with c:/s:");

  auto prefix = [&](int side, const std::string& id) {
    if (!collision) return id;
    return (side == 0 ? std::string("c:") : std::string("s:")) + id;
  };

  SurveyDataset& pooled = out.dataset;
  pooled.label = "pooled";
  pooled.households.reserve(central.households.size() + state.households.size());
  pooled.episodes.reserve(central.episodes.size() + state.episodes.size());

  auto add_households = [&](const SurveyDataset& src, int side) {
    for (const auto& h : src.households) {
      HouseholdRecord copy = h;
      copy.hh_id = prefix(side, h.hh_id);
      copy.multiplier = h.multiplier * factor(h, side);
      pooled.households.push_back(std::move(copy));
    }
  };
  auto add_episodes = [&](const SurveyDataset& src, int side) {
    auto idx = household_index(src);
    for (const auto& e : src.episodes) {
      auto it = idx.find(e.hh_id);
      if (it == idx.end())
        fail(Errc::BadValue, "pool: episode " + e.episode_id + " references unknown household " +
                                 e.hh_id);
      const auto& h = src.households[it->second];
      EpisodeRecord copy = e;
      copy.hh_id = prefix(side, e.hh_id);
      copy.episode_id = prefix(side, e.episode_id);
      copy.multiplier = e.multiplier * factor(h, side);
      pooled.episodes.push_back(std::move(copy));
    }
  };
  add_households(central, 0);
  add_households(state, 1);
  add_episodes(central, 0);
  add_episodes(state, 1);

  // deterministic ordering regardless of input order
  std::stable_sort(pooled.households.begin(), pooled.households.end(),
                   [](const HouseholdRecord& x, const HouseholdRecord& y) {
                     return std::tie(x.district_code, x.sector, x.agency, x.hh_id) <
                            std::tie(y.district_code, y.sector, y.agency, y.hh_id);
                   });
  std::stable_sort(pooled.episodes.begin(), pooled.episodes.end(),
                   [](const EpisodeRecord& x, const EpisodeRecord& y) {
                     return std::tie(x.hh_id, x.episode_id) < std::tie(y.hh_id, y.episode_id);
                   });
  return out;
}

}  // namespace cheq
