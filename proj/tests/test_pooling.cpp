#include <doctest.h>

#include <cmath>
#include <random>

#include "cheq/estimation.hpp"
#include "cheq/inequality.hpp"
#include "cheq/pooling.hpp"

using namespace cheq;

namespace {

HouseholdRecord hh(std::string id, int district, Sector sector, Agency agency, Subsample sub,
                   double multiplier, double aexp, double oop) {
  HouseholdRecord h;
  h.hh_id = std::move(id);
  h.district_code = district;
  h.sector = sector;
  h.agency = agency;
  h.subsample = sub;
  h.stratum_id = "S";
  h.multiplier = multiplier;
  h.hh_size = 4;
  h.aexp = aexp;
  h.oop_total = oop;
  h.oop_outpatient = oop;
  return h;
}

SurveyDataset simple_dataset(Agency agency, int n, double multiplier, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> aexp(10.5, 0.5);
  std::uniform_real_distribution<double> ratio(0.0, 0.4);
  SurveyDataset ds;
  ds.label = agency == Agency::Central ? "central" : "state";
  const char* tag = agency == Agency::Central ? "C" : "T";
  for (int i = 0; i < n; ++i) {
    const double a = aexp(rng);
    ds.households.push_back(hh(tag + std::to_string(i), 1 + i % 2,
                               i % 3 == 0 ? Sector::Urban : Sector::Rural, agency,
                               i % 2 == 0 ? Subsample::S1 : Subsample::S2, multiplier, a,
                               ratio(rng) * a));
  }
  return ds;
}

}  // namespace

TEST_CASE("runs test hand values") {
  SUBCASE("perfectly interleaved 5+5 gives z near +2.683, p near 0.0073") {
    std::vector<double> a{1, 3, 5, 7, 9};
    std::vector<double> b{2, 4, 6, 8, 10};
    auto r = runs_test(a, b);
    CHECK(r.runs == 10);
    CHECK(std::fabs(r.z - 2.683) < 1e-3);
    CHECK(std::fabs(r.p - 0.0073) < 1e-3);
  }

  SUBCASE("fully separated 5+5 gives z near -2.683") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{6, 7, 8, 9, 10};
    auto r = runs_test(a, b);
    CHECK(r.runs == 2);
    CHECK(std::fabs(r.z + 2.683) < 1e-3);
    CHECK(std::fabs(r.p - 0.0073) < 1e-3);
  }

  SUBCASE("too few observations throws") {
    std::vector<double> a{1, 2, 3};
    std::vector<double> b{4, 5, 6};
    CHECK_THROWS_AS((void)runs_test(a, b), CheqError);
  }

  SUBCASE("label-symmetric on tie-free data") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(40), b(55);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    auto r1 = runs_test(a, b);
    auto r2 = runs_test(b, a);
    CHECK(r1.runs == r2.runs);
    CHECK(r1.p == doctest::Approx(r2.p).epsilon(1e-15));
  }

  SUBCASE("identical samples from one distribution keep p above 0.05 in >= 95% of trials") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int calm = 0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
      std::vector<double> a(100), b(100);
      for (auto& v : a) v = u(rng);
      for (auto& v : b) v = u(rng);
      if (runs_test(a, b).p > 0.05) ++calm;
    }
    CHECK(calm >= 950);
  }
}

TEST_CASE("chi-square homogeneity") {
  SUBCASE("identical count tables give stat 0 and p 1") {
    auto r = chi_square_2xk({10, 10}, {10, 10});
    CHECK(r.stat == doctest::Approx(0.0));
    CHECK(r.p == doctest::Approx(1.0));
    CHECK(r.df == 1);
  }

  SUBCASE("disjoint samples with 2 bins give stat 200") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lo(0.0, 1.0), hi(999.0, 1000.0);
    std::vector<double> a(100), b(100);
    for (auto& v : a) v = lo(rng);
    for (auto& v : b) v = hi(rng);
    auto r = chi_square_homogeneity(a, b, 2);
    CHECK(r.stat == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(r.df == 1);
    CHECK(r.p < 1e-10);
  }

  SUBCASE("12 observations collapse to 2 bins with df 1") {
    std::vector<double> a{1, 2, 3, 4, 5, 6};
    std::vector<double> b{1.5, 2.5, 3.5, 4.5, 5.5, 6.5};
    auto r = chi_square_homogeneity(a, b, 10);
    CHECK(r.bins_used == 2);
    CHECK(r.df == 1);
  }

  SUBCASE("all values equal is degenerate") {
    std::vector<double> a(30, 5.0), b(30, 5.0);
    CHECK_THROWS_AS((void)chi_square_homogeneity(a, b, 10), CheqError);
  }

  SUBCASE("stat invariant under strictly monotone transforms") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> a(200), b(200);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = 0.3 + 0.5 * u(rng);
    auto r1 = chi_square_homogeneity(a, b, 10);
    auto mono = [](double x) { return std::exp(3.0 * x) + x; };
    for (auto& v : a) v = mono(v);
    for (auto& v : b) v = mono(v);
    auto r2 = chi_square_homogeneity(a, b, 10);
    CHECK(r1.stat == doctest::Approx(r2.stat).epsilon(1e-12));
    CHECK(r1.df == r2.df);
  }
}

TEST_CASE("z-test of weighted means") {
  SUBCASE("identical samples give z 0, p 1") {
    std::vector<double> x{1, 2, 3, 4};
    std::vector<double> w{1, 1, 1, 1};
    auto r = z_test_means(x, w, x, w);
    CHECK(r.z == doctest::Approx(0.0));
    CHECK(r.p == doctest::Approx(1.0));
  }

  SUBCASE("means 10 vs 20 with unit variances and n 50 give z -50") {
    // 25 at m-d, 25 at m+d with d chosen so the sample variance is exactly 1
    const double d = std::sqrt(49.0 / 50.0);
    std::vector<double> x, y, w(50, 2.5);
    for (int i = 0; i < 25; ++i) {
      x.push_back(10.0 - d);
      x.push_back(10.0 + d);
      y.push_back(20.0 - d);
      y.push_back(20.0 + d);
    }
    auto r = z_test_means(x, w, y, w);
    CHECK(r.z == doctest::Approx(-50.0).epsilon(1e-12));
    CHECK(r.p < 1e-300);
  }

  SUBCASE("equal weights reduce to the unweighted test") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> na(3.0, 1.0), nb(3.2, 1.5);
    std::vector<double> x(60), y(45);
    for (auto& v : x) v = na(rng);
    for (auto& v : y) v = nb(rng);
    std::vector<double> wx(x.size(), 7.0), wy(y.size(), 0.2);
    auto weighted = z_test_means(x, wx, y, wy);
    std::vector<double> ux(x.size(), 1.0), uy(y.size(), 1.0);
    auto unweighted = z_test_means(x, ux, y, uy);
    CHECK(weighted.z == doctest::Approx(unweighted.z).epsilon(1e-12));
  }

  SUBCASE("zero variance in both throws") {
    std::vector<double> x{5, 5, 5};
    std::vector<double> w{1, 1, 1};
    CHECK_THROWS_AS((void)z_test_means(x, w, x, w), CheqError);
  }
}

TEST_CASE("poolability report combines the three tests") {
  auto central = simple_dataset(Agency::Central, 300, 10.0, 1);
  auto state = simple_dataset(Agency::State, 300, 10.0, 2);
  auto rep = poolability(central, state, 0.05, PoolVariable::Aexp);
  CHECK(rep.poolable);  // same generator, should pool
  CHECK(rep.runs_p > 0.05);
  CHECK(rep.chi2_p > 0.05);
  CHECK(rep.z_means_p > 0.05);

  // shifted state sample must fail the mean test
  auto shifted = simple_dataset(Agency::State, 300, 10.0, 3);
  for (auto& h : shifted.households) h.aexp *= 3.0;
  auto rep2 = poolability(central, shifted, 0.05, PoolVariable::Aexp);
  CHECK(!rep2.poolable);
  CHECK_THROWS_AS((void)pool_datasets(central, shifted, rep2, false), CheqError);
}

TEST_CASE("pooling rescales multipliers by stratum sample shares") {
  SUBCASE("10 central vs 30 state households scale by 0.25 / 0.75") {
    SurveyDataset central, state;
    central.label = "central";
    state.label = "state";
    for (int i = 0; i < 10; ++i)
      central.households.push_back(hh("C" + std::to_string(i), 1, Sector::Rural, Agency::Central,
                                      Subsample::S1, 8.0, 100.0, 10.0));
    for (int i = 0; i < 30; ++i)
      state.households.push_back(hh("S" + std::to_string(i), 1, Sector::Rural, Agency::State,
                                    Subsample::S2, 8.0, 100.0, 10.0));
    PoolabilityReport rep;
    rep.poolable = true;
    auto pooled = pool_datasets(central, state, rep, false);
    CHECK(pooled.dataset.households.size() == 40);
    for (const auto& h : pooled.dataset.households) {
      if (h.agency == Agency::Central)
        CHECK(h.multiplier == doctest::Approx(8.0 * 0.25));
      else
        CHECK(h.multiplier == doctest::Approx(8.0 * 0.75));
    }
  }

  SUBCASE("equal-n agency totals average: 100 and 140 pool to 120") {
    SurveyDataset central, state;
    // 2 households each, same stratum; totals sum(w*y): central 100, state 140
    central.households.push_back(hh("C0", 1, Sector::Rural, Agency::Central, Subsample::S1,
                                    10.0, 100.0, 4.0));
    central.households.push_back(hh("C1", 1, Sector::Rural, Agency::Central, Subsample::S2,
                                    10.0, 100.0, 6.0));
    state.households.push_back(hh("S0", 1, Sector::Rural, Agency::State, Subsample::S1, 10.0,
                                  100.0, 5.0));
    state.households.push_back(hh("S1", 1, Sector::Rural, Agency::State, Subsample::S2, 10.0,
                                  100.0, 9.0));
    PoolabilityReport rep;
    rep.poolable = true;
    auto pooled = pool_datasets(central, state, rep, false);
    double total = 0.0;
    for (const auto& h : pooled.dataset.households) total += h.multiplier * h.oop_total;
    CHECK(total == doctest::Approx(120.0).epsilon(1e-12));
  }

  SUBCASE("stratum missing in one agency keeps scale 1 with a warning") {
    SurveyDataset central, state;
    central.households.push_back(hh("C0", 1, Sector::Rural, Agency::Central, Subsample::S1,
                                    10.0, 100.0, 4.0));
    central.households.push_back(hh("C1", 2, Sector::Urban, Agency::Central, Subsample::S2,
                                    6.0, 100.0, 4.0));
    state.households.push_back(hh("S0", 1, Sector::Rural, Agency::State, Subsample::S1, 10.0,
                                  100.0, 5.0));
    PoolabilityReport rep;
    rep.poolable = true;
    auto pooled = pool_datasets(central, state, rep, false);
    CHECK(pooled.warnings.size() == 1);
    for (const auto& h : pooled.dataset.households) {
      if (h.district_code == 2) CHECK(h.multiplier == doctest::Approx(6.0));
      else CHECK(h.multiplier == doctest::Approx(5.0));
    }
  }

  SUBCASE("record count preserved, multipliers stay positive, ordering deterministic") {
    auto central = simple_dataset(Agency::Central, 101, 12.0, 4);
    auto state = simple_dataset(Agency::State, 57, 9.0, 5);
    PoolabilityReport rep;
    rep.poolable = true;
    auto pooled = pool_datasets(central, state, rep, false);
    CHECK(pooled.dataset.households.size() == 158);
    for (const auto& h : pooled.dataset.households) CHECK(h.multiplier > 0.0);
    auto again = pool_datasets(central, state, rep, false);
    for (std::size_t i = 0; i < pooled.dataset.households.size(); ++i)
      CHECK(pooled.dataset.households[i].hh_id == again.dataset.households[i].hh_id);
  }
}

TEST_CASE("pooling a dataset with itself changes no weighted statistic") {
  auto ds = simple_dataset(Agency::Central, 400, 11.0, 42);
  PoolabilityReport rep;
  rep.poolable = true;
  auto pooled = pool_datasets(ds, ds, rep, false);
  CHECK(pooled.dataset.households.size() == 800);

  HouseholdRefs before, after;
  for (const auto& h : ds.households) before.push_back(&h);
  for (const auto& h : pooled.dataset.households) after.push_back(&h);

  for (double t : {0.1, 0.2, 0.4}) {
    auto a = che_incidence(before, t, "x");
    auto b = che_incidence(after, t, "x");
    CHECK(std::fabs(a.incidence - b.incidence) < 1e-10);
  }
  auto ca = coverage_rate(before, "x");
  auto cb = coverage_rate(after, "x");
  CHECK(std::fabs(ca.incidence - cb.incidence) < 1e-10);

  std::vector<double> v1, w1, v2, w2;
  for (const auto& h : ds.households) {
    v1.push_back(h.oop_total);
    w1.push_back(h.multiplier);
  }
  for (const auto& h : pooled.dataset.households) {
    v2.push_back(h.oop_total);
    w2.push_back(h.multiplier);
  }
  CHECK(std::fabs(weighted_gini(v1, w1) - weighted_gini(v2, w2)) < 1e-10);

  auto cuts1 = quintile_cuts(ds.households);
  auto cuts2 = quintile_cuts(pooled.dataset.households);
  for (int k = 0; k < 4; ++k)
    CHECK(cuts1.cuts[static_cast<std::size_t>(k)] ==
          doctest::Approx(cuts2.cuts[static_cast<std::size_t>(k)]).epsilon(1e-12));
}
