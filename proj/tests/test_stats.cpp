#include <doctest.h>

#include <cmath>
#include <random>

#include "cheq/stats.hpp"
#include "cheq/types.hpp"
#include "oracles.hpp"

using namespace cheq;

TEST_CASE("normal and student-t CDFs match the quadrature oracle to 1e-8") {
  for (double x : {-10.0, -3.5, -1.0, -0.1, 0.0, 0.3, 1.96, 4.0, 10.0}) {
    CHECK(std::fabs(stats::normal_cdf(x) - oracle::normal_cdf_quadrature(x)) < 1e-8);
  }
  for (double df : {1.0, 2.0, 5.0, 17.0, 60.0, 200.0}) {
    for (double t : {-10.0, -2.5, -0.7, 0.0, 0.5, 1.87, 3.3, 10.0}) {
      CHECK(std::fabs(stats::student_t_cdf(t, df) -
                      oracle::student_t_cdf_quadrature(t, df)) < 1e-8);
    }
  }
}

TEST_CASE("chi-square CDF sanity against known points") {
  // chi2(1) cdf(x) = 2 Phi(sqrt(x)) - 1
  for (double x : {0.5, 1.0, 3.84, 10.0}) {
    const double expect = 2.0 * stats::normal_cdf(std::sqrt(x)) - 1.0;
    CHECK(stats::chi_square_cdf(x, 1.0) == doctest::Approx(expect).epsilon(1e-10));
  }
  // chi2(2) is Exp(1/2)
  CHECK(stats::chi_square_cdf(2.0, 2.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("z quantiles use the reporting constants") {
  CHECK(stats::z_quantile(0.99) == 2.576);
  CHECK(stats::z_quantile(0.90) == 1.645);
  CHECK(stats::z_quantile(0.95) == 1.96);
  // inverse-normal fallback stays consistent with the CDF
  const double z = stats::z_quantile(0.975);
  CHECK(stats::normal_cdf(z) - stats::normal_cdf(-z) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("average ranks handle ties by midpoint") {
  auto r = stats::average_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0});
  CHECK(r[0] == doctest::Approx(3.5));
  CHECK(r[1] == doctest::Approx(1.0));
  CHECK(r[2] == doctest::Approx(3.5));
  CHECK(r[3] == doctest::Approx(2.0));
}

TEST_CASE("spearman basics") {
  SUBCASE("strictly monotone gives rho 1 and p near 0") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<double> y{2, 4, 9, 16, 30, 31, 44, 60};
    auto r = stats::spearman(x, y);
    CHECK(r.rho == doctest::Approx(1.0));
    CHECK(r.p_two_sided < 1e-8);
  }

  SUBCASE("paper anchor: rho 0.413 with n 19 gives p 0.079") {
    const double p = stats::spearman_pvalue(0.413, 19);
    CHECK(std::fabs(p - 0.079) < 0.001);
  }

  SUBCASE("constant input throws") {
    std::vector<double> x{1, 1, 1, 1};
    std::vector<double> y{1, 2, 3, 4};
    CHECK_THROWS_AS((void)stats::spearman(x, y), CheqError);
  }

  SUBCASE("invariant under strictly monotone transforms, exactly") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
    }
    auto base = stats::spearman(x, y);
    std::vector<double> ex(x.size()), cy(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ex[i] = std::exp(x[i]);           // monotone in x
      cy[i] = y[i] * y[i] * y[i] + 7.0; // monotone in y
    }
    auto transformed = stats::spearman(ex, cy);
    CHECK(base.rho == transformed.rho);  // ranks identical, so exact
    CHECK(base.p_two_sided == transformed.p_two_sided);
  }

  SUBCASE("matches a rank-then-pearson oracle") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::round(u(rng) * 10.0);  // force ties
      y[i] = std::round(u(rng) * 10.0);
    }
    auto r = stats::spearman(x, y);
    auto rx = stats::average_ranks(x);
    auto ry = stats::average_ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
      mx += rx[i];
      my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
      sxy += (rx[i] - mx) * (ry[i] - my);
      sxx += (rx[i] - mx) * (rx[i] - mx);
      syy += (ry[i] - my) * (ry[i] - my);
    }
    CHECK(r.rho == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
  }
}

TEST_CASE("welch t-test") {
  SUBCASE("identical samples give t 0 and p 1") {
    std::vector<double> x{1, 2, 3, 4};
    auto r = stats::welch_t(x, x);
    CHECK(r.t == doctest::Approx(0.0));
    CHECK(r.p == doctest::Approx(1.0));
  }

  SUBCASE("well separated samples give p near 0") {
    std::vector<double> x{0.0, 1e-4, -1e-4, 0.0};
    std::vector<double> y{1.0, 1.0 + 1e-4, 1.0 - 1e-4, 1.0};
    auto r = stats::welch_t(x, y);
    CHECK(r.p < 1e-10);
    CHECK(r.t < -100.0);
  }

  SUBCASE("matches the textbook formula on 19-vs-19 vectors") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> na(0.5, 1.0), nb(0.8, 2.0);
    std::vector<double> x(19), y(19);
    for (std::size_t i = 0; i < 19; ++i) {
      x[i] = na(rng);
      y[i] = nb(rng);
    }
    auto r = stats::welch_t(x, y);
    const double mx = stats::mean(x), my = stats::mean(y);
    const double vx = stats::sample_variance(x) / 19.0;
    const double vy = stats::sample_variance(y) / 19.0;
    const double t = (mx - my) / std::sqrt(vx + vy);
    const double df = (vx + vy) * (vx + vy) / (vx * vx / 18.0 + vy * vy / 18.0);
    CHECK(r.t == doctest::Approx(t).epsilon(1e-10));
    CHECK(r.df == doctest::Approx(df).epsilon(1e-10));
    const double p = 2.0 * (1.0 - oracle::student_t_cdf_quadrature(std::fabs(t), df));
    CHECK(r.p == doctest::Approx(p).epsilon(1e-7));
  }

  SUBCASE("antisymmetric under sample swap") {
    std::vector<double> x{1, 2, 3, 9};
    std::vector<double> y{4, 4, 5, 7};
    auto a = stats::welch_t(x, y);
    auto b = stats::welch_t(y, x);
    CHECK(a.t == doctest::Approx(-b.t).epsilon(1e-15));
    CHECK(a.p == doctest::Approx(b.p).epsilon(1e-15));
  }

  SUBCASE("both samples constant throws ZeroVariance") {
    std::vector<double> x{2, 2, 2};
    CHECK_THROWS_AS((void)stats::welch_t(x, x), CheqError);
  }
}

TEST_CASE("across-district confidence interval") {
  SUBCASE("all equal values give a zero-width interval") {
    std::vector<double> v(19, 4.2);
    auto ci = stats::across_district_ci(v, 0.99);
    CHECK(ci.lo == doctest::Approx(ci.hi));
    CHECK(ci.mean == doctest::Approx(4.2));
  }

  SUBCASE("reproduces the 17.2 (11.6-22.8) format at 99%") {
    // 19 values with mean 17.2 and sample sd exactly 9.48
    std::vector<double> v;
    for (int i = 0; i < 9; ++i) v.push_back(17.2 - 9.48);
    for (int i = 0; i < 9; ++i) v.push_back(17.2 + 9.48);
    v.push_back(17.2);
    auto ci = stats::across_district_ci(v, 0.99);
    CHECK(ci.mean == doctest::Approx(17.2).epsilon(1e-12));
    CHECK(std::fabs(ci.lo - 11.6) < 0.05);
    CHECK(std::fabs(ci.hi - 22.8) < 0.05);
  }

  SUBCASE("interval widens monotonically in level") {
    std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
    double prev = 0.0;
    for (double level : {0.80, 0.90, 0.95, 0.99}) {
      auto ci = stats::across_district_ci(v, level);
      CHECK(ci.hi - ci.lo > prev);
      prev = ci.hi - ci.lo;
    }
  }
}
