// Independent oracle implementations used by the tests. These deliberately
// avoid the library's code paths: Gini via the Lorenz trapezoid identity,
// decompositions via full pairwise enumeration, estimators via plain
// enumeration loops, and CDFs via adaptive Simpson quadrature.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// G = 1 - sum_i p_i (L_{i-1} + L_i), the trapezoid area under the Lorenz
// curve; equals the relative mean difference form for any weighted sample.
inline double lorenz_gini(std::vector<double> values, std::vector<double> weights) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  double sw = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sw += weights[i];
    sv += weights[i] * values[i];
  }
  double cum_l = 0.0, area = 0.0;
  for (std::size_t k : order) {
    const double p = weights[k] / sw;
    const double prev_l = cum_l;
    cum_l += weights[k] * values[k] / sv;
    area += p * (prev_l + cum_l);
  }
  return 1.0 - area;
}

// Brute-force O(n^2) relative mean difference.
inline double pairwise_gini(const std::vector<double>& v, const std::vector<double>& w) {
  double sw = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sw += w[i];
    sv += w[i] * v[i];
  }
  const double mu = sv / sw;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      acc += w[i] * w[j] * std::fabs(v[i] - v[j]);
  return acc / (sw * sw) / (2.0 * mu);
}

struct DecompOracle {
  double total, between, within, overlap;
};

// Full-enumeration Pyatt decomposition: within from per-group pairwise
// Ginis, between from the group-mean-substituted pairwise Gini.
inline DecompOracle pyatt_decompose(const std::vector<double>& v, const std::vector<double>& w,
                                    const std::vector<int>& g, int k_count) {
  DecompOracle out{};
  out.total = pairwise_gini(v, w);
  double sw = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sw += w[i];
    sv += w[i] * v[i];
  }
  const double mu = sv / sw;
  std::vector<double> gw(static_cast<std::size_t>(k_count), 0.0);
  std::vector<double> gv(static_cast<std::size_t>(k_count), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    gw[static_cast<std::size_t>(g[i])] += w[i];
    gv[static_cast<std::size_t>(g[i])] += w[i] * v[i];
  }
  for (int k = 0; k < k_count; ++k) {
    const auto ki = static_cast<std::size_t>(k);
    std::vector<double> vv, ww;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (g[i] == k) {
        vv.push_back(v[i]);
        ww.push_back(w[i]);
      }
    const double mu_k = gv[ki] / gw[ki];
    const double p_k = gw[ki] / sw;
    const double s_k = p_k * mu_k / mu;
    if (mu_k > 0.0) out.within += p_k * s_k * pairwise_gini(vv, ww);
  }
  std::vector<double> mean_sub(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto ki = static_cast<std::size_t>(g[i]);
    mean_sub[i] = gv[ki] / gw[ki];
  }
  out.between = pairwise_gini(mean_sub, w);
  out.overlap = out.total - out.within - out.between;
  return out;
}

// Adaptive Simpson quadrature, for CDF oracles.
inline double simpson(const std::function<double(double)>& f, double a, double b, double eps,
                      int depth = 24) {
  const double c = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fc = f(c);
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fhi, double fmid, double acc,
          int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::fabs(left + right - acc) < 15.0 * eps)
      return left + right + (left + right - acc) / 15.0;
    return rec(lo, mid, flo, fmid, flm, left, d - 1) +
           rec(mid, hi, fmid, fhi, frm, right, d - 1);
  };
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
  return rec(a, b, fa, fb, fc, whole, depth);
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

inline double student_t_pdf(double x, double df) {
  const double c = std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) /
                   std::sqrt(df * M_PI);
  return c * std::pow(1.0 + x * x / df, -0.5 * (df + 1.0));
}

// CDF by quadrature from a far-left anchor.
inline double normal_cdf_quadrature(double x) {
  if (x < -12.0) return 0.0;
  return simpson([](double t) { return normal_pdf(t); }, -12.0, x, 1e-12);
}

inline double student_t_cdf_quadrature(double t, double df) {
  // integrate the symmetric tail to avoid the slowly decaying lower bound
  if (t == 0.0) return 0.5;
  const double a = std::fabs(t);
  const double half = simpson([df](double x) { return student_t_pdf(x, df); }, 0.0, a, 1e-12);
  return t > 0.0 ? 0.5 + half : 0.5 - half;
}

// Deterministic random weighted datasets for property tests.
struct RandomDataset {
  std::vector<double> values;
  std::vector<double> weights;
};

inline RandomDataset random_dataset(std::mt19937_64& rng, std::size_t n, bool with_zeros = true) {
  std::uniform_real_distribution<double> uw(0.1, 10.0);
  std::lognormal_distribution<double> lv(6.0, 1.2);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RandomDataset d;
  d.values.reserve(n);
  d.weights.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = lv(rng);
    if (with_zeros && u01(rng) < 0.05) v = 0.0;
    d.values.push_back(v);
    d.weights.push_back(uw(rng));
  }
  return d;
}

}  // namespace oracle
