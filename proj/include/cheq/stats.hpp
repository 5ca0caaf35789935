#pragma once

#include <span>
#include <vector>

namespace cheq::stats {

// Special functions. No external stats dependency: the incomplete beta and
// gamma are implemented with the standard series / continued-fraction
// evaluations (Lentz), accurate to ~1e-12 over the ranges used here.

double normal_cdf(double x);
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b).
double inc_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x).
double inc_gamma_lower(double a, double x);

double student_t_cdf(double t, double df);
double chi_square_cdf(double x, double df);

/// Two-sided z quantile for a CI level: 1.645 at 90%, 1.96 at 95%, 2.576 at
/// 99% (the reporting constants), inverse normal otherwise.
double z_quantile(double level);

/// Average ranks (1-based); ties share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> x);

struct CorrelationResult {
  double rho = 0.0;
  long n = 0;
  double t_stat = 0.0;
  double p_two_sided = 1.0;
};

/// Two-sided p for a Spearman rho via the t approximation with n-2 df.
double spearman_pvalue(double rho, long n);

/// Spearman rank correlation with average ranks for ties; p from the
/// t approximation. Throws ConstantInput when either side has no variation.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch two-sample t-test with Satterthwaite df.
TTestResult welch_t(std::span<const double> x, std::span<const double> y);

struct MeanCi {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Normal CI for the mean of a small vector of district-level values:
/// mean +/- z(level) * sd / sqrt(n), sd with n-1 denominator.
MeanCi across_district_ci(std::span<const double> values, double level);

double mean(std::span<const double> x);
/// Sample variance (n-1 denominator).
double sample_variance(std::span<const double> x);

}  // namespace cheq::stats
