// Special functions, p-values, signed p-values and knockoffs.

#pragma once

#include <optional>

namespace sko {

// A test statistic with its reference distribution. An absent df means the
// statistic is referred to the standard normal.
struct TestStatistic {
    double value = 0.0;
    std::optional<double> df;

    TestStatistic() = default;
    explicit TestStatistic(double v, std::optional<double> d = std::nullopt);
};

// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double x, double a, double b);

// Central Student t CDF.
double t_cdf(double t, double df);

// Inverse of t_cdf in its first argument; p in (0, 1).
double t_quantile(double p, double df);

double normal_cdf(double z);
double normal_quantile(double p);

double normal_pdf(double z);

// Two-sided p-value 2{1 - F(|t|)}, computed from the lower tail so that small
// p-values keep their relative precision.
double two_sided_p(const TestStatistic& stat);

// Signed p-value sign(t)(1 - p). A statistic of exactly zero is assigned the
// positive sign; `zero_sign_flag`, when given, is set to true in that case.
struct SignedPValue {
    double q = 0.0;
};

SignedPValue signed_p(const TestStatistic& stat, double p, bool* zero_sign_flag = nullptr);
SignedPValue signed_p(int sign, double p);

// A signed p-value of zero (p == 1) has no knockoff. This replaces it by the
// smallest subnormal carrying the same sign bit, so that its pair becomes
// {0+, 1} or {0-, -1}. Nonzero values pass through.
SignedPValue resolve_zero(SignedPValue q);

// Knockoff sign(q) - q. Throws std::invalid_argument for q == 0 or |q| > 1.
SignedPValue knockoff(SignedPValue q);

// Inverse of the signed p-value map for a given reference distribution:
// returns the statistic whose signed p-value is q. |q| == 1 maps to +-inf.
double statistic_for_signed_p(double q, std::optional<double> df);

}  // namespace sko
