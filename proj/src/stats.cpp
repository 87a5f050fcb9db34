#include "sko/stats.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sko {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// Upper tail P(T > t) for t >= 0, via I_x(df/2, 1/2) with x = df/(df + t^2).
double t_upper_tail(double t, double df) {
    const double t2 = t * t;
    if (!std::isfinite(t2)) return 0.0;
    const double x = df / (df + t2);
    return 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
}

}  // namespace

TestStatistic::TestStatistic(double v, std::optional<double> d) : value(v), df(d) {
    require(std::isfinite(v), "test statistic must be finite");
    if (df) require(*df > 0.0 && std::isfinite(*df), "degrees of freedom must be positive");
}

double regularized_incomplete_beta(double x, double a, double b) {
    require(x >= 0.0 && x <= 1.0, "incomplete beta: x outside [0, 1]");
    require(a > 0.0 && std::isfinite(a), "incomplete beta: a must be positive");
    require(b > 0.0 && std::isfinite(b), "incomplete beta: b must be positive");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    return boost::math::ibeta(a, b, x);
}

double t_cdf(double t, double df) {
    require(df > 0.0, "t_cdf: df must be positive");
    require(!std::isnan(t), "t_cdf: t is NaN");
    if (t == 0.0) return 0.5;
    const double tail = t_upper_tail(std::fabs(t), df);
    return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
    require(df > 0.0, "t_quantile: df must be positive");
    require(p > 0.0 && p < 1.0, "t_quantile: p outside (0, 1)");
    if (p == 0.5) return 0.0;
    // P(T > t) = tail  <=>  I_x(df/2, 1/2) = 2 tail with x = df/(df + t^2).
    const double tail = p < 0.5 ? p : 1.0 - p;
    const double x = boost::math::ibeta_inv(0.5 * df, 0.5, 2.0 * tail);
    const double t = std::sqrt(df * (1.0 - x) / x);
    return p < 0.5 ? -t : t;
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile: p outside (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double two_sided_p(const TestStatistic& stat) {
    const double a = std::fabs(stat.value);
    if (stat.df) return 2.0 * t_upper_tail(a, *stat.df);
    return std::erfc(a / std::numbers::sqrt2);
}

SignedPValue signed_p(int sign, double p) {
    require(p >= 0.0 && p <= 1.0, "signed_p: p outside [0, 1]");
    require(sign == 1 || sign == -1, "signed_p: sign must be +1 or -1");
    return {sign * (1.0 - p)};
}

SignedPValue signed_p(const TestStatistic& stat, double p, bool* zero_sign_flag) {
    if (zero_sign_flag) *zero_sign_flag = stat.value == 0.0;
    return signed_p(stat.value < 0.0 ? -1 : 1, p);
}

SignedPValue resolve_zero(SignedPValue q) {
    if (q.q != 0.0) return q;
    return {std::copysign(std::numeric_limits<double>::denorm_min(), q.q)};
}

SignedPValue knockoff(SignedPValue q) {
    require(q.q != 0.0, "knockoff undefined for a signed p-value of zero");
    require(std::fabs(q.q) <= 1.0, "signed p-value outside [-1, 1]");
    const double s = q.q > 0.0 ? 1.0 : -1.0;
    return {s - q.q};
}

double statistic_for_signed_p(double q, std::optional<double> df) {
    require(std::fabs(q) <= 1.0, "signed p-value outside [-1, 1]");
    if (q == 0.0) return 0.0;
    const double a = std::fabs(q);
    if (a == 1.0) return q > 0 ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
    const double p = 1.0 - a;
    // |t| = F^{-1}(1 - p/2), evaluated on the lower tail.
    const double mag = df ? -t_quantile(0.5 * p, *df) : -normal_quantile(0.5 * p);
    return q > 0 ? mag : -mag;
}

}  // namespace sko
