#include "sko/mixture_em.hpp"

#include "sko/procedure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sko {

namespace {

// Half the spacing of doubles just below 1: the smallest nonzero distance to
// an endpoint that a signed p-value can carry.
constexpr double kEndpointFloor = 0x1p-54;

// log((1 + q)/2) and log((1 - q)/2), floored away from the endpoints.
struct LogTerms {
    double left;
    double right;

    explicit LogTerms(double q)
        : left(std::log(std::max(0.5 * (1.0 + q), kEndpointFloor))),
          right(std::log(std::max(0.5 * (1.0 - q), kEndpointFloor))) {}
};

double left_density(const LogTerms& t, double shape) {
    return 0.5 * shape * std::exp((shape - 1.0) * t.left);
}

double right_density(const LogTerms& t, double shape) {
    return 0.5 * shape * std::exp((shape - 1.0) * t.right);
}

double f1_terms(const LogTerms& t, const MixtureParams& p) {
    return p.lambda * left_density(t, p.shape_left) +
           (1.0 - p.lambda) * right_density(t, p.shape_right);
}

void check_pair(double q, double q_tilde) {
    const bool in_range = std::fabs(q) <= 1.0 && std::fabs(q_tilde) <= 1.0;
    const double outer = std::fabs(q) >= std::fabs(q_tilde) ? q : q_tilde;
    const double s = outer > 0.0 ? 1.0 : -1.0;
    if (!in_range || outer == 0.0 || std::fabs(q + q_tilde - s) > 1e-12)
        throw std::invalid_argument("not a knockoff pair: {" + std::to_string(q) + ", " +
                                    std::to_string(q_tilde) + "}");
}

struct PreparedData {
    std::vector<LogTerms> revealed;
    std::vector<std::array<LogTerms, 2>> masked;
};

PreparedData prepare(const MaskedData& data) {
    PreparedData out;
    out.revealed.reserve(data.revealed.size());
    for (double x : data.revealed) out.revealed.emplace_back(x);
    out.masked.reserve(data.masked.size());
    for (const auto& [u, v] : data.masked) out.masked.push_back({LogTerms(u), LogTerms(v)});
    return out;
}

double log_likelihood(const PreparedData& data, const MixtureParams& p) {
    double ll = 0.0;
    for (const auto& t : data.revealed) ll += std::log(0.5 * p.pi0 + (1.0 - p.pi0) * f1_terms(t, p));
    for (const auto& [u, v] : data.masked)
        ll += std::log(p.pi0 + (1.0 - p.pi0) * (f1_terms(u, p) + f1_terms(v, p)));
    return ll;
}

struct Sufficient {
    double null = 0.0;
    double left = 0.0;
    double right = 0.0;
    double left_log = 0.0;   // sum of w * log((1 + x)/2) over left responsibilities
    double right_log = 0.0;  // sum of w * log((1 - x)/2) over right responsibilities
};

void accumulate_alternative(Sufficient& s, const LogTerms& t, double w_left, double w_right) {
    s.left += w_left;
    s.left_log += w_left * t.left;
    s.right += w_right;
    s.right_log += w_right * t.right;
}

Sufficient e_step(const PreparedData& data, const MixtureParams& p) {
    Sufficient s;
    const double alt = 1.0 - p.pi0;
    for (const auto& t : data.revealed) {
        const double c_null = 0.5 * p.pi0;
        const double c_left = alt * p.lambda * left_density(t, p.shape_left);
        const double c_right = alt * (1.0 - p.lambda) * right_density(t, p.shape_right);
        const double total = c_null + c_left + c_right;
        s.null += c_null / total;
        accumulate_alternative(s, t, c_left / total, c_right / total);
    }
    for (const auto& pair : data.masked) {
        std::array<double, 2> c_left{};
        std::array<double, 2> c_right{};
        double total = p.pi0;
        for (int m = 0; m < 2; ++m) {
            c_left[m] = alt * p.lambda * left_density(pair[m], p.shape_left);
            c_right[m] = alt * (1.0 - p.lambda) * right_density(pair[m], p.shape_right);
            total += c_left[m] + c_right[m];
        }
        s.null += p.pi0 / total;
        for (int m = 0; m < 2; ++m)
            accumulate_alternative(s, pair[m], c_left[m] / total, c_right[m] / total);
    }
    return s;
}

MixtureParams m_step(const Sufficient& s, std::size_t n, const MixtureParams& prev) {
    MixtureParams next = prev;
    next.pi0 = std::clamp(s.null / static_cast<double>(n), 0.0, 1.0);
    const double alt = s.left + s.right;
    if (alt > 0.0) next.lambda = std::clamp(s.left / alt, 0.0, 1.0);
    if (s.left > 0.0) next.shape_left = beta_shape_mle(s.left, s.left_log);
    if (s.right > 0.0) next.shape_right = beta_shape_mle(s.right, s.right_log);
    return next;
}

}  // namespace

void MixtureParams::validate() const {
    const auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(pi0, 0.0, 1.0)) throw std::invalid_argument("pi0 outside [0, 1]");
    if (!in(lambda, 0.0, 1.0)) throw std::invalid_argument("lambda outside [0, 1]");
    if (!(shape_left > 0.0 && shape_left <= 1.0))
        throw std::invalid_argument("left shape outside (0, 1]");
    if (!(shape_right > 0.0 && shape_right <= 1.0))
        throw std::invalid_argument("right shape outside (0, 1]");
}

double f1_density(double q, const MixtureParams& params) {
    if (!(std::fabs(q) < 1.0)) throw std::invalid_argument("f1_density: |q| must be < 1");
    return f1_terms(LogTerms(q), params);
}

double pair_density(double q, double q_tilde, const MixtureParams& params) {
    check_pair(q, q_tilde);
    return params.pi0 +
           (1.0 - params.pi0) * (f1_terms(LogTerms(q), params) + f1_terms(LogTerms(q_tilde), params));
}

double lfdr_pair(double q, double q_tilde, const MixtureParams& params) {
    return params.pi0 / pair_density(q, q_tilde, params);
}

MaskedData masked_data(const MaskedView& view) {
    MaskedData data;
    const std::size_t n = view.n();
    data.revealed.reserve(view.accepted_positive() + view.accepted_negative());
    data.masked.reserve(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        if (view.revealed(idx))
            data.revealed.push_back(view.value(idx));
        else
            data.masked.push_back(view.candidates(idx));
    }
    return data;
}

double log_likelihood(const MaskedData& data, const MixtureParams& params) {
    return log_likelihood(prepare(data), params);
}

double log_likelihood(const MaskedView& view, const MixtureParams& params) {
    return log_likelihood(masked_data(view), params);
}

double beta_shape_mle(double weight_sum, double weighted_log_sum) {
    if (weight_sum <= 0.0) throw std::invalid_argument("beta_shape_mle: no weight");
    // d/da [W log a + (a - 1) S] = W/a + S vanishes at a = -W/S; the objective
    // is concave, so clamping gives the constrained maximizer.
    if (weighted_log_sum >= 0.0) return 1.0;
    return std::clamp(-weight_sum / weighted_log_sum, kMinShape, 1.0);
}

EMReport fit_em(const MaskedData& data, const MixtureParams& init, std::size_t max_iter,
                double tol) {
    if (data.size() == 0) throw std::invalid_argument("fit_em: no observations");
    init.validate();
    const PreparedData prepared = prepare(data);
    const std::size_t n = data.size();

    EMReport report;
    report.params = init;
    double ll = log_likelihood(prepared, init);
    if (!std::isfinite(ll))
        throw std::runtime_error("fit_em: non-finite log-likelihood at initial params (pi0=" +
                                 std::to_string(init.pi0) + ")");
    report.loglik_trace.push_back(ll);

    while (report.iterations < max_iter) {
        const MixtureParams next = m_step(e_step(prepared, report.params), n, report.params);
        const double next_ll = log_likelihood(prepared, next);
        if (!std::isfinite(next_ll))
            throw std::runtime_error("fit_em: non-finite log-likelihood after iteration " +
                                     std::to_string(report.iterations + 1));
        report.params = next;
        report.loglik_trace.push_back(next_ll);
        ++report.iterations;
        const double delta = next_ll - ll;
        ll = next_ll;
        if (std::fabs(delta) < tol) {
            report.converged = true;
            break;
        }
    }
    return report;
}

EMReport fit_em(const MaskedView& view, const MixtureParams& init, std::size_t max_iter,
                double tol) {
    return fit_em(masked_data(view), init, max_iter, tol);
}

MixtureParams default_init(const MaskedView& view) {
    MixtureParams p;
    std::size_t far = 0;
    std::size_t far_negative = 0;
    for (std::size_t idx = 0; idx < view.n(); ++idx) {
        if (view.distance(idx) <= 0.25) continue;
        ++far;
        if (view.sign(idx) < 0) ++far_negative;
    }
    if (far > 0) p.lambda = static_cast<double>(far_negative) / static_cast<double>(far);
    p.lambda = std::clamp(p.lambda, 0.05, 0.95);
    return p;
}

}  // namespace sko
