// Two-group mixture on signed p-values and its EM fit on partially masked data.
//
// Null density 1/2 on (-1, 1); alternative density
//   f1(q) = lambda * Lbeta(q; shape_left) + (1 - lambda) * Rbeta(q; shape_right)
// where Lbeta is Beta(shape_left, 1) mapped to (-1, 1) through y = (q + 1)/2 and
// Rbeta is Beta(shape_right, 1) mapped through y = (1 - q)/2. With shapes <= 1
// the left component is decreasing and the right one increasing.

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace sko {

class MaskedView;

inline constexpr double kMinShape = 1e-4;

struct MixtureParams {
    double pi0 = 0.9;
    double lambda = 0.5;
    double shape_left = 0.3;
    double shape_right = 0.3;

    // Throws std::invalid_argument when a field leaves its range.
    void validate() const;
    bool operator==(const MixtureParams&) const = default;
};

// Throws std::invalid_argument for |q| >= 1, where f1 is unbounded.
double f1_density(double q, const MixtureParams& params);

// Density of the unordered pair {q, q~}: pi0 + (1 - pi0)(f1(q) + f1(q~)).
// A member at exactly +-1 is evaluated at the closest representable distance
// from the endpoint. Throws if {q, q_tilde} is not a knockoff pair.
double pair_density(double q, double q_tilde, const MixtureParams& params);

// pi0 / pair_density.
double lfdr_pair(double q, double q_tilde, const MixtureParams& params);

// Observations entering the masked likelihood: true signed p-values of
// accepted hypotheses and the two candidates of every masked pair.
struct MaskedData {
    std::vector<double> revealed;
    std::vector<std::pair<double, double>> masked;

    std::size_t size() const { return revealed.size() + masked.size(); }
};

MaskedData masked_data(const MaskedView& view);

double log_likelihood(const MaskedData& data, const MixtureParams& params);
double log_likelihood(const MaskedView& view, const MixtureParams& params);

struct EMReport {
    MixtureParams params;
    std::vector<double> loglik_trace;  // at the initial params, then after each iteration
    std::size_t iterations = 0;
    bool converged = false;
};

EMReport fit_em(const MaskedData& data, const MixtureParams& init, std::size_t max_iter,
                double tol);
EMReport fit_em(const MaskedView& view, const MixtureParams& init, std::size_t max_iter,
                double tol);

// Maximizer over a in [kMinShape, 1] of sum_i w_i log(a y_i^(a-1)), given
// W = sum w_i and S = sum w_i log y_i (S <= 0).
double beta_shape_mle(double weight_sum, double weighted_log_sum);

// pi0 = 0.9, shapes 0.3, lambda = share of negative pairs among pairs farther
// than 0.25 from +-1/2, kept inside [0.05, 0.95].
MixtureParams default_init(const MaskedView& view);

}  // namespace sko
