#include "sko/baselines.hpp"

#include "sko/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sko {

namespace {

std::vector<std::size_t> sorted_indices(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    return order;
}

}  // namespace

std::vector<std::size_t> bh(std::span<const double> p_values, double alpha) {
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bh: p-value outside [0, 1]");
    const std::size_t n = p_values.size();
    const auto order = sorted_indices(p_values);
    std::size_t k_star = 0;
    for (std::size_t k = n; k >= 1; --k) {
        if (p_values[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(n)) {
            k_star = k;
            break;
        }
    }
    std::vector<std::size_t> rejected(order.begin(), order.begin() + k_star);
    std::sort(rejected.begin(), rejected.end());
    return rejected;
}

void OracleTruth::validate() const {
    if (p1 < 0.0 || p2 < 0.0 || p1 + p2 > 1.0)
        throw std::invalid_argument("oracle truth: proportions must be >= 0 and sum to <= 1");
    if (!(mu1 < 0.0 && mu2 > 0.0)) throw std::invalid_argument("oracle truth: need mu1 < 0 < mu2");
}

double oracle_lfdr(double z, const OracleTruth& truth) {
    const double pi0 = 1.0 - truth.p1 - truth.p2;
    const double null = pi0 * normal_pdf(z);
    const double alt = truth.p1 * normal_pdf(z - truth.mu1) + truth.p2 * normal_pdf(z - truth.mu2);
    const double total = null + alt;
    // Far in the tails every density underflows; the alternatives dominate there.
    if (total == 0.0) return pi0 == 1.0 ? 1.0 : 0.0;
    return null / total;
}

std::vector<std::size_t> lfdr_threshold(std::span<const double> lfdr, double alpha) {
    const auto order = sorted_indices(lfdr);
    std::size_t best = 0;
    double running = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        running += lfdr[order[k]];
        if (running <= alpha * static_cast<double>(k + 1)) best = k + 1;
    }
    std::vector<std::size_t> rejected(order.begin(), order.begin() + best);
    std::sort(rejected.begin(), rejected.end());
    return rejected;
}

std::vector<std::size_t> oracle_procedure(std::span<const double> z_values,
                                          const OracleTruth& truth, double alpha) {
    truth.validate();
    std::vector<double> lfdr(z_values.size());
    std::transform(z_values.begin(), z_values.end(), lfdr.begin(),
                   [&](double z) { return oracle_lfdr(z, truth); });
    return lfdr_threshold(lfdr, alpha);
}

}  // namespace sko
