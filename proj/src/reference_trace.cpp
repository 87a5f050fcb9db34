#include "sko/reference_trace.hpp"

#include "sko/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace sko::reference {

namespace {

struct Sides {
    std::vector<std::size_t> pos;  // i-th closest to 1/2 at position i - 1
    std::vector<std::size_t> neg;  // j-th closest to -1/2 at position j - 1
};

Sides order_sides(std::span<const double> q) {
    Sides s;
    for (std::size_t i = 0; i < q.size(); ++i) (q[i] > 0 ? s.pos : s.neg).push_back(i);
    std::stable_sort(s.pos.begin(), s.pos.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(q[a] - 0.5) < std::fabs(q[b] - 0.5);
    });
    std::stable_sort(s.neg.begin(), s.neg.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(q[a] + 0.5) < std::fabs(q[b] + 0.5);
    });
    return s;
}

double sgn(double x) { return x > 0 ? 1.0 : -1.0; }

}  // namespace

Trace run_literal(std::span<const double> q, double alpha, const Chooser& choose) {
    const std::size_t n = q.size();
    std::vector<double> qt(n);
    for (std::size_t i = 0; i < n; ++i) qt[i] = sgn(q[i]) - q[i];

    const Sides sides = order_sides(q);
    const std::size_t n_plus = sides.pos.size();
    const std::size_t n_minus = sides.neg.size();

    Trace trace;
    std::size_t k = 0;
    std::size_t i = n_plus > 0 ? 1 : 0;
    std::size_t j = n_minus > 0 ? 1 : 0;
    for (;;) {
        double upper = 1.0;
        double lower = -1.0;
        if (i > 0) upper = std::max(q[sides.pos[i - 1]], qt[sides.pos[i - 1]]);
        if (j > 0) lower = std::min(q[sides.neg[j - 1]], qt[sides.neg[j - 1]]);
        const auto in_region = [&](double x) { return (x >= -1.0 && x < lower) || (x > upper && x <= 1.0); };

        std::size_t num_q = 0;
        std::size_t num_qt = 0;
        for (std::size_t h = 0; h < n; ++h) {
            if (in_region(q[h])) ++num_q;
            if (in_region(qt[h])) ++num_qt;
        }
        const double fdr = (1.0 + static_cast<double>(num_qt)) /
                           static_cast<double>(num_q > 1 ? num_q : 1);
        trace.fdr_hat_trace.push_back(fdr);
        trace.lower = lower;
        trace.upper = upper;

        if (fdr <= alpha) {
            trace.stopped_by = StopReason::FdrThreshold;
            for (std::size_t h = 0; h < n; ++h)
                if (in_region(q[h])) trace.rejected.push_back(h);
            return trace;
        }
        if (i == n_plus && j == n_minus) {
            trace.stopped_by = StopReason::Exhaustion;
            return trace;
        }

        Side side;
        if (j == n_minus)
            side = Side::Positive;
        else if (i == n_plus)
            side = Side::Negative;
        else
            side = choose(k, i, j);
        if (side == Side::Positive)
            ++i;
        else
            ++j;
        ++k;
        trace.choices.push_back(side);
    }
}

Chooser alternate_chooser() {
    return [](std::size_t k, std::size_t, std::size_t) {
        return k % 2 == 0 ? Side::Positive : Side::Negative;
    };
}

Chooser nearest_chooser(std::span<const double> q) {
    std::vector<double> values(q.begin(), q.end());
    auto sides = std::make_shared<Sides>(order_sides(values));
    return [values = std::move(values), sides](std::size_t, std::size_t i, std::size_t j) {
        const double dp = std::fabs(values[sides->pos[i]] - 0.5);
        const double dn = std::fabs(values[sides->neg[j]] + 0.5);
        return dp <= dn ? Side::Positive : Side::Negative;
    };
}

Chooser strategy_chooser(const PairSet& pairs, SideStrategy& strategy) {
    return [&pairs, &strategy](std::size_t k, std::size_t i, std::size_t j) {
        ProcedureState state;
        state.k = k;
        state.i = i;
        state.j = j;
        return strategy.choose(masked_view(pairs, state));
    };
}

std::string compare(const Trace& expected, const ProcedureResult& actual) {
    std::ostringstream out;
    if (expected.stopped_by != actual.stopped_by)
        out << "stop reason differs; ";
    if (expected.rejected != actual.rejected) out << "rejection sets differ; ";
    if (expected.choices != actual.choices) out << "choice sequences differ; ";
    if (expected.fdr_hat_trace != actual.fdr_hat_trace) out << "fdr-hat traces differ; ";
    if (expected.lower != actual.region.lower || expected.upper != actual.region.upper)
        out << "final regions differ; ";
    return out.str();
}

SelfTestSummary self_test(std::size_t instances, std::size_t max_n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size_dist(1, max_n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> grid(-128, 128);

    SelfTestSummary summary;
    const char* strategies[] = {"alternate", "nearest", "lfdr"};
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t n = size_dist(rng);
        // Half the instances sit on a coarse grid so that distance ties occur.
        const bool on_grid = t % 2 == 1;
        std::vector<double> q(n);
        for (auto& v : q) {
            do {
                if (on_grid) {
                    v = grid(rng) / 128.0;
                } else {
                    // Signal-like values near +-1 mixed with uniform ones.
                    const double u = unit(rng);
                    const double mag = unit(rng) < 0.3 ? 1.0 - 0.05 * u : u;
                    v = unit(rng) < 0.5 ? -mag : mag;
                }
            } while (v == 0.0);
        }
        const double alpha = 0.05 + 0.9 * unit(rng);
        const std::string name = strategies[t % 3];

        const PairSet pairs(q);
        auto engine_strategy = make_strategy(name, {});
        const ProcedureResult actual = run(pairs, *engine_strategy, alpha);

        Chooser chooser;
        std::unique_ptr<SideStrategy> literal_strategy;
        if (name == "alternate") {
            chooser = alternate_chooser();
        } else if (name == "nearest") {
            chooser = nearest_chooser(q);
        } else {
            literal_strategy = make_strategy(name, {});
            chooser = strategy_chooser(pairs, *literal_strategy);
        }
        const Trace expected = run_literal(q, alpha, chooser);

        ++summary.instances;
        const std::string diff = compare(expected, actual);
        if (!diff.empty()) {
            ++summary.mismatches;
            if (summary.details.size() < 5) {
                std::ostringstream d;
                d << "instance " << t << " (" << name << ", n=" << n << ", alpha=" << alpha
                  << "): " << diff;
                summary.details.push_back(d.str());
            }
        }
    }
    return summary;
}

}  // namespace sko::reference
