// The signed-knockoff stepwise procedure.
//
// Every hypothesis contributes the unordered pair {q, q~} with q~ = sign(q) - q.
// Pairs are ranked per sign by their distance to +-1/2, and the rejection region
// [-1, L) U (U, 1] shrinks towards the endpoints by accepting one pair per step.
// The side to shrink is chosen by a SideStrategy that only sees a MaskedView.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sko {

enum class Side { Positive, Negative };

struct SignedPair {
    std::size_t index = 0;
    double q = 0.0;
    double knockoff = 0.0;
    int sign = 1;
    // I(|q| > 1/2); a pair with |q| == 1/2 gets b = 1.
    bool b = true;
    // Distance of both members to sign/2.
    double distance = 0.0;

    double low() const { return q < knockoff ? q : knockoff; }
    double high() const { return q < knockoff ? knockoff : q; }
    // The member farther from zero, i.e. the one that can fall in a rejection region.
    double outer() const { return sign > 0 ? high() : low(); }
};

class PairSet {
public:
    // Throws std::invalid_argument on empty input, q == 0 or |q| > 1.
    explicit PairSet(std::span<const double> q_values);

    std::size_t n() const { return pairs_.size(); }
    std::size_t n_plus() const { return pos_order_.size(); }
    std::size_t n_minus() const { return neg_order_.size(); }

    const std::vector<SignedPair>& pairs() const { return pairs_; }
    const SignedPair& operator[](std::size_t idx) const { return pairs_[idx]; }

    // Hypothesis indices ordered by distance to +1/2 (resp. -1/2), ties by index.
    const std::vector<std::size_t>& pos_order() const { return pos_order_; }
    const std::vector<std::size_t>& neg_order() const { return neg_order_; }
    const std::vector<std::size_t>& order(Side s) const {
        return s == Side::Positive ? pos_order_ : neg_order_;
    }

    // Position of a hypothesis within its side's ordering.
    std::size_t rank(std::size_t idx) const { return rank_[idx]; }

    // Counts (#q in R, #q~ in R) for the region left after accepting i positive
    // and j negative pairs. O(log n).
    std::pair<std::size_t, std::size_t> region_counts(std::size_t i, std::size_t j) const;

private:
    struct SideIndex {
        std::vector<double> distance;      // sorted ascending
        std::vector<std::size_t> outer_q;  // suffix counts of b
    };

    std::pair<std::size_t, std::size_t> side_counts(const SideIndex& s, std::size_t accepted) const;

    std::vector<SignedPair> pairs_;
    std::vector<std::size_t> pos_order_;
    std::vector<std::size_t> neg_order_;
    std::vector<std::size_t> rank_;
    SideIndex pos_index_;
    SideIndex neg_index_;
};

PairSet build_pairs(std::span<const double> q_values);

// Region [-1, lower) U (upper, 1]. An empty side has lower == -1 / upper == 1.
struct RejectionRegion {
    double lower = -1.0;
    double upper = 1.0;

    bool contains(double x) const { return x < lower || x > upper; }
    bool operator==(const RejectionRegion&) const = default;
};

// Region after accepting the i closest positive and j closest negative pairs.
// With i == 0 the positive side is (1/2, 1] when positive pairs exist and empty
// otherwise; likewise for j. Throws if i > n_plus or j > n_minus.
RejectionRegion region_for(const PairSet& pairs, std::size_t i, std::size_t j);

// (1 + #{q~ in R}) / max(#{q in R}, 1), by direct scan.
double fdr_hat(const PairSet& pairs, const RejectionRegion& region);

struct ProcedureState {
    std::size_t k = 0;
    std::size_t i = 0;  // accepted positive pairs
    std::size_t j = 0;  // accepted negative pairs
    RejectionRegion region;
    std::vector<double> fdr_hat_trace;

    std::vector<std::size_t> accepted(const PairSet& pairs) const;
    std::vector<std::size_t> unaccepted(const PairSet& pairs) const;
};

// The information available to a side-selection rule after k steps: the
// location of every unordered pair, plus which member is the true signed
// p-value for accepted pairs only. Accessing hidden information throws
// std::logic_error.
class MaskedView {
public:
    std::size_t n() const;
    std::size_t n_plus() const;
    std::size_t n_minus() const;
    std::size_t step() const { return k_; }
    std::size_t accepted_positive() const { return i_; }
    std::size_t accepted_negative() const { return j_; }

    int sign(std::size_t idx) const;
    double min_value(std::size_t idx) const;
    // Both members of the unordered pair, ascending.
    std::pair<double, double> candidates(std::size_t idx) const;
    double distance(std::size_t idx) const;

    bool revealed(std::size_t idx) const;
    bool b(std::size_t idx) const;
    double value(std::size_t idx) const;

    // Hypothesis at a given position of a side's ordering.
    std::size_t at(Side side, std::size_t position) const;
    // Next pair to be accepted on a side, if that side is not exhausted.
    std::optional<std::size_t> next(Side side) const;

private:
    friend MaskedView masked_view(const PairSet&, const ProcedureState&);
    MaskedView(const PairSet& pairs, std::size_t i, std::size_t j, std::size_t k)
        : pairs_(&pairs), i_(i), j_(j), k_(k) {}

    const PairSet* pairs_;
    std::size_t i_;
    std::size_t j_;
    std::size_t k_;
};

MaskedView masked_view(const PairSet& pairs, const ProcedureState& state);

class SideStrategy {
public:
    virtual ~SideStrategy() = default;
    virtual Side choose(const MaskedView& view) = 0;
    virtual std::string name() const = 0;
};

enum class StopReason { FdrThreshold, Exhaustion };

struct ProcedureResult {
    std::vector<std::size_t> rejected;  // ascending hypothesis indices
    RejectionRegion region;
    StopReason stopped_by = StopReason::Exhaustion;
    std::vector<double> fdr_hat_trace;
    std::vector<Side> choices;  // side shrunk at each step, forced or chosen
    std::size_t accepted_positive = 0;
    std::size_t accepted_negative = 0;
    std::size_t rejected_positive = 0;
    std::size_t rejected_negative = 0;

    bool operator==(const ProcedureResult&) const = default;
};

// Called with the state at every k, before the stopping check.
using StepObserver = std::function<void(const PairSet&, const ProcedureState&)>;

ProcedureResult run(const PairSet& pairs, SideStrategy& strategy, double alpha,
                    const StepObserver& observer = {});

std::string to_string(Side s);
std::string to_string(StopReason r);

}  // namespace sko
