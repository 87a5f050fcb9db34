#include "sko/procedure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sko {

PairSet::PairSet(std::span<const double> q_values) {
    if (q_values.empty()) throw std::invalid_argument("build_pairs: no signed p-values");
    const std::size_t n = q_values.size();
    pairs_.reserve(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        const double q = q_values[idx];
        if (!std::isfinite(q) || std::fabs(q) > 1.0)
            throw std::invalid_argument("build_pairs: signed p-value " + std::to_string(idx) +
                                        " outside [-1, 1]");
        if (q == 0.0)
            throw std::invalid_argument("build_pairs: signed p-value " + std::to_string(idx) +
                                        " is zero");
        SignedPair p;
        p.index = idx;
        p.q = q;
        p.sign = q > 0.0 ? 1 : -1;
        p.knockoff = p.sign - q;
        p.b = std::fabs(q) >= 0.5;
        // The outer member lies in [1/2, 1] in magnitude, so this subtraction is exact.
        p.distance = std::max(std::fabs(q), std::fabs(p.knockoff)) - 0.5;
        pairs_.push_back(p);
    }

    for (std::size_t idx = 0; idx < n; ++idx)
        (pairs_[idx].sign > 0 ? pos_order_ : neg_order_).push_back(idx);
    const auto by_distance = [this](std::size_t a, std::size_t b) {
        return pairs_[a].distance < pairs_[b].distance;
    };
    std::stable_sort(pos_order_.begin(), pos_order_.end(), by_distance);
    std::stable_sort(neg_order_.begin(), neg_order_.end(), by_distance);

    rank_.resize(n);
    for (std::size_t r = 0; r < pos_order_.size(); ++r) rank_[pos_order_[r]] = r;
    for (std::size_t r = 0; r < neg_order_.size(); ++r) rank_[neg_order_[r]] = r;

    const auto index_side = [this](const std::vector<std::size_t>& order, SideIndex& s) {
        const std::size_t m = order.size();
        s.distance.resize(m);
        s.outer_q.assign(m + 1, 0);
        for (std::size_t r = 0; r < m; ++r) s.distance[r] = pairs_[order[r]].distance;
        for (std::size_t r = m; r-- > 0;)
            s.outer_q[r] = s.outer_q[r + 1] + (pairs_[order[r]].b ? 1 : 0);
    };
    index_side(pos_order_, pos_index_);
    index_side(neg_order_, neg_index_);
}

std::pair<std::size_t, std::size_t> PairSet::side_counts(const SideIndex& s,
                                                         std::size_t accepted) const {
    const std::size_t m = s.distance.size();
    if (m == 0) return {0, 0};
    // A pair's outer member is in the region iff its distance strictly exceeds
    // the distance of the last accepted pair (0 when nothing is accepted).
    const double threshold = accepted == 0 ? 0.0 : s.distance[accepted - 1];
    const auto first = static_cast<std::size_t>(
        std::upper_bound(s.distance.begin(), s.distance.end(), threshold) - s.distance.begin());
    const std::size_t in_q = s.outer_q[first];
    return {in_q, (m - first) - in_q};
}

std::pair<std::size_t, std::size_t> PairSet::region_counts(std::size_t i, std::size_t j) const {
    const auto [pq, pk] = side_counts(pos_index_, i);
    const auto [nq, nk] = side_counts(neg_index_, j);
    return {pq + nq, pk + nk};
}

PairSet build_pairs(std::span<const double> q_values) { return PairSet(q_values); }

RejectionRegion region_for(const PairSet& pairs, std::size_t i, std::size_t j) {
    if (i > pairs.n_plus() || j > pairs.n_minus())
        throw std::invalid_argument("region_for: accepted count exceeds side size");
    RejectionRegion r;
    if (i > 0)
        r.upper = pairs[pairs.pos_order()[i - 1]].high();
    else if (pairs.n_plus() > 0)
        r.upper = 0.5;
    if (j > 0)
        r.lower = pairs[pairs.neg_order()[j - 1]].low();
    else if (pairs.n_minus() > 0)
        r.lower = -0.5;
    return r;
}

double fdr_hat(const PairSet& pairs, const RejectionRegion& region) {
    std::size_t in_q = 0;
    std::size_t in_knockoff = 0;
    for (const auto& p : pairs.pairs()) {
        if (region.contains(p.q)) ++in_q;
        if (region.contains(p.knockoff)) ++in_knockoff;
    }
    return (1.0 + static_cast<double>(in_knockoff)) /
           static_cast<double>(std::max<std::size_t>(in_q, 1));
}

std::vector<std::size_t> ProcedureState::accepted(const PairSet& pairs) const {
    std::vector<std::size_t> out(pairs.pos_order().begin(), pairs.pos_order().begin() + i);
    out.insert(out.end(), pairs.neg_order().begin(), pairs.neg_order().begin() + j);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> ProcedureState::unaccepted(const PairSet& pairs) const {
    std::vector<std::size_t> out(pairs.pos_order().begin() + i, pairs.pos_order().end());
    out.insert(out.end(), pairs.neg_order().begin() + j, pairs.neg_order().end());
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

std::size_t MaskedView::n() const { return pairs_->n(); }
std::size_t MaskedView::n_plus() const { return pairs_->n_plus(); }
std::size_t MaskedView::n_minus() const { return pairs_->n_minus(); }

int MaskedView::sign(std::size_t idx) const { return pairs_->pairs().at(idx).sign; }
double MaskedView::min_value(std::size_t idx) const { return pairs_->pairs().at(idx).low(); }

std::pair<double, double> MaskedView::candidates(std::size_t idx) const {
    const auto& p = pairs_->pairs().at(idx);
    return {p.low(), p.high()};
}

double MaskedView::distance(std::size_t idx) const { return pairs_->pairs().at(idx).distance; }

bool MaskedView::revealed(std::size_t idx) const {
    const auto& p = pairs_->pairs().at(idx);
    return pairs_->rank(idx) < (p.sign > 0 ? i_ : j_);
}

bool MaskedView::b(std::size_t idx) const {
    if (!revealed(idx)) throw std::logic_error("masked pair: identity not revealed");
    return (*pairs_)[idx].b;
}

double MaskedView::value(std::size_t idx) const {
    if (!revealed(idx)) throw std::logic_error("masked pair: identity not revealed");
    return (*pairs_)[idx].q;
}

std::size_t MaskedView::at(Side side, std::size_t position) const {
    return pairs_->order(side).at(position);
}

std::optional<std::size_t> MaskedView::next(Side side) const {
    const auto& order = pairs_->order(side);
    const std::size_t accepted = side == Side::Positive ? i_ : j_;
    if (accepted >= order.size()) return std::nullopt;
    return order[accepted];
}

MaskedView masked_view(const PairSet& pairs, const ProcedureState& state) {
    if (state.i > pairs.n_plus() || state.j > pairs.n_minus())
        throw std::invalid_argument("masked_view: state inconsistent with pairs");
    return MaskedView(pairs, state.i, state.j, state.k);
}

// ---------------------------------------------------------------------------

ProcedureResult run(const PairSet& pairs, SideStrategy& strategy, double alpha,
                    const StepObserver& observer) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("run: alpha outside (0, 1)");

    const std::size_t n_plus = pairs.n_plus();
    const std::size_t n_minus = pairs.n_minus();

    ProcedureResult result;
    ProcedureState state;
    state.i = std::min<std::size_t>(1, n_plus);
    state.j = std::min<std::size_t>(1, n_minus);

    for (;;) {
        state.region = region_for(pairs, state.i, state.j);
        const auto [in_q, in_knockoff] = pairs.region_counts(state.i, state.j);
        const double fdr = (1.0 + static_cast<double>(in_knockoff)) /
                           static_cast<double>(std::max<std::size_t>(in_q, 1));
        state.fdr_hat_trace.push_back(fdr);
        if (observer) observer(pairs, state);

        if (fdr <= alpha) {
            result.stopped_by = StopReason::FdrThreshold;
            break;
        }
        if (state.i == n_plus && state.j == n_minus) {
            result.stopped_by = StopReason::Exhaustion;
            break;
        }

        Side side;
        if (state.j == n_minus)
            side = Side::Positive;
        else if (state.i == n_plus)
            side = Side::Negative;
        else
            side = strategy.choose(masked_view(pairs, state));

        (side == Side::Positive ? state.i : state.j) += 1;
        ++state.k;
        result.choices.push_back(side);
    }

    result.region = state.region;
    result.fdr_hat_trace = std::move(state.fdr_hat_trace);
    result.accepted_positive = state.i;
    result.accepted_negative = state.j;
    if (result.stopped_by == StopReason::FdrThreshold) {
        for (const auto& p : pairs.pairs()) {
            if (!state.region.contains(p.q)) continue;
            result.rejected.push_back(p.index);
            ++(p.sign > 0 ? result.rejected_positive : result.rejected_negative);
        }
    }
    return result;
}

std::string to_string(Side s) { return s == Side::Positive ? "positive" : "negative"; }

std::string to_string(StopReason r) {
    return r == StopReason::FdrThreshold ? "fdr_threshold" : "exhaustion";
}

}  // namespace sko
