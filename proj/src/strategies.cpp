#include "sko/strategies.hpp"

#include <algorithm>
#include <stdexcept>

namespace sko {

Side AlternateStrategy::choose(const MaskedView& view) {
    return view.step() % 2 == 0 ? Side::Positive : Side::Negative;
}

Side NearestStrategy::choose(const MaskedView& view) {
    const auto pos = view.next(Side::Positive);
    const auto neg = view.next(Side::Negative);
    if (!neg) return Side::Positive;
    if (!pos) return Side::Negative;
    return view.distance(*pos) <= view.distance(*neg) ? Side::Positive : Side::Negative;
}

std::size_t default_refit_interval(std::size_t n) { return std::max<std::size_t>(1, n / 50); }

LfdrStrategy::LfdrStrategy(LfdrOptions options) : options_(std::move(options)) {
    if (options_.init) options_.init->validate();
}

void LfdrStrategy::refit(const MaskedView& view) {
    const MixtureParams init = params_ ? *params_
                               : options_.init ? *options_.init
                                               : default_init(view);
    params_ = fit_em(view, init, options_.max_iter, options_.tol).params;
    ++fits_;
    const std::size_t interval =
        options_.refit_interval == 0 ? default_refit_interval(view.n()) : options_.refit_interval;
    const std::size_t accepted = view.accepted_positive() + view.accepted_negative();
    next_refit_ = interval > LfdrOptions::kFitOnce - accepted ? LfdrOptions::kFitOnce
                                                              : accepted + interval;
}

Side LfdrStrategy::choose(const MaskedView& view) {
    const auto pos = view.next(Side::Positive);
    const auto neg = view.next(Side::Negative);
    if (!neg) return Side::Positive;
    if (!pos) return Side::Negative;

    const std::size_t accepted = view.accepted_positive() + view.accepted_negative();
    if (!params_ || accepted >= next_refit_) refit(view);

    const auto [pu, pv] = view.candidates(*pos);
    const auto [nu, nv] = view.candidates(*neg);
    const double lfdr_pos = lfdr_pair(pu, pv, *params_);
    const double lfdr_neg = lfdr_pair(nu, nv, *params_);
    if (lfdr_pos != lfdr_neg) return lfdr_pos > lfdr_neg ? Side::Positive : Side::Negative;
    // Equal Lfdr. When pi0 has collapsed to 0 every Lfdr is 0; order by the
    // pi0 -> 0+ limit, where a lower pair density means a larger Lfdr.
    return pair_density(pu, pv, *params_) <= pair_density(nu, nv, *params_) ? Side::Positive
                                                                           : Side::Negative;
}

std::unique_ptr<SideStrategy> make_strategy(const std::string& name, LfdrOptions options) {
    if (name == "alternate") return std::make_unique<AlternateStrategy>();
    if (name == "nearest") return std::make_unique<NearestStrategy>();
    if (name == "lfdr") return std::make_unique<LfdrStrategy>(std::move(options));
    throw std::invalid_argument("unknown strategy: " + name);
}

}  // namespace sko
