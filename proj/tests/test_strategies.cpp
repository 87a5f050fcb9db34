#include "sko/strategies.hpp"

#include "sko/procedure.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <stdexcept>
#include <vector>

using namespace sko;

namespace {

ProcedureState state_at(std::size_t k, std::size_t i, std::size_t j) {
    ProcedureState st;
    st.k = k;
    st.i = i;
    st.j = j;
    return st;
}

// Negatives carry the signal; positives are uniform nulls.
std::vector<double> negative_signal(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> q(n);
    for (auto& v : q) {
        if (u(rng) < 0.3) {
            v = -1 + 1e-4 * u(rng) - 1e-12;
        } else {
            do v = 2 * u(rng) - 1; while (v == 0.0);
        }
    }
    return q;
}

}  // namespace

TEST(Alternate, StartsPositiveThenAlternates) {
    const std::vector<double> q{0.7, 0.9, -0.6, -0.8};
    const PairSet pairs(q);
    AlternateStrategy s;
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(0, 0, 0))), Side::Positive);
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(1, 1, 0))), Side::Negative);
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(2, 1, 1))), Side::Positive);
    EXPECT_EQ(s.name(), "alternate");
}

TEST(Alternate, ChoiceSequenceInProcedure) {
    const std::vector<double> q{0.6, 0.7, 0.8, 0.9, -0.6, -0.7, -0.8, -0.9};
    const PairSet pairs(q);
    AlternateStrategy s;
    const ProcedureResult r = run(pairs, s, 0.01);
    ASSERT_GE(r.choices.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_EQ(r.choices[k], k % 2 == 0 ? Side::Positive : Side::Negative);
}

TEST(Nearest, Examples) {
    // Next positive pair: 0.6 (distance 0.1). Next negative: -0.52 (distance 0.02).
    const std::vector<double> q{0.6, 0.95, -0.7, -0.52};
    const PairSet pairs(q);
    NearestStrategy s;
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(0, 0, 0))), Side::Negative);
    // After accepting -0.52 the next negative is -0.7 (distance 0.2).
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(1, 0, 1))), Side::Positive);
    // Exhausted negative side.
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(2, 0, 2))), Side::Positive);
    // Equal distances go positive.
    const std::vector<double> tie{0.75, -0.75};
    const PairSet tied(tie);
    EXPECT_EQ(s.choose(masked_view(tied, state_at(0, 0, 0))), Side::Positive);
}

TEST(Lfdr, SymmetricPairsGoPositive) {
    const std::vector<double> q{0.8, -0.8, 0.95, -0.95, 0.3, -0.3};
    const PairSet pairs(q);
    LfdrOptions opt;
    opt.init = MixtureParams{0.7, 0.5, 0.4, 0.4};
    opt.max_iter = 0;
    LfdrStrategy s(opt);
    EXPECT_EQ(s.choose(masked_view(pairs, state_at(0, 0, 0))), Side::Positive);
}

TEST(Lfdr, AcceptsNullSideFirst) {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 5; ++rep) {
        const std::vector<double> q = negative_signal(rng, 400);
        const PairSet pairs(q);
        LfdrStrategy s;
        const ProcedureResult r = run(pairs, s, 0.1);
        ASSERT_GE(r.choices.size(), 20u);
        const auto pos = std::count(r.choices.begin(), r.choices.begin() + 20, Side::Positive);
        EXPECT_GE(pos, 18) << "rep " << rep;
        EXPECT_GT(r.rejected_negative, r.rejected_positive);
    }
}

TEST(Lfdr, RefitSchedules) {
    std::mt19937_64 rng(22);
    const std::vector<double> q = negative_signal(rng, 300);
    const PairSet pairs(q);

    LfdrOptions once;
    once.refit_interval = LfdrOptions::kFitOnce;
    LfdrStrategy s_once(once);
    const ProcedureResult r_once = run(pairs, s_once, 0.1);
    EXPECT_EQ(s_once.fits(), 1u);

    LfdrOptions every;
    every.refit_interval = 1;
    LfdrStrategy s_every(every);
    const ProcedureResult r_every = run(pairs, s_every, 0.1);
    EXPECT_GT(s_every.fits(), 1u);

    for (const ProcedureResult* r : {&r_once, &r_every}) {
        EXPECT_EQ(r->stopped_by, StopReason::FdrThreshold);
        EXPECT_LE(r->fdr_hat_trace.back(), 0.1);
        EXPECT_EQ(r->rejected.size(), r->rejected_positive + r->rejected_negative);
    }
}

TEST(Lfdr, DefaultRefitInterval) {
    EXPECT_EQ(default_refit_interval(10), 1u);
    EXPECT_EQ(default_refit_interval(2000), 40u);
    EXPECT_EQ(default_refit_interval(5000), 100u);
}

TEST(Strategies, SameViewSameChoice) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> q(60);
        for (auto& v : q) do v = u(rng); while (v == 0.0);
        const PairSet pairs(q);
        const std::size_t i = std::min<std::size_t>(pairs.n_plus() - 1, rep);
        const std::size_t j = std::min<std::size_t>(pairs.n_minus() - 1, rep / 2);
        const MaskedView v = masked_view(pairs, state_at(i + j, i, j));
        for (const char* name : {"alternate", "nearest", "lfdr"}) {
            const auto a = make_strategy(name);
            const auto b = make_strategy(name);
            const Side first = a->choose(v);
            EXPECT_EQ(a->choose(v), first) << name;
            EXPECT_EQ(b->choose(v), first) << name;
        }
    }
}

TEST(Strategies, Factory) {
    EXPECT_EQ(make_strategy("alternate")->name(), "alternate");
    EXPECT_EQ(make_strategy("nearest")->name(), "nearest");
    EXPECT_EQ(make_strategy("lfdr")->name(), "lfdr");
    EXPECT_THROW(make_strategy("greedy"), std::invalid_argument);
}
