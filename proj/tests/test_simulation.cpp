#include "sko/simulation.hpp"

#include "sko/stats.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace sko;

namespace {

// Kolmogorov-Smirnov distance against a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

}  // namespace

TEST(GenNormal, LabelProportionsAndMeans) {
    NormalDesign d;
    d.n = 100000;
    d.p1 = 0.1;
    d.p2 = 0.2;
    d.mu1 = -2.0;
    d.mu2 = 4.0;
    d.seed = 5;
    const GeneratedData g = gen_normal(d, 0);
    EXPECT_FALSE(g.df);
    double down = 0, up = 0, sum_null = 0, n_null = 0, sum_up = 0;
    for (std::size_t i = 0; i < d.n; ++i) {
        if (g.labels[i] == Label::Down) ++down;
        if (g.labels[i] == Label::Up) {
            ++up;
            sum_up += g.statistics[i];
        }
        if (g.labels[i] == Label::Null) {
            ++n_null;
            sum_null += g.statistics[i];
        }
    }
    EXPECT_NEAR(down / d.n, 0.1, 0.02);
    EXPECT_NEAR(up / d.n, 0.2, 0.02);
    EXPECT_NEAR(sum_null / n_null, 0.0, 0.02);
    EXPECT_NEAR(sum_up / up, 4.0, 0.02);
}

TEST(GenNormal, DeterministicPerReplicate) {
    NormalDesign d;
    d.n = 500;
    const GeneratedData a = gen_normal(d, 3);
    const GeneratedData b = gen_normal(d, 3);
    const GeneratedData c = gen_normal(d, 4);
    EXPECT_EQ(a.statistics, b.statistics);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_NE(a.statistics, c.statistics);
    EXPECT_NE(replicate_seed(1, 0), replicate_seed(2, 0));
    EXPECT_NE(replicate_seed(1, 0), replicate_seed(1, 1));
}

TEST(GenNormal, ExpectedAlternativeShare) {
    NormalDesign d;  // p1 = p2 = 0.1
    d.n = 2000;
    double alt = 0.0;
    for (std::size_t r = 0; r < 50; ++r) {
        const GeneratedData g = gen_normal(d, r);
        alt += static_cast<double>(std::count_if(g.labels.begin(), g.labels.end(),
                                                 [](Label l) { return l != Label::Null; }));
    }
    EXPECT_NEAR(alt / 50.0, 0.2 * 2000, 8.0);
}

TEST(Ar1, CholeskySmall) {
    const auto l = ar1_cholesky(2, -0.7);
    EXPECT_EQ(l[0], 1.0);
    EXPECT_EQ(l[1], 0.0);
    EXPECT_DOUBLE_EQ(l[2], -0.7);
    EXPECT_DOUBLE_EQ(l[3], std::sqrt(0.51));
    EXPECT_THROW(ar1_cholesky(3, 1.0), std::invalid_argument);
}

TEST(Ar1, CholeskyReproducesCovariance) {
    const std::size_t b = 20;
    const auto l = ar1_cholesky(b, -0.7);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < b; ++k) s += l[i * b + k] * l[j * b + k];
            EXPECT_NEAR(s, std::pow(-0.7, std::abs(static_cast<int>(i) - static_cast<int>(j))), 1e-12);
        }
}

TEST(PooledT, Examples) {
    // Means 2 and 0, pooled variance 1, standard error sqrt(2/3).
    EXPECT_NEAR(pooled_t(std::vector<double>{1, 2, 3}, std::vector<double>{-1, 0, 1}), 2 / std::sqrt(2.0 / 3.0), 1e-14);
    EXPECT_NEAR(pooled_t(std::vector<double>{-1, 0, 1}, std::vector<double>{1, 2, 3}), -2 / std::sqrt(2.0 / 3.0), 1e-14);
}

TEST(GenDependentT, NullStatisticsFollowT4) {
    TDesign d;
    d.n = 10000;
    d.p1 = 0.0;
    d.p2 = 0.0;
    d.seed = 7;
    const GeneratedData g = gen_dependent_t(d, 0);
    ASSERT_TRUE(g.df);
    EXPECT_EQ(*g.df, 4.0);
    const double ks = ks_distance(g.statistics, [](double t) { return t_cdf(t, 4.0); });
    EXPECT_LT(ks, 1.628 / std::sqrt(10000.0));
}

TEST(GenDependentT, IndependentWhenRhoZero) {
    // Covariance of adjacent t statistics across replicates.
    TDesign d;
    d.n = 40;
    d.rho = 0.0;
    d.p1 = 0.0;
    d.p2 = 0.0;
    const std::size_t reps = 4000;
    double s01 = 0, s0 = 0, s1 = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const GeneratedData g = gen_dependent_t(d, r);
        const double a = t_to_z(g.statistics[4], 4.0);
        const double b = t_to_z(g.statistics[5], 4.0);
        s01 += a * b;
        s0 += a;
        s1 += b;
    }
    const double cov = s01 / reps - (s0 / reps) * (s1 / reps);
    EXPECT_LT(std::fabs(cov), 0.05);
}

TEST(GenDependentT, NegativeCorrelationVisible) {
    TDesign d;
    d.n = 40;
    d.p1 = 0.0;
    d.p2 = 0.0;
    const std::size_t reps = 2000;
    double s01 = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const GeneratedData g = gen_dependent_t(d, r);
        s01 += t_to_z(g.statistics[4], 4.0) * t_to_z(g.statistics[5], 4.0);
    }
    EXPECT_LT(s01 / reps, -0.3);
}

TEST(GenDependentT, SignBalanceUnderNull) {
    TDesign d;
    d.n = 10000;
    d.p1 = 0.0;
    d.p2 = 0.0;
    const GeneratedData g = gen_dependent_t(d, 1);
    const auto pos = std::count_if(g.statistics.begin(), g.statistics.end(), [](double t) { return t > 0; });
    EXPECT_LE(std::fabs(2.0 * pos - 10000.0), 4 * std::sqrt(10000.0));
}

TEST(GenDependentT, ValidatesDesign) {
    TDesign d;
    d.n = 30;
    EXPECT_THROW(d.validate(), std::invalid_argument);
    d.n = 40;
    d.rho = 1.0;
    EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(TToZ, Examples) {
    EXPECT_EQ(t_to_z(0.0, 4.0), 0.0);
    EXPECT_NEAR(t_to_z(2.776, 4.0), 1.95976915226968, 1e-9);
    EXPECT_NEAR(t_to_z(-2.776, 4.0), -1.95976915226968, 1e-9);
    for (double t = 0.1; t < 30.0; t *= 1.7) EXPECT_EQ(t_to_z(-t, 4.0), -t_to_z(t, 4.0));
    // Quadrature oracle on both transforms.
    for (double t : {0.3, 1.2, 4.0}) {
        const double z = t_to_z(t, 4.0);
        EXPECT_NEAR(oracle::normal_cdf_series(z), oracle::t_cdf_quadrature(t, 4.0), 1e-9);
    }
}

TEST(Metrics, FdpAndPower) {
    const std::vector<Label> labels{Label::Null, Label::Up, Label::Down, Label::Null, Label::Up};
    EXPECT_DOUBLE_EQ(false_discovery_proportion(std::vector<std::size_t>{0, 1, 2}, labels), 1.0 / 3.0);
    EXPECT_EQ(false_discovery_proportion(std::vector<std::size_t>{}, labels), 0.0);
    EXPECT_DOUBLE_EQ(power(std::vector<std::size_t>{0, 1, 2}, labels), 2.0 / 3.0);
    const std::vector<Label> nulls(4, Label::Null);
    EXPECT_EQ(power(std::vector<std::size_t>{1}, nulls), 0.0);
}

TEST(SignedPValues, ZeroTakesPositiveSign) {
    const auto q = signed_p_values(std::vector<double>{0.0, -1.0, 2.0}, std::nullopt);
    EXPECT_GT(q[0], 0.0);
    EXPECT_LT(q[0], 1e-300);
    EXPECT_NEAR(q[1], -(1 - 2 * oracle::normal_cdf_series(-1.0)), 1e-12);
    EXPECT_GT(q[2], 0.9);
}

TEST(RunStudy, Bookkeeping) {
    NormalDesign d;
    d.n = 10;
    d.reps = 2;
    const StudyResult s = run_study(d, {"sk", "bh", "orc"});
    EXPECT_EQ(s.reps, 2u);
    EXPECT_EQ(s.seeds.size(), 2u);
    ASSERT_EQ(s.procedures.size(), 3u);
    for (const auto& m : s.procedures) {
        EXPECT_EQ(m.fdp.size(), 2u);
        EXPECT_EQ(m.power.size(), 2u);
        EXPECT_EQ(m.errors, 0u);
    }
    EXPECT_EQ(s.at("bh").name, "bh");
    EXPECT_THROW(s.at("nope"), std::out_of_range);
}

TEST(RunStudy, IndependentOfParallelism) {
    NormalDesign d;
    d.n = 300;
    d.reps = 6;
    const StudyResult a = run_study(d, {"sk", "sk-nearest", "bh", "orc"}, 1);
    const StudyResult b = run_study(d, {"sk", "sk-nearest", "bh", "orc"}, 3);
    ASSERT_EQ(a.procedures.size(), b.procedures.size());
    for (std::size_t p = 0; p < a.procedures.size(); ++p) {
        EXPECT_EQ(a.procedures[p].fdp, b.procedures[p].fdp);
        EXPECT_EQ(a.procedures[p].power, b.procedures[p].power);
    }
    EXPECT_EQ(a.seeds, b.seeds);
}

TEST(RunStudy, MetricsMatchRecount) {
    TDesign d;
    d.n = 200;
    d.reps = 3;
    d.seed = 11;
    const StudyResult s = run_study(d, {"sk-alternate", "bh"});
    for (std::size_t r = 0; r < 3; ++r) {
        const GeneratedData g = gen_dependent_t(d, r);
        for (const char* name : {"sk-alternate", "bh"}) {
            const auto rej = apply_procedure(name, g, d.alpha, std::nullopt);
            std::size_t false_rej = 0, true_rej = 0, alts = 0;
            for (std::size_t i : rej) (g.labels[i] == Label::Null ? false_rej : true_rej)++;
            for (Label l : g.labels) alts += l != Label::Null;
            EXPECT_DOUBLE_EQ(s.at(name).fdp[r], rej.empty() ? 0.0 : double(false_rej) / rej.size());
            EXPECT_DOUBLE_EQ(s.at(name).power[r], double(true_rej) / std::max<std::size_t>(alts, 1));
        }
    }
}

TEST(RunStudy, Errors) {
    TDesign t;
    t.n = 40;
    t.reps = 1;
    EXPECT_THROW(run_study(t, {"orc"}), std::invalid_argument);
    NormalDesign d;
    EXPECT_THROW(run_study(d, {}), std::invalid_argument);
    d.n = 20;
    d.reps = 1;
    const StudyResult s = run_study(d, {"magic"});
    EXPECT_EQ(s.at("magic").errors, 1u);
    EXPECT_TRUE(std::isnan(s.at("magic").fdp[0]));
}

TEST(Metrics, MeanAndMcse) {
    ProcedureMetrics m;
    m.fdp = {0.0, 0.2, NAN, 0.1};
    EXPECT_DOUBLE_EQ(m.mean_fdp(), 0.1);
    EXPECT_NEAR(m.mcse_fdp(), std::sqrt(0.01 / 3.0), 1e-15);
}
