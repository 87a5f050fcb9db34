#include "sko/simulation.hpp"

#include "sko/procedure.hpp"
#include "sko/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace sko {

namespace {

void check_mixture(double p1, double p2, double mu1, double mu2) {
    if (p1 < 0.0 || p2 < 0.0 || p1 + p2 > 1.0)
        throw std::invalid_argument("design: p1, p2 must be >= 0 with p1 + p2 <= 1");
    if (!(mu1 <= 0.0 && mu2 >= 0.0)) throw std::invalid_argument("design: need mu1 <= 0 <= mu2");
}

void check_run(std::size_t n, double alpha, std::size_t reps) {
    if (n == 0) throw std::invalid_argument("design: n must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("design: alpha outside (0, 1)");
    if (reps == 0) throw std::invalid_argument("design: reps must be positive");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Label draw_label(std::mt19937_64& rng, double p1, double p2) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < p1) return Label::Down;
    if (u < p1 + p2) return Label::Up;
    return Label::Null;
}

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    std::size_t m = 0;
    for (double x : v)
        if (!std::isnan(x)) {
            s += x;
            ++m;
        }
    return m == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(m);
}

double sample_mcse(const std::vector<double>& v) {
    const double mean = sample_mean(v);
    double ss = 0.0;
    std::size_t m = 0;
    for (double x : v)
        if (!std::isnan(x)) {
            ss += (x - mean) * (x - mean);
            ++m;
        }
    if (m < 2) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
}

}  // namespace

void NormalDesign::validate() const {
    check_run(n, alpha, reps);
    check_mixture(p1, p2, mu1, mu2);
}

void TDesign::validate() const {
    check_run(n, alpha, reps);
    check_mixture(p1, p2, mu1, mu2);
    if (block_size == 0 || n % block_size != 0)
        throw std::invalid_argument("design: block_size must divide n");
    if (!(std::fabs(rho) < 1.0)) throw std::invalid_argument("design: |rho| must be < 1");
    if (n_treat < 1 || n_control < 1 || n_treat + n_control < 3)
        throw std::invalid_argument("design: need at least 3 subjects with both groups present");
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t rep) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(rep));
}

GeneratedData gen_normal(const NormalDesign& design, std::size_t rep) {
    design.validate();
    std::mt19937_64 rng(replicate_seed(design.seed, rep));
    std::normal_distribution<double> noise(0.0, 1.0);
    GeneratedData out;
    out.statistics.resize(design.n);
    out.labels.resize(design.n);
    for (std::size_t i = 0; i < design.n; ++i) {
        const Label label = draw_label(rng, design.p1, design.p2);
        const double mean = label == Label::Down ? design.mu1 : label == Label::Up ? design.mu2 : 0.0;
        out.labels[i] = label;
        out.statistics[i] = mean + noise(rng);
    }
    return out;
}

std::vector<double> ar1_cholesky(std::size_t b, double rho) {
    std::vector<double> l(b * b, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = std::pow(rho, static_cast<double>(i - j));
            for (std::size_t k = 0; k < j; ++k) s -= l[i * b + k] * l[j * b + k];
            if (i == j) {
                if (!(s > 0.0)) throw std::invalid_argument("AR(1) covariance not positive definite");
                l[i * b + i] = std::sqrt(s);
            } else {
                l[i * b + j] = s / l[j * b + j];
            }
        }
    }
    return l;
}

double pooled_t(std::span<const double> treat, std::span<const double> control) {
    const auto moments = [](std::span<const double> x) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        return std::pair{mean, ss};
    };
    const auto [mt, sst] = moments(treat);
    const auto [mc, ssc] = moments(control);
    const double nt = static_cast<double>(treat.size());
    const double nc = static_cast<double>(control.size());
    const double pooled_var = (sst + ssc) / (nt + nc - 2.0);
    return (mt - mc) / std::sqrt(pooled_var * (1.0 / nt + 1.0 / nc));
}

GeneratedData gen_dependent_t(const TDesign& design, std::size_t rep) {
    design.validate();
    const std::size_t b = design.block_size;
    const std::size_t subjects = design.n_treat + design.n_control;
    const std::vector<double> chol = ar1_cholesky(b, design.rho);

    std::mt19937_64 rng(replicate_seed(design.seed, rep));
    std::normal_distribution<double> noise(0.0, 1.0);
    GeneratedData out;
    out.df = design.df();
    out.statistics.resize(design.n);
    out.labels.resize(design.n);

    std::vector<double> white(b);
    std::vector<double> expr(subjects * b);  // subject-major
    std::vector<double> treat(design.n_treat);
    std::vector<double> control(design.n_control);

    for (std::size_t start = 0; start < design.n; start += b) {
        for (std::size_t s = 0; s < subjects; ++s) {
            for (auto& w : white) w = noise(rng);
            for (std::size_t g = 0; g < b; ++g) {
                double v = 0.0;
                for (std::size_t k = 0; k <= g; ++k) v += chol[g * b + k] * white[k];
                expr[s * b + g] = v;
            }
        }
        for (std::size_t g = 0; g < b; ++g) {
            const Label label = draw_label(rng, design.p1, design.p2);
            const double effect = label == Label::Down ? design.mu1 : label == Label::Up ? design.mu2 : 0.0;
            for (std::size_t s = 0; s < design.n_treat; ++s) treat[s] = expr[s * b + g] + effect;
            for (std::size_t s = 0; s < design.n_control; ++s)
                control[s] = expr[(design.n_treat + s) * b + g];
            out.labels[start + g] = label;
            out.statistics[start + g] = pooled_t(treat, control);
        }
    }
    return out;
}

double t_to_z(double t, double df) {
    if (!std::isfinite(t)) throw std::invalid_argument("t_to_z: non-finite t");
    if (t == 0.0) return 0.0;
    // Evaluate on the lower tail and reflect, keeping precision for large |t|.
    const double lower = t_cdf(-std::fabs(t), df);
    if (lower <= 0.0) return t > 0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
    const double z = -normal_quantile(lower);
    return t > 0 ? z : -z;
}

double false_discovery_proportion(std::span<const std::size_t> rejected,
                                  std::span<const Label> labels) {
    std::size_t false_rejections = 0;
    for (std::size_t idx : rejected)
        if (labels[idx] == Label::Null) ++false_rejections;
    return static_cast<double>(false_rejections) /
           static_cast<double>(std::max<std::size_t>(rejected.size(), 1));
}

double power(std::span<const std::size_t> rejected, std::span<const Label> labels) {
    const auto alternatives = static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](Label l) { return l != Label::Null; }));
    std::size_t true_rejections = 0;
    for (std::size_t idx : rejected)
        if (labels[idx] != Label::Null) ++true_rejections;
    return static_cast<double>(true_rejections) /
           static_cast<double>(std::max<std::size_t>(alternatives, 1));
}

std::vector<double> signed_p_values(std::span<const double> statistics, std::optional<double> df) {
    std::vector<double> q(statistics.size());
    for (std::size_t i = 0; i < statistics.size(); ++i) {
        const TestStatistic stat(statistics[i], df);
        q[i] = resolve_zero(signed_p(stat, two_sided_p(stat))).q;
    }
    return q;
}

std::vector<std::size_t> apply_procedure(const std::string& name, const GeneratedData& data,
                                         double alpha, const std::optional<OracleTruth>& truth,
                                         const LfdrOptions& lfdr_options) {
    if (name == "bh") {
        std::vector<double> p(data.statistics.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = two_sided_p(TestStatistic(data.statistics[i], data.df));
        return bh(p, alpha);
    }
    if (name == "orc") {
        if (!truth || data.df) throw std::invalid_argument("orc needs z-values with a known truth");
        return oracle_procedure(data.statistics, *truth, alpha);
    }
    std::string strategy;
    if (name == "sk")
        strategy = "lfdr";
    else if (name == "sk-alternate")
        strategy = "alternate";
    else if (name == "sk-nearest")
        strategy = "nearest";
    else
        throw std::invalid_argument("unknown procedure: " + name);

    const std::vector<double> q = signed_p_values(data.statistics, data.df);
    const PairSet pairs(q);
    auto side_strategy = make_strategy(strategy, lfdr_options);
    return run(pairs, *side_strategy, alpha).rejected;
}

double ProcedureMetrics::mean_fdp() const { return sample_mean(fdp); }
double ProcedureMetrics::mean_power() const { return sample_mean(power); }
double ProcedureMetrics::mcse_fdp() const { return sample_mcse(fdp); }
double ProcedureMetrics::mcse_power() const { return sample_mcse(power); }

const ProcedureMetrics& StudyResult::at(const std::string& name) const {
    for (const auto& m : procedures)
        if (m.name == name) return m;
    throw std::out_of_range("no procedure named " + name + " in study");
}

StudyResult run_study(const Design& design, const std::vector<std::string>& procedures,
                      std::size_t parallelism, const LfdrOptions& lfdr_options) {
    if (procedures.empty()) throw std::invalid_argument("run_study: no procedures");
    std::visit([](const auto& d) { d.validate(); }, design);
    const bool is_normal = std::holds_alternative<NormalDesign>(design);
    for (const auto& name : procedures)
        if (name == "orc" && !is_normal)
            throw std::invalid_argument("run_study: orc is only available for normal designs");

    const std::size_t reps = std::visit([](const auto& d) { return d.reps; }, design);
    const double alpha = std::visit([](const auto& d) { return d.alpha; }, design);
    const std::uint64_t seed = std::visit([](const auto& d) { return d.seed; }, design);
    std::optional<OracleTruth> truth;
    if (is_normal) truth = std::get<NormalDesign>(design).truth();

    StudyResult result;
    result.reps = reps;
    for (std::size_t r = 0; r < reps; ++r) result.seeds.push_back(replicate_seed(seed, r));
    for (const auto& name : procedures) {
        ProcedureMetrics m;
        m.name = name;
        m.fdp.assign(reps, std::numeric_limits<double>::quiet_NaN());
        m.power.assign(reps, std::numeric_limits<double>::quiet_NaN());
        result.procedures.push_back(std::move(m));
    }
    // Error messages are collected per (procedure, replicate) and merged in order.
    std::vector<std::vector<std::string>> errors(procedures.size() * reps);

    const auto replicate = [&](std::size_t r) {
        const GeneratedData data = is_normal ? gen_normal(std::get<NormalDesign>(design), r)
                                             : gen_dependent_t(std::get<TDesign>(design), r);
        for (std::size_t p = 0; p < procedures.size(); ++p) {
            try {
                const auto rejected = apply_procedure(procedures[p], data, alpha, truth, lfdr_options);
                result.procedures[p].fdp[r] = false_discovery_proportion(rejected, data.labels);
                result.procedures[p].power[r] = power(rejected, data.labels);
            } catch (const std::exception& e) {
                errors[p * reps + r].push_back("replicate " + std::to_string(r) + ": " + e.what());
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, reps);
    if (workers == 1) {
        for (std::size_t r = 0; r < reps; ++r) replicate(r);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t r = next++; r < reps; r = next++) replicate(r);
            });
    }

    for (std::size_t p = 0; p < procedures.size(); ++p)
        for (std::size_t r = 0; r < reps; ++r)
            for (auto& msg : errors[p * reps + r]) {
                ++result.procedures[p].errors;
                result.procedures[p].error_messages.push_back(std::move(msg));
            }
    return result;
}

}  // namespace sko
