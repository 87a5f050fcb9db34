// Data generators and the Monte Carlo study runner.

#pragma once

#include "sko/baselines.hpp"
#include "sko/strategies.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sko {

enum class Label : std::uint8_t { Null, Down, Up };

// Independent z_i ~ (1 - p1 - p2) N(0,1) + p1 N(mu1,1) + p2 N(mu2,1).
struct NormalDesign {
    std::size_t n = 2000;
    double p1 = 0.1;
    double p2 = 0.1;
    double mu1 = -3.0;
    double mu2 = 3.0;
    double alpha = 0.1;
    std::size_t reps = 100;
    std::uint64_t seed = 1;

    void validate() const;
    OracleTruth truth() const { return {p1, p2, mu1, mu2}; }
};

// Two-sample t statistics from genes in AR(1)-correlated blocks.
struct TDesign {
    std::size_t n = 2000;
    std::size_t block_size = 20;
    double rho = -0.7;
    std::size_t n_treat = 3;
    std::size_t n_control = 3;
    double p1 = 0.1;
    double p2 = 0.1;
    double mu1 = -3.0;
    double mu2 = 3.0;
    double alpha = 0.1;
    std::size_t reps = 100;
    std::uint64_t seed = 1;

    void validate() const;
    double df() const { return static_cast<double>(n_treat + n_control) - 2.0; }
};

using Design = std::variant<NormalDesign, TDesign>;

struct GeneratedData {
    std::vector<double> statistics;
    std::vector<Label> labels;
    std::optional<double> df;  // absent for z-values
};

// Seed of replicate `rep`, derived by mixing (seed, rep) with splitmix64.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t rep);

GeneratedData gen_normal(const NormalDesign& design, std::size_t rep);
GeneratedData gen_dependent_t(const TDesign& design, std::size_t rep);

// Lower Cholesky factor of (rho^|i-j|), row-major b x b.
// Throws std::invalid_argument if the matrix is not positive definite.
std::vector<double> ar1_cholesky(std::size_t b, double rho);

// Pooled-variance two-sample t statistic, mean(treat) - mean(control) on top.
double pooled_t(std::span<const double> treat, std::span<const double> control);

// Phi^{-1}(F_df(t)).
double t_to_z(double t, double df);

double false_discovery_proportion(std::span<const std::size_t> rejected,
                                  std::span<const Label> labels);
// True positives over max(#alternatives, 1).
double power(std::span<const std::size_t> rejected, std::span<const Label> labels);

// Signed p-values of a statistic vector; zero statistics take the positive sign.
std::vector<double> signed_p_values(std::span<const double> statistics, std::optional<double> df);

// Procedures known to the runner: "sk" (lfdr strategy), "sk-alternate",
// "sk-nearest", "bh" and "orc" (normal designs only).
std::vector<std::size_t> apply_procedure(const std::string& name, const GeneratedData& data,
                                         double alpha, const std::optional<OracleTruth>& truth,
                                         const LfdrOptions& lfdr_options = {});

struct ProcedureMetrics {
    std::string name;
    std::vector<double> fdp;    // per replicate, NaN where the replicate failed
    std::vector<double> power;  // per replicate, NaN where the replicate failed
    std::size_t errors = 0;
    std::vector<std::string> error_messages;

    double mean_fdp() const;
    double mean_power() const;
    double mcse_fdp() const;
    double mcse_power() const;
};

struct StudyResult {
    std::vector<ProcedureMetrics> procedures;
    std::vector<std::uint64_t> seeds;  // per replicate
    std::size_t reps = 0;

    const ProcedureMetrics& at(const std::string& name) const;
};

// Runs every replicate of the design through each procedure. Results depend
// only on the design, not on `parallelism`.
StudyResult run_study(const Design& design, const std::vector<std::string>& procedures,
                      std::size_t parallelism = 1, const LfdrOptions& lfdr_options = {});

}  // namespace sko
