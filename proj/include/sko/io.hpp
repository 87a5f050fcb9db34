// Statistic tables, analysis reports, design configs.
//
// Input tables are comma- or tab-delimited with a header row. Two layouts:
//   id,stat[,df]   test statistics; rows without df use the normal reference
//   id,p,sign      two-sided p-values with the sign (+1/-1) of the statistic
// Design configs are `key = value` lines; `#` starts a comment.

#pragma once

#include "sko/mixture_em.hpp"
#include "sko/procedure.hpp"
#include "sko/simulation.hpp"
#include "sko/strategies.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sko {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class InputMode { Statistic, PValueSign };

struct StatRow {
    std::string id;
    double statistic = 0.0;  // Statistic mode
    std::optional<double> df;
    double p = 1.0;          // PValueSign mode
    int sign = 1;

    bool operator==(const StatRow&) const = default;
};

struct StatTable {
    InputMode mode = InputMode::Statistic;
    std::vector<StatRow> rows;

    bool operator==(const StatTable&) const = default;
};

StatTable parse_stat_table(std::istream& in, const std::string& source = "<stream>");
StatTable read_stat_table(const std::filesystem::path& path);

// Signed p-values of a table, zeros resolved; `zero_count` receives how many
// rows had a signed p-value of exactly zero.
std::vector<double> table_signed_p(const StatTable& table, std::size_t* zero_count = nullptr);

// Two-sided p-values of a table.
std::vector<double> table_p_values(const StatTable& table);

struct AnalyzeOptions {
    double alpha = 0.1;
    std::string strategy = "lfdr";
    LfdrOptions lfdr;
    std::uint64_t seed = 0;  // echoed only; the procedure is deterministic
};

struct RejectedHypothesis {
    std::string id;
    Side side = Side::Positive;

    bool operator==(const RejectedHypothesis&) const = default;
};

// Region boundaries mapped back to the statistic scale (t with a common df,
// or z). Infinite values stand for an empty side.
struct StatisticBoundaries {
    std::string scale;  // "t" or "z"
    std::optional<double> df;
    double lower = 0.0;
    double upper = 0.0;

    bool operator==(const StatisticBoundaries&) const = default;
};

struct AnalysisReport {
    double alpha = 0.1;
    std::string strategy;
    std::uint64_t seed = 0;
    std::size_t refit_interval = 0;
    std::size_t n = 0;
    std::size_t n_plus = 0;
    std::size_t n_minus = 0;
    std::size_t zero_statistics = 0;
    StopReason stopped_by = StopReason::Exhaustion;
    RejectionRegion region;
    std::optional<StatisticBoundaries> statistic_boundaries;
    std::vector<RejectedHypothesis> rejected;
    std::size_t rejected_positive = 0;
    std::size_t rejected_negative = 0;
    std::vector<double> fdr_hat_trace;
    std::optional<MixtureParams> mixture;

    bool operator==(const AnalysisReport&) const = default;
};

AnalysisReport analyze(const StatTable& table, const AnalyzeOptions& options);

struct SweepPoint {
    double alpha = 0.0;
    std::size_t total = 0;
    std::size_t negative = 0;
    std::size_t positive = 0;
};

// 0.01, 0.02, ..., 0.20
std::vector<double> default_sweep_alphas();

// Runs the procedure independently at every alpha.
std::vector<SweepPoint> sweep(const StatTable& table, const std::vector<double>& alphas,
                              const AnalyzeOptions& options);

std::string report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const std::string& text);

void write_report(const AnalysisReport& report, const std::filesystem::path& path);
AnalysisReport read_report(const std::filesystem::path& path);

// Columns: alpha,total,neg,pos
void write_curve_csv(const std::vector<SweepPoint>& curve, const std::filesystem::path& path);
// Columns: id,side
void write_rejections_csv(const AnalysisReport& report, const std::filesystem::path& path);

Design parse_design(std::istream& in, const std::string& source = "<stream>");
Design read_design(const std::filesystem::path& path);

std::string study_to_json(const Design& design, const StudyResult& result);

}  // namespace sko
