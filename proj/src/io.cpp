#include "sko/io.hpp"

#include "sko/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace sko {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower_case(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, delim)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string slurp(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Infinite boundaries are stored as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or(const json& j, double if_null) { return j.is_null() ? if_null : j.get<double>(); }

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

StatTable parse_stat_table(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++line_no;
        header = trim(line);
        if (!header.empty()) break;
    }
    if (header.empty()) throw ParseError(source, line_no, "missing header row");

    const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
    std::map<std::string, std::size_t> col;
    {
        const auto names = split(header, delim);
        for (std::size_t c = 0; c < names.size(); ++c) {
            const std::string name = lower_case(names[c]);
            if (!col.emplace(name, c).second)
                throw ParseError(source, line_no, "duplicate column '" + name + "'");
        }
    }
    const auto has = [&](const char* name) { return col.count(name) > 0; };
    if (!has("id")) throw ParseError(source, line_no, "header lacks an 'id' column");
    const bool stat_mode = has("stat");
    const bool p_mode = has("p") || has("sign");
    if (stat_mode && p_mode)
        throw ParseError(source, line_no, "header mixes 'stat' with 'p'/'sign' columns");
    if (!stat_mode && !(has("p") && has("sign")))
        throw ParseError(source, line_no, "header needs either 'stat' or both 'p' and 'sign'");

    StatTable table;
    table.mode = stat_mode ? InputMode::Statistic : InputMode::PValueSign;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line, delim);
        const auto cell = [&](const char* name) -> std::string {
            const std::size_t c = col.at(name);
            return c < cells.size() ? cells[c] : std::string();
        };
        StatRow row;
        row.id = cell("id");
        if (row.id.empty()) throw ParseError(source, line_no, "empty id");
        if (!seen.insert(row.id).second)
            throw ParseError(source, line_no, "duplicate id '" + row.id + "'");
        if (stat_mode) {
            const auto v = parse_double(cell("stat"));
            if (!v || !std::isfinite(*v))
                throw ParseError(source, line_no, "statistic is not a finite number");
            row.statistic = *v;
            if (has("df") && !cell("df").empty()) {
                const auto df = parse_double(cell("df"));
                if (!df || !std::isfinite(*df) || *df <= 0.0)
                    throw ParseError(source, line_no, "df must be a positive finite number");
                row.df = *df;
            }
        } else {
            const auto p = parse_double(cell("p"));
            if (!p || !(*p >= 0.0 && *p <= 1.0))
                throw ParseError(source, line_no, "p-value outside [0, 1]");
            row.p = *p;
            const std::string s = cell("sign");
            if (s == "1" || s == "+1" || s == "+")
                row.sign = 1;
            else if (s == "-1" || s == "-")
                row.sign = -1;
            else
                throw ParseError(source, line_no, "sign must be +1 or -1");
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

StatTable read_stat_table(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_stat_table(in, path.string());
}

std::vector<double> table_signed_p(const StatTable& table, std::size_t* zero_count) {
    std::vector<double> q;
    q.reserve(table.rows.size());
    std::size_t zeros = 0;
    for (const auto& row : table.rows) {
        SignedPValue v;
        if (table.mode == InputMode::Statistic) {
            const TestStatistic stat(row.statistic, row.df);
            v = signed_p(stat, two_sided_p(stat));
        } else {
            v = signed_p(row.sign, row.p);
        }
        if (v.q == 0.0) ++zeros;
        q.push_back(resolve_zero(v).q);
    }
    if (zero_count) *zero_count = zeros;
    return q;
}

std::vector<double> table_p_values(const StatTable& table) {
    std::vector<double> p;
    p.reserve(table.rows.size());
    for (const auto& row : table.rows)
        p.push_back(table.mode == InputMode::Statistic
                        ? two_sided_p(TestStatistic(row.statistic, row.df))
                        : row.p);
    return p;
}

namespace {

std::optional<StatisticBoundaries> boundaries_for(const StatTable& table,
                                                  const RejectionRegion& region) {
    StatisticBoundaries out;
    if (table.mode == InputMode::Statistic) {
        const auto& first = table.rows.front().df;
        for (const auto& row : table.rows)
            if (row.df != first) return std::nullopt;
        out.df = first;
        out.scale = first ? "t" : "z";
    } else {
        out.scale = "z";
    }
    out.lower = statistic_for_signed_p(region.lower, out.df);
    out.upper = statistic_for_signed_p(region.upper, out.df);
    return out;
}

}  // namespace

AnalysisReport analyze(const StatTable& table, const AnalyzeOptions& options) {
    if (table.rows.empty()) throw std::invalid_argument("analyze: empty table");
    AnalysisReport report;
    report.alpha = options.alpha;
    report.strategy = options.strategy;
    report.seed = options.seed;

    const std::vector<double> q = table_signed_p(table, &report.zero_statistics);
    const PairSet pairs(q);
    auto strategy = make_strategy(options.strategy, options.lfdr);
    const ProcedureResult result = run(pairs, *strategy, options.alpha);

    report.n = pairs.n();
    report.n_plus = pairs.n_plus();
    report.n_minus = pairs.n_minus();
    report.refit_interval = options.strategy != "lfdr"        ? 0
                            : options.lfdr.refit_interval == 0 ? default_refit_interval(pairs.n())
                                                               : options.lfdr.refit_interval;
    report.stopped_by = result.stopped_by;
    report.region = result.region;
    report.statistic_boundaries = boundaries_for(table, result.region);
    for (std::size_t idx : result.rejected)
        report.rejected.push_back({table.rows[idx].id, pairs[idx].sign > 0 ? Side::Positive
                                                                           : Side::Negative});
    report.rejected_positive = result.rejected_positive;
    report.rejected_negative = result.rejected_negative;
    report.fdr_hat_trace = result.fdr_hat_trace;
    if (const auto* lfdr = dynamic_cast<const LfdrStrategy*>(strategy.get())) report.mixture = lfdr->params();
    return report;
}

std::vector<double> default_sweep_alphas() {
    std::vector<double> a;
    for (int k = 1; k <= 20; ++k) a.push_back(k / 100.0);
    return a;
}

std::vector<SweepPoint> sweep(const StatTable& table, const std::vector<double>& alphas,
                              const AnalyzeOptions& options) {
    std::vector<SweepPoint> curve;
    for (double alpha : alphas) {
        AnalyzeOptions o = options;
        o.alpha = alpha;
        const AnalysisReport r = analyze(table, o);
        curve.push_back({alpha, r.rejected.size(), r.rejected_negative, r.rejected_positive});
    }
    return curve;
}

std::string report_to_json(const AnalysisReport& r) {
    json j;
    j["alpha"] = r.alpha;
    j["strategy"] = r.strategy;
    j["seed"] = r.seed;
    j["refit_interval"] = r.refit_interval;
    j["n"] = r.n;
    j["n_plus"] = r.n_plus;
    j["n_minus"] = r.n_minus;
    j["zero_statistics"] = r.zero_statistics;
    j["stopped_by"] = to_string(r.stopped_by);
    j["region"] = {{"lower", r.region.lower}, {"upper", r.region.upper}};
    if (r.statistic_boundaries) {
        const auto& b = *r.statistic_boundaries;
        j["statistic_boundaries"] = {{"scale", b.scale},
                                     {"df", b.df ? json(*b.df) : json(nullptr)},
                                     {"lower", finite_or_null(b.lower)},
                                     {"upper", finite_or_null(b.upper)}};
    } else {
        j["statistic_boundaries"] = nullptr;
    }
    json rejected = json::array();
    for (const auto& h : r.rejected) rejected.push_back({{"id", h.id}, {"side", to_string(h.side)}});
    j["rejected"] = std::move(rejected);
    j["rejected_positive"] = r.rejected_positive;
    j["rejected_negative"] = r.rejected_negative;
    j["fdr_hat_trace"] = r.fdr_hat_trace;
    if (r.mixture)
        j["mixture"] = {{"pi0", r.mixture->pi0},
                        {"lambda", r.mixture->lambda},
                        {"shape_left", r.mixture->shape_left},
                        {"shape_right", r.mixture->shape_right}};
    else
        j["mixture"] = nullptr;
    return j.dump(2) + "\n";
}

AnalysisReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    AnalysisReport r;
    r.alpha = j.at("alpha").get<double>();
    r.strategy = j.at("strategy").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.refit_interval = j.at("refit_interval").get<std::size_t>();
    r.n = j.at("n").get<std::size_t>();
    r.n_plus = j.at("n_plus").get<std::size_t>();
    r.n_minus = j.at("n_minus").get<std::size_t>();
    r.zero_statistics = j.at("zero_statistics").get<std::size_t>();
    const auto stop = j.at("stopped_by").get<std::string>();
    if (stop == "fdr_threshold")
        r.stopped_by = StopReason::FdrThreshold;
    else if (stop == "exhaustion")
        r.stopped_by = StopReason::Exhaustion;
    else
        throw std::runtime_error("report: unknown stop reason '" + stop + "'");
    r.region.lower = j.at("region").at("lower").get<double>();
    r.region.upper = j.at("region").at("upper").get<double>();
    if (const auto& b = j.at("statistic_boundaries"); !b.is_null()) {
        StatisticBoundaries sb;
        sb.scale = b.at("scale").get<std::string>();
        if (!b.at("df").is_null()) sb.df = b.at("df").get<double>();
        sb.lower = number_or(b.at("lower"), -std::numeric_limits<double>::infinity());
        sb.upper = number_or(b.at("upper"), std::numeric_limits<double>::infinity());
        r.statistic_boundaries = sb;
    }
    for (const auto& h : j.at("rejected")) {
        const auto side = h.at("side").get<std::string>();
        if (side != "positive" && side != "negative")
            throw std::runtime_error("report: unknown side '" + side + "'");
        r.rejected.push_back({h.at("id").get<std::string>(),
                              side == "positive" ? Side::Positive : Side::Negative});
    }
    r.rejected_positive = j.at("rejected_positive").get<std::size_t>();
    r.rejected_negative = j.at("rejected_negative").get<std::size_t>();
    r.fdr_hat_trace = j.at("fdr_hat_trace").get<std::vector<double>>();
    if (const auto& m = j.at("mixture"); !m.is_null())
        r.mixture = MixtureParams{m.at("pi0").get<double>(), m.at("lambda").get<double>(),
                                  m.at("shape_left").get<double>(),
                                  m.at("shape_right").get<double>()};
    return r;
}

void write_report(const AnalysisReport& report, const std::filesystem::path& path) {
    write_text(path, report_to_json(report));
}

AnalysisReport read_report(const std::filesystem::path& path) {
    try {
        return report_from_json(slurp(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": malformed report: " + e.what());
    }
}

void write_curve_csv(const std::vector<SweepPoint>& curve, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "alpha,total,neg,pos\n";
    for (const auto& pt : curve)
        out << json(pt.alpha).dump() << ',' << pt.total << ',' << pt.negative << ',' << pt.positive
            << '\n';
    write_text(path, out.str());
}

void write_rejections_csv(const AnalysisReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "id,side\n";
    for (const auto& h : report.rejected) out << h.id << ',' << to_string(h.side) << '\n';
    write_text(path, out.str());
}

Design parse_design(std::istream& in, const std::string& source) {
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
        const std::string key = lower_case(trim(t.substr(0, eq)));
        if (!kv.emplace(key, std::pair{trim(t.substr(eq + 1)), line_no}).second)
            throw ParseError(source, line_no, "duplicate key '" + key + "'");
    }

    const auto take_double = [&](const std::string& key, double& out) {
        const auto it = kv.find(key);
        if (it == kv.end()) return;
        const auto v = parse_double(it->second.first);
        if (!v || !std::isfinite(*v))
            throw ParseError(source, it->second.second, key + " must be a finite number");
        out = *v;
        kv.erase(it);
    };
    const auto take_count = [&](const std::string& key, auto& out) {
        const auto it = kv.find(key);
        if (it == kv.end()) return;
        using T = std::remove_reference_t<decltype(out)>;
        T v{};
        const std::string& s = it->second.first;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size())
            throw ParseError(source, it->second.second, key + " must be a non-negative integer");
        out = v;
        kv.erase(it);
    };

    std::string kind = "normal";
    if (const auto it = kv.find("design"); it != kv.end()) {
        kind = lower_case(it->second.first);
        kv.erase(it);
    }

    Design design;
    const auto common = [&](auto& d) {
        take_count("n", d.n);
        take_double("p1", d.p1);
        take_double("p2", d.p2);
        take_double("mu1", d.mu1);
        take_double("mu2", d.mu2);
        take_double("alpha", d.alpha);
        take_count("reps", d.reps);
        take_count("seed", d.seed);
    };
    if (kind == "normal") {
        NormalDesign d;
        common(d);
        design = d;
    } else if (kind == "dependent_t") {
        TDesign d;
        common(d);
        take_count("block_size", d.block_size);
        take_double("rho", d.rho);
        take_count("n_treat", d.n_treat);
        take_count("n_control", d.n_control);
        design = d;
    } else {
        throw ParseError(source, 0, "unknown design '" + kind + "' (normal or dependent_t)");
    }
    if (!kv.empty())
        throw ParseError(source, kv.begin()->second.second,
                         "unknown key '" + kv.begin()->first + "' for design " + kind);
    std::visit([](const auto& d) { d.validate(); }, design);
    return design;
}

Design read_design(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_design(in, path.string());
}

std::string study_to_json(const Design& design, const StudyResult& result) {
    json j;
    std::visit(
        [&](const auto& d) {
            json dj = {{"n", d.n},   {"p1", d.p1},       {"p2", d.p2},   {"mu1", d.mu1},
                       {"mu2", d.mu2}, {"alpha", d.alpha}, {"reps", d.reps}, {"seed", d.seed}};
            if constexpr (std::is_same_v<std::decay_t<decltype(d)>, TDesign>) {
                dj["design"] = "dependent_t";
                dj["block_size"] = d.block_size;
                dj["rho"] = d.rho;
                dj["n_treat"] = d.n_treat;
                dj["n_control"] = d.n_control;
            } else {
                dj["design"] = "normal";
            }
            j["design"] = std::move(dj);
        },
        design);
    j["replicate_seeds"] = result.seeds;
    json procs = json::array();
    for (const auto& m : result.procedures) {
        json fdp = json::array();
        json pow = json::array();
        for (double v : m.fdp) fdp.push_back(number_or_null(v));
        for (double v : m.power) pow.push_back(number_or_null(v));
        procs.push_back({{"name", m.name},
                         {"mean_fdp", number_or_null(m.mean_fdp())},
                         {"mcse_fdp", number_or_null(m.mcse_fdp())},
                         {"mean_power", number_or_null(m.mean_power())},
                         {"mcse_power", number_or_null(m.mcse_power())},
                         {"errors", m.errors},
                         {"error_messages", m.error_messages},
                         {"fdp", std::move(fdp)},
                         {"power", std::move(pow)}});
    }
    j["procedures"] = std::move(procs);
    return j.dump(2) + "\n";
}

}  // namespace sko
