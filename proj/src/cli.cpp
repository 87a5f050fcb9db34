#include "sko/cli.hpp"

#include "sko/baselines.hpp"
#include "sko/io.hpp"
#include "sko/reference_trace.hpp"
#include "sko/simulation.hpp"
#include "sko/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sko {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

std::string curve_path_for(const std::string& out_path) {
    if (out_path.empty()) return "curve.csv";
    std::filesystem::path p(out_path);
    return (p.parent_path() / (p.stem().string() + "_curve.csv")).string();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Signed-knockoff FDR control with directional information"};
    app.require_subcommand(1);

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Run the procedure on a statistic table");
    std::string input;
    double alpha = 0.1;
    std::string strategy = "lfdr";
    bool do_sweep = false;
    std::string out_path;
    std::string curve_path;
    std::string rejections_path;
    std::uint64_t seed = 0;
    std::size_t refit_interval = 0;
    analyze_cmd->add_option("--input", input, "CSV/TSV with id,stat[,df] or id,p,sign")->required();
    analyze_cmd->add_option("--alpha", alpha, "Target FDR level")->check(CLI::Range(0.0, 1.0));
    analyze_cmd->add_option("--strategy", strategy, "lfdr, nearest or alternate")
        ->check(CLI::IsMember({"lfdr", "nearest", "alternate"}));
    analyze_cmd->add_flag("--sweep", do_sweep, "Also write rejection counts for alpha = 0.01..0.20");
    analyze_cmd->add_option("--out", out_path, "Report path (JSON); stdout when omitted");
    analyze_cmd->add_option("--curve", curve_path, "Sweep CSV path (default <out>_curve.csv)");
    analyze_cmd->add_option("--rejections", rejections_path, "Also write rejected ids as CSV");
    analyze_cmd->add_option("--seed", seed, "Echoed into the report");
    analyze_cmd->add_option("--refit-interval", refit_interval, "EM refit interval (0 = n/50)");

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo FDR/power study");
    std::string design_config;
    std::string procedures = "";
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> sim_seed;
    std::size_t threads = 1;
    bool full_scale = false;
    std::string sim_out;
    simulate_cmd->add_option("--design-config", design_config, "Design file (key = value)")->required();
    simulate_cmd->add_option("--procedures", procedures,
                             "Comma list of sk, sk-alternate, sk-nearest, bh, orc");
    simulate_cmd->add_option("--reps", reps, "Override replicate count");
    simulate_cmd->add_option("--seed", sim_seed, "Override seed");
    simulate_cmd->add_option("--threads", threads, "Worker threads");
    simulate_cmd->add_flag("--full-scale", full_scale, "n = 5000, 200 replicates");
    simulate_cmd->add_option("--out", sim_out, "Result path (JSON); stdout when omitted");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "Run several procedures on one table");
    std::string cmp_input;
    double cmp_alpha = 0.1;
    std::string cmp_out;
    std::uint64_t cmp_seed = 0;
    compare_cmd->add_option("--input", cmp_input, "Statistic table")->required();
    compare_cmd->add_option("--alpha", cmp_alpha, "Target FDR level")->check(CLI::Range(0.0, 1.0));
    compare_cmd->add_option("--out", cmp_out, "Result path (JSON); stdout when omitted");
    compare_cmd->add_option("--seed", cmp_seed, "Echoed into the output");

    // selftest
    auto* selftest_cmd = app.add_subcommand("selftest", "Cross-check the engine against a literal trace");
    std::size_t instances = 1000;
    std::size_t max_n = 12;
    std::uint64_t st_seed = 20240601;
    selftest_cmd->add_option("--instances", instances, "Random instances");
    selftest_cmd->add_option("--max-n", max_n, "Largest instance size");
    selftest_cmd->add_option("--seed", st_seed, "Instance generator seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*analyze_cmd) {
            if (!(alpha > 0.0 && alpha < 1.0)) {
                err << "error: --alpha must lie in (0, 1)\n";
                return 2;
            }
            const StatTable table = read_stat_table(input);
            AnalyzeOptions options;
            options.alpha = alpha;
            options.strategy = strategy;
            options.seed = seed;
            options.lfdr.refit_interval = refit_interval;
            const AnalysisReport report = analyze(table, options);
            if (report.zero_statistics > 0)
                err << "warning: " << report.zero_statistics
                    << " statistic(s) with signed p-value 0 were assigned a sign\n";
            emit(report_to_json(report), out_path, out);
            if (!rejections_path.empty()) write_rejections_csv(report, rejections_path);
            if (do_sweep) {
                const auto curve = sweep(table, default_sweep_alphas(), options);
                write_curve_csv(curve, curve_path.empty() ? curve_path_for(out_path) : curve_path);
            }
            return 0;
        }

        if (*simulate_cmd) {
            Design design = read_design(design_config);
            std::visit(
                [&](auto& d) {
                    if (full_scale) {
                        d.n = 5000;
                        d.reps = 200;
                    }
                    if (reps) d.reps = *reps;
                    if (sim_seed) d.seed = *sim_seed;
                    d.validate();
                },
                design);
            std::vector<std::string> procs = split_list(procedures);
            if (procs.empty())
                procs = std::holds_alternative<NormalDesign>(design)
                            ? std::vector<std::string>{"sk", "bh", "orc"}
                            : std::vector<std::string>{"sk", "bh"};
            const StudyResult result = run_study(design, procs, threads);
            emit(study_to_json(design, result), sim_out, out);
            return 0;
        }

        if (*compare_cmd) {
            if (!(cmp_alpha > 0.0 && cmp_alpha < 1.0)) {
                err << "error: --alpha must lie in (0, 1)\n";
                return 2;
            }
            const StatTable table = read_stat_table(cmp_input);
            nlohmann::json j;
            j["alpha"] = cmp_alpha;
            j["seed"] = cmp_seed;
            j["n"] = table.rows.size();
            nlohmann::json rows = nlohmann::json::array();
            for (const std::string s : {"lfdr", "nearest", "alternate"}) {
                AnalyzeOptions options;
                options.alpha = cmp_alpha;
                options.strategy = s;
                const AnalysisReport r = analyze(table, options);
                rows.push_back({{"procedure", "sk-" + s},
                                {"total", r.rejected.size()},
                                {"neg", r.rejected_negative},
                                {"pos", r.rejected_positive}});
            }
            const std::vector<double> q = table_signed_p(table);
            const std::vector<double> p = table_p_values(table);
            std::size_t neg = 0;
            const auto rejected = bh(p, cmp_alpha);
            for (std::size_t idx : rejected)
                if (std::signbit(q[idx])) ++neg;
            rows.push_back({{"procedure", "bh"},
                            {"total", rejected.size()},
                            {"neg", neg},
                            {"pos", rejected.size() - neg}});
            j["procedures"] = std::move(rows);
            emit(j.dump(2) + "\n", cmp_out, out);
            return 0;
        }

        if (*selftest_cmd) {
            const auto summary = reference::self_test(instances, max_n, st_seed);
            out << "selftest: " << summary.instances << " instances, " << summary.mismatches
                << " mismatches (seed " << st_seed << ")\n";
            for (const auto& d : summary.details) out << "  " << d << "\n";
            return summary.mismatches == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace sko
