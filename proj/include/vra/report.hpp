#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vra/chart.hpp"
#include "vra/instance.hpp"
#include "vra/stats.hpp"

namespace vra {

/// One Wilcoxon comparison cell: a (problem size, m) pair of one strategy
/// pair's distances.
struct WilcoxonCell {
    int problem_size = 0;
    int m = 0;
    PairedTestResult result;
    int total_instances = 0;
    std::vector<std::string> excluded_reasons;  // one entry per excluded instance
};

struct StrategyPairTable {
    std::string baseline;   // x in the paired test
    std::string contender;  // y
    std::vector<WilcoxonCell> cells;
};

namespace report_detail {

inline std::string p_text(const PairedTestResult& r) {
    if (r.degenerate || !r.p_value) return "skipped";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *r.p_value);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot write " + path.string());
    out << content;
}

inline Color series_color(std::size_t index) {
    static const Color palette[] = {colors::royal_blue, colors::crimson, colors::forest,
                                    colors::orange,     colors::purple,  colors::teal};
    return palette[index % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace report_detail

/// Writes the full report set: gap-summary CSV, Wilcoxon tables (CSV + text),
/// mean/std-vs-size plots per m, gap-reduction charts, and a machine-readable
/// summary.json.
inline void emit_report(const std::vector<GapSummary>& summaries,
                        const std::vector<StrategyPairTable>& tables,
                        const std::filesystem::path& out_dir) {
    if (summaries.empty()) throw std::invalid_argument("emit_report: no summaries");
    std::filesystem::create_directories(out_dir);

    std::vector<GapSummary> sorted = summaries;
    std::sort(sorted.begin(), sorted.end(), [](const GapSummary& a, const GapSummary& b) {
        return std::tie(a.strategy, a.problem_size, a.m) <
               std::tie(b.strategy, b.problem_size, b.m);
    });

    // (b) gap summary CSV
    std::string csv = "strategy,problem_size,m,mean_gap,std_gap,valid_count,total_count\n";
    for (const auto& s : sorted) {
        csv += s.strategy + "," + std::to_string(s.problem_size) + "," + std::to_string(s.m) + ",";
        csv += (s.mean_gap ? format_double(*s.mean_gap) : "") + std::string(",");
        csv += (s.std_gap ? format_double(*s.std_gap) : "") + std::string(",");
        csv += std::to_string(s.valid_count) + "," + std::to_string(s.total_count) + "\n";
    }
    report_detail::write_file(out_dir / "gap_summary.csv", csv);

    // (a) Wilcoxon tables, one file pair per strategy pair
    for (const auto& table : tables) {
        std::set<int> sizes, ms;
        std::map<std::pair<int, int>, const WilcoxonCell*> by_cell;
        for (const auto& cell : table.cells) {
            sizes.insert(cell.problem_size);
            ms.insert(cell.m);
            by_cell[{cell.problem_size, cell.m}] = &cell;
        }
        const std::string stem = "wilcoxon_" + table.baseline + "_vs_" + table.contender;

        std::string head = "problem_size";
        for (int m : ms) {
            head += ",p_value_m" + std::to_string(m) + ",pairs_m" + std::to_string(m);
        }
        std::string body;
        std::string pretty = "Wilcoxon signed-rank (two-sided), " + table.baseline + " minus " +
                             table.contender + "; zero differences dropped\n\n";
        pretty += "problem size";
        for (int m : ms) pretty += "  | m=" + std::to_string(m) + ": p-value, pairs";
        pretty += "\n";
        for (int size : sizes) {
            body += std::to_string(size);
            pretty += std::to_string(size);
            for (int m : ms) {
                auto it = by_cell.find({size, m});
                if (it == by_cell.end()) {
                    body += ",,";
                    pretty += "  |  -";
                    continue;
                }
                const auto& cell = *it->second;
                if (cell.result.p_value) {
                    body += "," + format_double(*cell.result.p_value) + "," +
                            std::to_string(cell.result.n_pairs);
                    pretty += "  |  " + report_detail::p_text(cell.result) + ", " +
                              std::to_string(cell.result.n_pairs);
                } else {
                    body += ",skipped," + std::to_string(cell.result.n_pairs);
                    pretty += "  |  skipped (" + std::to_string(cell.result.n_pairs) + " pairs)";
                }
            }
            body += "\n";
            pretty += "\n";
        }
        report_detail::write_file(out_dir / (stem + ".csv"), head + "\n" + body);
        report_detail::write_file(out_dir / (stem + ".txt"), pretty);
    }

    // (c) mean gap and std vs problem size, per m, one series per strategy
    std::set<int> all_ms;
    std::set<std::string> strategies;
    for (const auto& s : sorted) {
        all_ms.insert(s.m);
        strategies.insert(s.strategy);
    }
    for (int m : all_ms) {
        for (const bool use_std : {false, true}) {
            ChartSpec spec;
            spec.title = std::string(use_std ? "std gap" : "mean gap") + " vs problem size, m=" +
                         std::to_string(m);
            spec.x_label = "problem size";
            spec.y_label = use_std ? "std gap (%)" : "mean gap (%)";
            std::size_t color_index = 0;
            for (const auto& strategy : strategies) {
                ChartSeries series;
                series.label = strategy;
                series.color = report_detail::series_color(color_index++);
                for (const auto& s : sorted) {
                    if (s.strategy != strategy || s.m != m) continue;
                    const auto& value = use_std ? s.std_gap : s.mean_gap;
                    if (value) series.points.emplace_back(s.problem_size, *value);
                }
                if (!series.points.empty()) spec.series.push_back(std::move(series));
            }
            const auto img = render_chart(spec);
            report_detail::write_file(out_dir / ((use_std ? std::string("std_gap_m")
                                                          : std::string("mean_gap_m")) +
                                                 std::to_string(m) + ".png"),
                                      img.bytes);
        }
    }

    // (d) mean-gap-reduction comparison: baseline mean minus strategy mean
    if (strategies.count("zero_shot") && strategies.size() >= 2) {
        for (int m : all_ms) {
            ChartSpec spec;
            spec.title = "mean gap reduction vs zero_shot, m=" + std::to_string(m);
            spec.x_label = "problem size";
            spec.y_label = "reduction (pp)";
            std::map<int, double> base;
            for (const auto& s : sorted) {
                if (s.strategy == "zero_shot" && s.m == m && s.mean_gap) {
                    base[s.problem_size] = *s.mean_gap;
                }
            }
            std::size_t color_index = 0;
            for (const auto& strategy : strategies) {
                if (strategy == "zero_shot") continue;
                ChartSeries series;
                series.label = strategy;
                series.color = report_detail::series_color(color_index++);
                for (const auto& s : sorted) {
                    if (s.strategy != strategy || s.m != m || !s.mean_gap) continue;
                    auto it = base.find(s.problem_size);
                    if (it == base.end()) continue;
                    series.points.emplace_back(s.problem_size, it->second - *s.mean_gap);
                }
                if (!series.points.empty()) spec.series.push_back(std::move(series));
            }
            if (!spec.series.empty()) {
                const auto img = render_chart(spec);
                report_detail::write_file(
                    out_dir / ("gap_reduction_m" + std::to_string(m) + ".png"), img.bytes);
            }
        }
    }

    // machine-readable summary
    nlohmann::ordered_json js;
    js["zero_difference_policy"] = "dropped";
    js["std_kind"] = "sample (n-1)";
    js["summaries"] = nlohmann::ordered_json::array();
    for (const auto& s : sorted) {
        js["summaries"].push_back({
            {"strategy", s.strategy},
            {"problem_size", s.problem_size},
            {"m", s.m},
            {"mean_gap", s.mean_gap ? nlohmann::ordered_json(*s.mean_gap)
                                    : nlohmann::ordered_json(nullptr)},
            {"std_gap", s.std_gap ? nlohmann::ordered_json(*s.std_gap)
                                  : nlohmann::ordered_json(nullptr)},
            {"valid_count", s.valid_count},
            {"total_count", s.total_count},
        });
    }
    js["wilcoxon"] = nlohmann::ordered_json::array();
    for (const auto& table : tables) {
        nlohmann::ordered_json jt;
        jt["baseline"] = table.baseline;
        jt["contender"] = table.contender;
        jt["cells"] = nlohmann::ordered_json::array();
        for (const auto& cell : table.cells) {
            jt["cells"].push_back({
                {"problem_size", cell.problem_size},
                {"m", cell.m},
                {"p_value", cell.result.p_value ? nlohmann::ordered_json(*cell.result.p_value)
                                                : nlohmann::ordered_json(nullptr)},
                {"n_pairs", cell.result.n_pairs},
                {"statistic", cell.result.statistic},
                {"method", cell.result.method},
                {"total_instances", cell.total_instances},
                {"excluded", cell.excluded_reasons},
            });
        }
        js["wilcoxon"].push_back(std::move(jt));
    }
    report_detail::write_file(out_dir / "summary.json", js.dump(2) + "\n");
}

}  // namespace vra
