#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vra {

/// Per (problem size, m, strategy) gap statistics over valid records only.
struct GapSummary {
    int problem_size = 0;
    int m = 0;
    std::string strategy;
    std::optional<double> mean_gap;
    std::optional<double> std_gap;  // sample (n-1) standard deviation
    int valid_count = 0;
    int total_count = 0;
};

inline GapSummary summarize_gaps(const std::vector<std::optional<double>>& gaps) {
    GapSummary s;
    s.total_count = static_cast<int>(gaps.size());
    double sum = 0.0;
    for (const auto& g : gaps) {
        if (g) {
            ++s.valid_count;
            sum += *g;
        }
    }
    if (s.valid_count >= 1) {
        const double mean = sum / s.valid_count;
        s.mean_gap = mean;
        if (s.valid_count >= 2) {
            double ss = 0.0;
            for (const auto& g : gaps) {
                if (g) ss += (*g - mean) * (*g - mean);
            }
            s.std_gap = std::sqrt(ss / (s.valid_count - 1));
        }
    }
    return s;
}

struct PairFilterResult {
    std::vector<std::string> paired_ids;
    std::vector<std::pair<double, double>> pairs;  // (da, db), index-aligned with paired_ids
    struct Exclusion {
        std::string id;
        std::string reason;
    };
    std::vector<Exclusion> excluded;
};

/// Restricts two per-instance distance maps to the instances where BOTH
/// strategies produced a valid final route. Both maps must cover the same
/// instance ids.
inline PairFilterResult pair_filter(const std::map<std::string, std::optional<double>>& a,
                                    const std::map<std::string, std::optional<double>>& b,
                                    const std::string& a_name = "a",
                                    const std::string& b_name = "b") {
    if (a.size() != b.size()) throw std::invalid_argument("pair_filter: instance id mismatch");
    PairFilterResult out;
    for (const auto& [id, da] : a) {
        auto it = b.find(id);
        if (it == b.end()) throw std::invalid_argument("pair_filter: instance id mismatch: " + id);
        const auto& db = it->second;
        if (da && db) {
            out.paired_ids.push_back(id);
            out.pairs.emplace_back(*da, *db);
        } else if (!da && !db) {
            out.excluded.push_back({id, a_name + "+" + b_name + " invalid"});
        } else if (!da) {
            out.excluded.push_back({id, a_name + " invalid"});
        } else {
            out.excluded.push_back({id, b_name + " invalid"});
        }
    }
    return out;
}

struct PairedTestResult {
    std::optional<double> p_value;  // absent when degenerate (all differences zero)
    int n_pairs = 0;                // nonzero differences used
    double statistic = 0.0;         // W = min(W+, W-)
    std::string method;             // exact | normal_approximation | degenerate
    bool degenerate = false;
};

namespace stats_detail {

/// Ranks of |d| with mid-rank ties, scaled by 2 so every rank is integral.
inline std::vector<std::int64_t> scaled_ranks(const std::vector<double>& magnitudes) {
    const std::size_t n = magnitudes.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return magnitudes[i] < magnitudes[j]; });
    std::vector<std::int64_t> ranks(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && magnitudes[order[j + 1]] == magnitudes[order[i]]) ++j;
        // positions i..j share the average rank (i+1 + ... + j+1) / (j-i+1)
        const std::int64_t doubled = static_cast<std::int64_t>(i + 1 + j + 1);  // 2 * midrank
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
        i = j + 1;
    }
    return ranks;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace stats_detail

/// Two-sided paired Wilcoxon signed-rank test on x - y. Zero differences are
/// dropped; |d| ranks use mid-rank ties. Exact p by counting sign assignments
/// when the post-drop n is at most 20, otherwise a normal approximation with
/// tie-corrected variance and continuity correction.
inline PairedTestResult wilcoxon_signed_rank(const std::vector<double>& x,
                                             const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty()) {
        throw std::invalid_argument("wilcoxon_signed_rank: need equal-length nonempty samples");
    }
    std::vector<double> diffs;
    diffs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) diffs.push_back(d);
    }
    PairedTestResult result;
    result.n_pairs = static_cast<int>(diffs.size());
    if (diffs.empty()) {
        result.degenerate = true;
        result.method = "degenerate";
        return result;
    }

    const std::size_t n = diffs.size();
    std::vector<double> magnitudes(n);
    for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::abs(diffs[i]);
    const auto ranks2 = stats_detail::scaled_ranks(magnitudes);  // 2 * rank, integral

    std::int64_t w_plus2 = 0;
    std::int64_t total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += ranks2[i];
        if (diffs[i] > 0) w_plus2 += ranks2[i];
    }
    const std::int64_t w_minus2 = total2 - w_plus2;
    const std::int64_t w2 = std::min(w_plus2, w_minus2);
    result.statistic = static_cast<double>(w2) / 2.0;

    if (n <= 20) {
        // Count sign assignments by their scaled W+ value.
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(total2) + 1, 0);
        counts[0] = 1;
        std::int64_t reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reach += ranks2[i];
            for (std::int64_t s = reach; s >= ranks2[i]; --s) {
                counts[static_cast<std::size_t>(s)] +=
                    counts[static_cast<std::size_t>(s - ranks2[i])];
            }
        }
        std::uint64_t hits = 0;
        for (std::int64_t s = 0; s <= total2; ++s) {
            if (s <= w2 || s >= total2 - w2) hits += counts[static_cast<std::size_t>(s)];
        }
        result.p_value = static_cast<double>(hits) / std::pow(2.0, static_cast<double>(n));
        result.method = "exact";
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_term = 0.0;
        std::map<std::int64_t, int> groups;
        for (auto r : ranks2) ++groups[r];
        for (const auto& [rank, t] : groups) {
            if (t > 1) tie_term += static_cast<double>(t) * t * t - t;
        }
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double w = result.statistic;
        const double z = (w - mean + 0.5) / std::sqrt(var);
        result.p_value = std::clamp(2.0 * stats_detail::normal_cdf(z), 0.0, 1.0);
        result.method = "normal_approximation";
    }
    return result;
}

}  // namespace vra
