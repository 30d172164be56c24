#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vra/instance.hpp"

namespace vra {

/// A set of depot-anchored routes, one per salesman. Every route begins and
/// ends at node 0; a route of just [0, 0] is an unused salesman.
struct RouteSet {
    std::vector<std::vector<int>> routes;
    std::string source;  // initializer | critic-iteration-k | reference | exact | ...

    int m() const { return static_cast<int>(routes.size()); }

    friend bool operator==(const RouteSet& a, const RouteSet& b) { return a.routes == b.routes; }
};

inline RouteSet make_route_set(std::vector<std::vector<int>> routes, std::string source = {}) {
    return RouteSet{std::move(routes), std::move(source)};
}

/// Structural defects of a route set against an instance. Defects are data,
/// not errors: an invalid route set still renders and feeds back into the
/// agent loop.
struct ValidationReport {
    bool valid = false;
    std::set<int> missing;             // non-depot nodes never visited
    std::set<int> duplicated;          // nodes visited more than once
    std::vector<int> malformed_routes; // routes violating depot anchoring or index range
    bool wrong_route_count = false;
    std::vector<int> empty_routes;     // [0,0] routes; flagged, not invalidating
};

inline ValidationReport validate(const RouteSet& rs, const Instance& inst, int m) {
    ValidationReport report;
    const int n = inst.n();
    report.wrong_route_count = rs.m() != m;

    std::vector<int> visits(static_cast<std::size_t>(std::max(n, 1)), 0);
    for (int r = 0; r < rs.m(); ++r) {
        const auto& route = rs.routes[static_cast<std::size_t>(r)];
        bool malformed = route.size() < 2 || route.front() != 0 || route.back() != 0;
        for (std::size_t k = 1; k + 1 < route.size(); ++k) {
            const int node = route[k];
            if (node < 1 || node >= n) {
                malformed = true;
            } else {
                ++visits[static_cast<std::size_t>(node)];
            }
        }
        if (malformed) report.malformed_routes.push_back(r);
        if (route.size() == 2 && route.front() == 0 && route.back() == 0) {
            report.empty_routes.push_back(r);
        }
    }
    for (int node = 1; node < n; ++node) {
        if (visits[static_cast<std::size_t>(node)] == 0) report.missing.insert(node);
        if (visits[static_cast<std::size_t>(node)] > 1) report.duplicated.insert(node);
    }
    report.valid = !report.wrong_route_count && report.missing.empty() &&
                   report.duplicated.empty() && report.malformed_routes.empty();
    return report;
}

/// Sum of consecutive-pair Euclidean distances over all routes, or nullopt
/// when the route set is invalid. The absent value propagates as "excluded"
/// through gap computation and the statistics.
inline std::optional<double> total_distance(const RouteSet& rs, const Instance& inst) {
    if (!validate(rs, inst, rs.m()).valid) return std::nullopt;
    double total = 0.0;
    for (const auto& route : rs.routes) {
        for (std::size_t k = 0; k + 1 < route.size(); ++k) {
            total += distance(inst.nodes[static_cast<std::size_t>(route[k])],
                              inst.nodes[static_cast<std::size_t>(route[k + 1])]);
        }
    }
    return total;
}

/// 100 * (candidate - reference) / reference. Negative means the candidate
/// beat the reference.
inline double gap_percent(double candidate, double reference) {
    if (!(reference > 0)) throw std::invalid_argument("gap_percent: reference must be > 0");
    return 100.0 * (candidate - reference) / reference;
}

inline std::optional<double> gap_percent(std::optional<double> candidate, double reference) {
    if (!candidate) return std::nullopt;
    return gap_percent(*candidate, reference);
}

/// Number of unordered pairs of non-adjacent segments (across all routes)
/// that properly cross. Segments sharing a node index are adjacent and never
/// counted, which covers both consecutive edges and the shared depot.
inline int crossing_count(const RouteSet& rs, const Instance& inst) {
    struct Segment {
        int a, b;
    };
    std::vector<Segment> segments;
    for (const auto& route : rs.routes) {
        for (std::size_t k = 0; k + 1 < route.size(); ++k) {
            segments.push_back({route[k], route[k + 1]});
        }
    }
    int crossings = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        for (std::size_t j = i + 1; j < segments.size(); ++j) {
            const auto& s = segments[i];
            const auto& t = segments[j];
            if (s.a == t.a || s.a == t.b || s.b == t.a || s.b == t.b) continue;
            if (segments_cross(inst.nodes[static_cast<std::size_t>(s.a)],
                               inst.nodes[static_cast<std::size_t>(s.b)],
                               inst.nodes[static_cast<std::size_t>(t.a)],
                               inst.nodes[static_cast<std::size_t>(t.b)])) {
                ++crossings;
            }
        }
    }
    return crossings;
}

}  // namespace vra
