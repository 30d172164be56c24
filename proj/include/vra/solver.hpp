#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vra/instance.hpp"
#include "vra/routes.hpp"

namespace vra {

struct Neighborhoods {
    bool two_opt = true;
    bool or_opt = true;
    bool relocate = true;
    bool exchange = true;
};

struct SolverConfig {
    double time_limit = 120.0;  // seconds, wall-clock mode
    std::optional<std::int64_t> iteration_budget;  // penalization cycles; deterministic mode
    int m = 1;
    double gls_lambda = 0.1;
    Neighborhoods neighborhoods;
    std::uint64_t seed = 0;
};

namespace solver_detail {

using Matrix = std::vector<std::vector<double>>;

// Routes are kept as interior node sequences; the depot anchors are implicit.
using Interiors = std::vector<std::vector<int>>;

inline Interiors strip_depots(const RouteSet& rs) {
    Interiors interiors;
    interiors.reserve(rs.routes.size());
    for (const auto& route : rs.routes) {
        interiors.emplace_back(route.begin() + 1, route.end() - 1);
    }
    return interiors;
}

inline RouteSet attach_depots(const Interiors& interiors, std::string source) {
    RouteSet rs;
    rs.source = std::move(source);
    for (const auto& interior : interiors) {
        std::vector<int> route;
        route.reserve(interior.size() + 2);
        route.push_back(0);
        route.insert(route.end(), interior.begin(), interior.end());
        route.push_back(0);
        rs.routes.push_back(std::move(route));
    }
    return rs;
}

inline double route_cost(const std::vector<int>& interior, const Matrix& d) {
    if (interior.empty()) return 0.0;
    double cost = d[0][static_cast<std::size_t>(interior.front())];
    for (std::size_t k = 0; k + 1 < interior.size(); ++k) {
        cost += d[static_cast<std::size_t>(interior[k])][static_cast<std::size_t>(interior[k + 1])];
    }
    cost += d[static_cast<std::size_t>(interior.back())][0];
    return cost;
}

inline double total_cost(const Interiors& interiors, const Matrix& d) {
    double cost = 0.0;
    for (const auto& interior : interiors) cost += route_cost(interior, d);
    return cost;
}

}  // namespace solver_detail

/// Clarke-Wright savings adapted to a fixed route count: merge out-and-back
/// routes in descending-savings order until exactly m routes remain.
inline RouteSet solve_savings(const Instance& inst, int m) {
    const int n = inst.n();
    if (m < 1) throw std::invalid_argument("solve_savings: m must be >= 1");
    if (n <= m) throw std::invalid_argument("solve_savings: infeasible, need n >= m + 1");

    const auto d = distance_matrix(inst);

    std::vector<std::vector<int>> routes;  // interior sequences
    routes.reserve(static_cast<std::size_t>(n - 1));
    std::vector<int> route_of(static_cast<std::size_t>(n), -1);
    for (int i = 1; i < n; ++i) {
        route_of[static_cast<std::size_t>(i)] = static_cast<int>(routes.size());
        routes.push_back({i});
    }

    struct Saving {
        int i, j;
        double value;
    };
    std::vector<Saving> savings;
    savings.reserve(static_cast<std::size_t>((n - 1) * (n - 2) / 2));
    for (int i = 1; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            savings.push_back({i, j,
                               d[0][static_cast<std::size_t>(i)] + d[0][static_cast<std::size_t>(j)] -
                                   d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]});
        }
    }
    std::sort(savings.begin(), savings.end(), [](const Saving& a, const Saving& b) {
        if (a.value != b.value) return a.value > b.value;
        return std::pair(a.i, a.j) < std::pair(b.i, b.j);
    });

    int count = n - 1;
    auto merge = [&](int ri, int rj, int i, int j) {
        auto& a = routes[static_cast<std::size_t>(ri)];
        auto& b = routes[static_cast<std::size_t>(rj)];
        if (a.front() == i) std::reverse(a.begin(), a.end());  // i becomes tail
        if (b.back() == j) std::reverse(b.begin(), b.end());   // j becomes head
        for (int node : b) route_of[static_cast<std::size_t>(node)] = ri;
        a.insert(a.end(), b.begin(), b.end());
        b.clear();
        --count;
    };

    for (const auto& s : savings) {
        if (count <= m) break;
        const int ri = route_of[static_cast<std::size_t>(s.i)];
        const int rj = route_of[static_cast<std::size_t>(s.j)];
        if (ri == rj) continue;
        const auto& a = routes[static_cast<std::size_t>(ri)];
        const auto& b = routes[static_cast<std::size_t>(rj)];
        if (a.front() != s.i && a.back() != s.i) continue;  // i interior: not depot-adjacent
        if (b.front() != s.j && b.back() != s.j) continue;
        merge(ri, rj, s.i, s.j);
    }

    // Uncapacitated merges cannot get stuck, but keep a least-increase pass
    // for degenerate inputs.
    while (count > m) {
        double best_inc = std::numeric_limits<double>::infinity();
        int bi = -1, bj = -1, bri = -1, brj = -1;
        for (std::size_t ra = 0; ra < routes.size(); ++ra) {
            if (routes[ra].empty()) continue;
            for (std::size_t rb = 0; rb < routes.size(); ++rb) {
                if (ra == rb || routes[rb].empty()) continue;
                const int i = routes[ra].back();
                const int j = routes[rb].front();
                const double inc = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                                   d[static_cast<std::size_t>(i)][0] -
                                   d[0][static_cast<std::size_t>(j)];
                if (inc < best_inc - 1e-15) {
                    best_inc = inc;
                    bi = i;
                    bj = j;
                    bri = static_cast<int>(ra);
                    brj = static_cast<int>(rb);
                }
            }
        }
        if (bri < 0) break;
        merge(bri, brj, bi, bj);
    }

    solver_detail::Interiors kept;
    for (auto& r : routes) {
        if (!r.empty()) kept.push_back(std::move(r));
    }
    return solver_detail::attach_depots(kept, "reference");
}

namespace solver_detail {

struct Move {
    double delta_aug = 0.0;
    enum Kind { none, two_opt, relocate, or_opt, exchange } kind = none;
    int r1 = 0, i1 = 0, r2 = 0, i2 = 0, len = 1;
    bool reversed = false;
};

class GlsSearch {
  public:
    GlsSearch(Interiors routes, const Matrix& d, const SolverConfig& cfg)
        : routes_(std::move(routes)), d_(d), cfg_(cfg),
          penalty_(d.size(), std::vector<int>(d.size(), 0)) {}

    RouteSet run() {
        const auto deadline = std::chrono::steady_clock::now() +
                              std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(cfg_.time_limit));
        auto out_of_budget = [&](std::int64_t iter) {
            if (cfg_.iteration_budget) return iter >= *cfg_.iteration_budget;
            return std::chrono::steady_clock::now() >= deadline;
        };

        best_routes_ = routes_;
        best_true_ = total_cost(routes_, d_);
        double lambda_scale = 0.0;

        for (std::int64_t iter = 0; !out_of_budget(iter); ++iter) {
            // Best-improvement descent on the augmented objective.
            while (true) {
                const Move move = best_move(lambda_scale);
                if (move.kind == Move::none) break;
                apply(move);
                const double true_cost = total_cost(routes_, d_);
                if (true_cost < best_true_ - 1e-12) {
                    best_true_ = true_cost;
                    best_routes_ = routes_;
                }
                if (!cfg_.iteration_budget && std::chrono::steady_clock::now() >= deadline) break;
            }
            // Penalize the used edges of maximum utility length/(1+penalty),
            // then rescale the augmentation to the new local optimum.
            const double true_cost = total_cost(routes_, d_);
            int edges = 0;
            double max_util = -1.0;
            std::vector<std::pair<int, int>> argmax;
            for_each_edge([&](int a, int b) {
                ++edges;
                const double util =
                    d_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] /
                    (1.0 + penalty_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]);
                if (util > max_util + 1e-15) {
                    max_util = util;
                    argmax.assign(1, {a, b});
                } else if (util > max_util - 1e-15) {
                    argmax.emplace_back(a, b);
                }
            });
            if (edges == 0) break;
            for (auto [a, b] : argmax) {
                ++penalty_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                ++penalty_[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)];
            }
            lambda_scale = cfg_.gls_lambda * (true_cost / edges);
        }
        return attach_depots(best_routes_, "reference");
    }

  private:
    template <typename Fn>
    void for_each_edge(Fn&& fn) const {
        for (const auto& route : routes_) {
            if (route.empty()) continue;
            fn(0, route.front());
            for (std::size_t k = 0; k + 1 < route.size(); ++k) fn(route[k], route[k + 1]);
            fn(route.back(), 0);
        }
    }

    double cost(int a, int b, double lambda_scale) const {
        return d_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +
               lambda_scale * penalty_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }

    int at(const std::vector<int>& route, int pos) const {  // depot outside the interior
        if (pos < 0 || pos >= static_cast<int>(route.size())) return 0;
        return route[static_cast<std::size_t>(pos)];
    }

    Move best_move(double ls) const {
        Move best;
        best.delta_aug = -1e-12;  // strict improvement only
        auto consider = [&](Move m) {
            if (m.delta_aug < best.delta_aug) best = m;
        };

        const int R = static_cast<int>(routes_.size());
        if (cfg_.neighborhoods.two_opt) {
            for (int r = 0; r < R; ++r) {
                const auto& v = routes_[static_cast<std::size_t>(r)];
                const int k = static_cast<int>(v.size());
                for (int i = 0; i < k; ++i) {
                    for (int j = i + 1; j < k; ++j) {
                        const double delta = cost(at(v, i - 1), at(v, j), ls) +
                                             cost(at(v, i), at(v, j + 1), ls) -
                                             cost(at(v, i - 1), at(v, i), ls) -
                                             cost(at(v, j), at(v, j + 1), ls);
                        consider({delta, Move::two_opt, r, i, r, j, 1, false});
                    }
                }
            }
        }
        if (cfg_.neighborhoods.relocate) {
            for (int r1 = 0; r1 < R; ++r1) {
                const auto& v1 = routes_[static_cast<std::size_t>(r1)];
                for (int i = 0; i < static_cast<int>(v1.size()); ++i) {
                    const int node = v1[static_cast<std::size_t>(i)];
                    const double removal = cost(at(v1, i - 1), at(v1, i + 1), ls) -
                                           cost(at(v1, i - 1), node, ls) -
                                           cost(node, at(v1, i + 1), ls);
                    for (int r2 = 0; r2 < R; ++r2) {
                        const auto& v2 = routes_[static_cast<std::size_t>(r2)];
                        const int limit = static_cast<int>(v2.size());
                        for (int p = 0; p <= limit; ++p) {
                            if (r1 == r2 && (p == i || p == i + 1)) continue;
                            // gap p sits between v2[p-1] and v2[p]; for the
                            // same route those indices never touch the moved
                            // node once the no-op gaps are skipped
                            const int a = at(v2, p - 1);
                            const int b = at(v2, p);
                            const double insertion =
                                cost(a, node, ls) + cost(node, b, ls) - cost(a, b, ls);
                            consider({removal + insertion, Move::relocate, r1, i, r2, p, 1, false});
                        }
                    }
                }
            }
        }
        if (cfg_.neighborhoods.or_opt) {
            for (int r1 = 0; r1 < R; ++r1) {
                const auto& v1 = routes_[static_cast<std::size_t>(r1)];
                for (int len = 2; len <= 3; ++len) {
                    for (int i = 0; i + len <= static_cast<int>(v1.size()); ++i) {
                        const int first = v1[static_cast<std::size_t>(i)];
                        const int last = v1[static_cast<std::size_t>(i + len - 1)];
                        const double removal = cost(at(v1, i - 1), at(v1, i + len), ls) -
                                               cost(at(v1, i - 1), first, ls) -
                                               cost(last, at(v1, i + len), ls);
                        for (int r2 = 0; r2 < R; ++r2) {
                            const auto& v2 = routes_[static_cast<std::size_t>(r2)];
                            const int limit = static_cast<int>(v2.size());
                            for (int p = 0; p <= limit; ++p) {
                                if (r1 == r2 && p >= i && p <= i + len) continue;
                                const int a = at(v2, p - 1);
                                const int b = at(v2, p);
                                for (int rev = 0; rev < 2; ++rev) {
                                    const int head = rev ? last : first;
                                    const int tail = rev ? first : last;
                                    const double insertion =
                                        cost(a, head, ls) + cost(tail, b, ls) - cost(a, b, ls);
                                    consider({removal + insertion, Move::or_opt, r1, i, r2, p, len,
                                              rev == 1});
                                }
                            }
                        }
                    }
                }
            }
        }
        if (cfg_.neighborhoods.exchange) {
            for (int r1 = 0; r1 < R; ++r1) {
                const auto& v1 = routes_[static_cast<std::size_t>(r1)];
                for (int i = 0; i < static_cast<int>(v1.size()); ++i) {
                    for (int r2 = r1; r2 < R; ++r2) {
                        const auto& v2 = routes_[static_cast<std::size_t>(r2)];
                        for (int j = r1 == r2 ? i + 1 : 0; j < static_cast<int>(v2.size()); ++j) {
                            const int x = v1[static_cast<std::size_t>(i)];
                            const int y = v2[static_cast<std::size_t>(j)];
                            double delta;
                            if (r1 == r2 && j == i + 1) {
                                delta = cost(at(v1, i - 1), y, ls) + cost(x, at(v1, j + 1), ls) -
                                        cost(at(v1, i - 1), x, ls) - cost(y, at(v1, j + 1), ls);
                            } else {
                                delta = cost(at(v1, i - 1), y, ls) + cost(y, at(v1, i + 1), ls) -
                                        cost(at(v1, i - 1), x, ls) - cost(x, at(v1, i + 1), ls) +
                                        cost(at(v2, j - 1), x, ls) + cost(x, at(v2, j + 1), ls) -
                                        cost(at(v2, j - 1), y, ls) - cost(y, at(v2, j + 1), ls);
                            }
                            consider({delta, Move::exchange, r1, i, r2, j, 1, false});
                        }
                    }
                }
            }
        }
        return best;
    }

    void apply(const Move& m) {
        auto& v1 = routes_[static_cast<std::size_t>(m.r1)];
        auto& v2 = routes_[static_cast<std::size_t>(m.r2)];
        switch (m.kind) {
            case Move::two_opt:
                std::reverse(v1.begin() + m.i1, v1.begin() + m.i2 + 1);
                break;
            case Move::relocate: {
                const int node = v1[static_cast<std::size_t>(m.i1)];
                v1.erase(v1.begin() + m.i1);
                int p = m.i2;
                if (m.r1 == m.r2 && p > m.i1) --p;
                v2.insert(v2.begin() + p, node);
                break;
            }
            case Move::or_opt: {
                std::vector<int> seg(v1.begin() + m.i1, v1.begin() + m.i1 + m.len);
                if (m.reversed) std::reverse(seg.begin(), seg.end());
                v1.erase(v1.begin() + m.i1, v1.begin() + m.i1 + m.len);
                int p = m.i2;
                if (m.r1 == m.r2 && p > m.i1) p -= m.len;
                v2.insert(v2.begin() + p, seg.begin(), seg.end());
                break;
            }
            case Move::exchange:
                std::swap(v1[static_cast<std::size_t>(m.i1)], v2[static_cast<std::size_t>(m.i2)]);
                break;
            case Move::none:
                break;
        }
    }

    Interiors routes_;
    const Matrix& d_;
    SolverConfig cfg_;
    std::vector<std::vector<int>> penalty_;
    Interiors best_routes_;
    double best_true_ = 0.0;
};

}  // namespace solver_detail

/// Guided local search over distance plus accumulating edge penalties.
/// Returns the best true-objective solution encountered, never worse than
/// the starting point.
inline RouteSet improve_gls(const RouteSet& start, const Instance& inst, const SolverConfig& cfg) {
    if (!validate(start, inst, start.m()).valid) {
        throw std::invalid_argument("improve_gls: start solution is invalid");
    }
    if (!(cfg.gls_lambda > 0)) throw std::invalid_argument("improve_gls: gls_lambda must be > 0");
    if (!(cfg.time_limit > 0) && !cfg.iteration_budget) {
        throw std::invalid_argument("improve_gls: time_limit must be > 0");
    }
    const auto d = distance_matrix(inst);
    solver_detail::GlsSearch search(solver_detail::strip_depots(start), d, cfg);
    return search.run();
}

namespace solver_detail {

// Optimal depot-anchored tour over the node subset encoded by `mask`
// (bit k <-> node k+1), by lexicographic permutation sweep. Among equal-cost
// tours the first-enumerated, i.e. lexicographically smallest, wins.
inline std::pair<double, std::vector<int>> best_block_tour(std::uint32_t mask, const Matrix& d,
                                                           std::map<std::uint32_t, std::pair<double, std::vector<int>>>& memo) {
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;

    std::vector<int> nodes;
    for (int bit = 0; bit < 31; ++bit) {
        if (mask & (1u << bit)) nodes.push_back(bit + 1);
    }
    std::vector<int> perm = nodes;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> best_perm;
    do {
        double cost = d[0][static_cast<std::size_t>(perm.front())];
        for (std::size_t k = 0; k + 1 < perm.size(); ++k) {
            cost += d[static_cast<std::size_t>(perm[k])][static_cast<std::size_t>(perm[k + 1])];
        }
        cost += d[static_cast<std::size_t>(perm.back())][0];
        if (cost < best_cost - 1e-12) {
            best_cost = cost;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    auto result = std::make_pair(best_cost, std::move(best_perm));
    memo.emplace(mask, result);
    return result;
}

struct PartitionResult {
    double cost = std::numeric_limits<double>::infinity();
    Interiors blocks;
};

inline PartitionResult best_partition(std::uint32_t mask, int blocks_left, const Matrix& d,
                                      std::map<std::uint32_t, std::pair<double, std::vector<int>>>& tour_memo) {
    if (mask == 0) return {0.0, {}};
    if (blocks_left == 0) return {};

    PartitionResult best;
    const std::uint32_t low = mask & (~mask + 1);
    // every submask of `mask` containing the lowest bit
    for (std::uint32_t rest = mask ^ low;;) {
        const std::uint32_t sub = rest | low;
        auto [tour_cost, tour] = best_block_tour(sub, d, tour_memo);
        PartitionResult tail = best_partition(mask ^ sub, blocks_left - 1, d, tour_memo);
        if (tail.cost < std::numeric_limits<double>::infinity()) {
            const double cost = tour_cost + tail.cost;
            Interiors blocks;
            blocks.push_back(tour);
            blocks.insert(blocks.end(), tail.blocks.begin(), tail.blocks.end());
            if (cost < best.cost - 1e-12 ||
                (cost < best.cost + 1e-12 && blocks < best.blocks)) {
                best = {cost, std::move(blocks)};
            }
        }
        if (rest == 0) break;
        rest = (rest - 1) & (mask ^ low);
    }
    return best;
}

}  // namespace solver_detail

/// Globally minimum total-distance route set for n <= 10: set partitions of
/// the non-depot nodes into at most m nonempty blocks, optimal tour per
/// block, padded with empty routes up to m.
inline RouteSet solve_exact(const Instance& inst, int m) {
    const int n = inst.n();
    if (m < 1) throw std::invalid_argument("solve_exact: m must be >= 1");
    if (n > 10) throw std::invalid_argument("solve_exact: n must be <= 10");
    if (n <= 1) throw std::invalid_argument("solve_exact: need at least one non-depot node");

    const auto d = distance_matrix(inst);
    std::map<std::uint32_t, std::pair<double, std::vector<int>>> tour_memo;
    const std::uint32_t full = (1u << (n - 1)) - 1;
    auto result = solver_detail::best_partition(full, std::min(m, n - 1), d, tour_memo);

    solver_detail::Interiors blocks = result.blocks;
    while (static_cast<int>(blocks.size()) < m) blocks.push_back({});
    return solver_detail::attach_depots(blocks, "exact");
}

}  // namespace vra
