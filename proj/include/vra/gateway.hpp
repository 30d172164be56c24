#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vra/digest.hpp"
#include "vra/grammar.hpp"
#include "vra/instance.hpp"
#include "vra/prompts.hpp"
#include "vra/render.hpp"
#include "vra/rng.hpp"
#include "vra/routes.hpp"

namespace vra {

struct gateway_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct credential_error : gateway_error {
    using gateway_error::gateway_error;
};
struct transport_error : gateway_error {
    using gateway_error::gateway_error;
};
struct mock_misuse_error : gateway_error {
    using gateway_error::gateway_error;
};

/// Structured sidecar for the mock backend: the instance and the route sets
/// underlying the attached images (incumbent for the critic, one candidate
/// per image for the scorer). The live backend never sees it.
struct MockContext {
    Instance instance;
    std::vector<RouteSet> route_sets;
};

struct AgentRequest {
    AgentRole role = AgentRole::initializer;
    PromptText prompt;
    std::vector<RenderedImage> images;
    double temperature = 0.0;
    int sample_index = 0;
    std::string model_id;
    std::shared_ptr<const MockContext> mock_ctx;  // ignored by live backends
};

struct AgentReply {
    std::string text;
    std::int64_t latency_ms = 0;
    bool from_cache = false;
    std::string backend;  // live | mock
};

struct MockBehavior {
    double hallucination_rate = 0.0;  // probability of dropping one non-depot node
    enum class Improvement { best_improving, random } improvement_mode = Improvement::best_improving;
    std::uint64_t seed = 0;
};

/// Cache key: digest of everything that identifies the draw. Temperature is
/// quantized to 2 decimals; sample_index keeps ensemble draws distinct.
inline std::string cache_key(const AgentRequest& req) {
    char temp[16];
    std::snprintf(temp, sizeof(temp), "%.2f", req.temperature);
    std::string material = req.model_id;
    material += '\n';
    material += to_string(req.role);
    material += '\n';
    material += req.prompt.text;
    material += '\n';
    for (const auto& img : req.images) {
        material += img.content_hash;
        material += ',';
    }
    material += '\n';
    material += temp;
    material += '\n';
    material += std::to_string(req.sample_index);
    return sha256_hex(material);
}

/// Replies persisted as raw text under cache/<key>.txt. Writes go through a
/// temp file plus rename; concurrent writers of the same key produce
/// identical bytes, so last-writer-wins is harmless.
class ReplyCache {
  public:
    explicit ReplyCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::optional<std::string> load(const std::string& key) const {
        std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }

    void store(const std::string& key, const std::string& text) const {
        const auto final_path = dir_ / (key + ".txt");
        std::ostringstream suffix;
        suffix << std::this_thread::get_id();
        const auto tmp_path = dir_ / (key + "." + suffix.str() + ".tmp");
        {
            std::ofstream out(tmp_path, std::ios::binary);
            if (!out) throw std::runtime_error("cache: cannot write " + tmp_path.string());
            out << text;
        }
        std::filesystem::rename(tmp_path, final_path);
    }

  private:
    std::filesystem::path dir_;
};

class Backend {
  public:
    virtual ~Backend() = default;
    virtual std::string name() const = 0;
    virtual std::string invoke(const AgentRequest& req) = 0;
};

namespace mock_detail {

inline std::mt19937_64 derive_rng(const AgentRequest& req, const MockBehavior& behavior) {
    std::string material = "mock|";
    material += std::to_string(behavior.seed);
    material += '|';
    material += to_string(req.role);
    material += '|';
    material += std::to_string(req.sample_index);
    material += '|';
    material += instance_to_csv(req.mock_ctx->instance);
    for (const auto& rs : req.mock_ctx->route_sets) {
        material += '|';
        material += format_routes(rs);
    }
    return std::mt19937_64(sha256_seed(material));
}

/// Angular sweep around the depot into m balanced sectors, nearest-neighbor
/// order within each sector.
inline RouteSet sweep_initial(const Instance& inst, int m) {
    const int n = inst.n();
    std::vector<int> order;
    for (int i = 1; i < n; ++i) order.push_back(i);
    const Point depot = inst.depot();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double aa = std::atan2(inst.nodes[static_cast<std::size_t>(a)].y - depot.y,
                                     inst.nodes[static_cast<std::size_t>(a)].x - depot.x);
        const double ab = std::atan2(inst.nodes[static_cast<std::size_t>(b)].y - depot.y,
                                     inst.nodes[static_cast<std::size_t>(b)].x - depot.x);
        if (aa != ab) return aa < ab;
        return a < b;
    });

    RouteSet rs;
    rs.source = "initializer";
    const int total = static_cast<int>(order.size());
    const int base = total / m;
    const int extra = total % m;
    int cursor = 0;
    for (int r = 0; r < m; ++r) {
        const int take = base + (r < extra ? 1 : 0);
        std::vector<int> sector(order.begin() + cursor, order.begin() + cursor + take);
        cursor += take;

        std::vector<int> route{0};
        Point here = depot;
        std::vector<bool> used(sector.size(), false);
        for (int step = 0; step < take; ++step) {
            int best = -1;
            double best_d = 0.0;
            for (std::size_t k = 0; k < sector.size(); ++k) {
                if (used[k]) continue;
                const double dd = distance(here, inst.nodes[static_cast<std::size_t>(sector[k])]);
                if (best < 0 || dd < best_d - 1e-15 ||
                    (dd < best_d + 1e-15 && sector[k] < sector[static_cast<std::size_t>(best)])) {
                    // track the index into `sector` of the chosen node
                    best = static_cast<int>(k);
                    best_d = dd;
                }
            }
            used[static_cast<std::size_t>(best)] = true;
            route.push_back(sector[static_cast<std::size_t>(best)]);
            here = inst.nodes[static_cast<std::size_t>(sector[static_cast<std::size_t>(best)])];
        }
        route.push_back(0);
        rs.routes.push_back(std::move(route));
    }
    return rs;
}

/// Reconciles an incumbent to a complete m-route solution: duplicates keep
/// their first visit, missing nodes enter at the cheapest position.
inline RouteSet repair(const RouteSet& incumbent, const Instance& inst, int m) {
    const int n = inst.n();
    RouteSet rs;
    rs.source = "critic";
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int r = 0; r < m; ++r) {
        std::vector<int> route{0};
        if (r < incumbent.m()) {
            const auto& in = incumbent.routes[static_cast<std::size_t>(r)];
            for (std::size_t k = 1; k + 1 < in.size(); ++k) {
                const int node = in[k];
                if (node >= 1 && node < n && !seen[static_cast<std::size_t>(node)]) {
                    seen[static_cast<std::size_t>(node)] = true;
                    route.push_back(node);
                }
            }
        }
        route.push_back(0);
        rs.routes.push_back(std::move(route));
    }
    // overflow routes beyond m fold into the last route
    for (int r = m; r < incumbent.m(); ++r) {
        const auto& in = incumbent.routes[static_cast<std::size_t>(r)];
        for (std::size_t k = 1; k + 1 < in.size(); ++k) {
            const int node = in[k];
            if (node >= 1 && node < n && !seen[static_cast<std::size_t>(node)]) {
                seen[static_cast<std::size_t>(node)] = true;
                rs.routes.back().insert(rs.routes.back().end() - 1, node);
            }
        }
    }
    for (int node = 1; node < n; ++node) {
        if (seen[static_cast<std::size_t>(node)]) continue;
        int best_r = 0;
        std::size_t best_pos = 1;
        double best_delta = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
            const auto& route = rs.routes[static_cast<std::size_t>(r)];
            for (std::size_t pos = 1; pos < route.size(); ++pos) {
                const Point& a = inst.nodes[static_cast<std::size_t>(route[pos - 1])];
                const Point& b = inst.nodes[static_cast<std::size_t>(route[pos])];
                const Point& v = inst.nodes[static_cast<std::size_t>(node)];
                const double delta = distance(a, v) + distance(v, b) - distance(a, b);
                if (delta < best_delta - 1e-15) {
                    best_delta = delta;
                    best_r = r;
                    best_pos = pos;
                }
            }
        }
        auto& route = rs.routes[static_cast<std::size_t>(best_r)];
        route.insert(route.begin() + static_cast<std::ptrdiff_t>(best_pos), node);
    }
    return rs;
}

/// One intra-route 2-opt move; best-improving picks the largest gain, random
/// picks any reversal from the seeded stream.
inline void apply_two_opt(RouteSet& rs, const Instance& inst, MockBehavior::Improvement mode,
                          std::mt19937_64& rng) {
    if (mode == MockBehavior::Improvement::best_improving) {
        double best_delta = -1e-12;
        int br = -1;
        std::size_t bi = 0, bj = 0;
        for (int r = 0; r < rs.m(); ++r) {
            const auto& route = rs.routes[static_cast<std::size_t>(r)];
            for (std::size_t i = 1; i + 1 < route.size(); ++i) {
                for (std::size_t j = i + 1; j + 1 < route.size(); ++j) {
                    const auto& pa = inst.nodes[static_cast<std::size_t>(route[i - 1])];
                    const auto& pb = inst.nodes[static_cast<std::size_t>(route[i])];
                    const auto& pc = inst.nodes[static_cast<std::size_t>(route[j])];
                    const auto& pd = inst.nodes[static_cast<std::size_t>(route[j + 1])];
                    const double delta =
                        distance(pa, pc) + distance(pb, pd) - distance(pa, pb) - distance(pc, pd);
                    if (delta < best_delta) {
                        best_delta = delta;
                        br = r;
                        bi = i;
                        bj = j;
                    }
                }
            }
        }
        if (br >= 0) {
            auto& route = rs.routes[static_cast<std::size_t>(br)];
            std::reverse(route.begin() + static_cast<std::ptrdiff_t>(bi),
                         route.begin() + static_cast<std::ptrdiff_t>(bj) + 1);
        }
    } else {
        std::vector<int> eligible;
        for (int r = 0; r < rs.m(); ++r) {
            if (rs.routes[static_cast<std::size_t>(r)].size() >= 4) eligible.push_back(r);
        }
        if (eligible.empty()) return;
        const int r = eligible[uniform_below(rng, eligible.size())];
        auto& route = rs.routes[static_cast<std::size_t>(r)];
        const std::size_t interior = route.size() - 2;
        std::size_t i = 1 + uniform_below(rng, interior);
        std::size_t j = 1 + uniform_below(rng, interior);
        if (i > j) std::swap(i, j);
        if (i == j) return;
        std::reverse(route.begin() + static_cast<std::ptrdiff_t>(i),
                     route.begin() + static_cast<std::ptrdiff_t>(j) + 1);
    }
}

/// Removes one random visited non-depot node, producing the hallucination
/// shape of an incomplete route.
inline void drop_random_node(RouteSet& rs, std::mt19937_64& rng) {
    std::vector<std::pair<int, std::size_t>> positions;
    for (int r = 0; r < rs.m(); ++r) {
        const auto& route = rs.routes[static_cast<std::size_t>(r)];
        for (std::size_t k = 1; k + 1 < route.size(); ++k) positions.emplace_back(r, k);
    }
    if (positions.empty()) return;
    const auto [r, k] = positions[uniform_below(rng, positions.size())];
    auto& route = rs.routes[static_cast<std::size_t>(r)];
    route.erase(route.begin() + static_cast<std::ptrdiff_t>(k));
}

}  // namespace mock_detail

/// Deterministic offline stand-in for a vision chat model. Replies are pure
/// functions of (request, sidecar, behavior) and use the exact reply grammars.
class MockAgent : public Backend {
  public:
    explicit MockAgent(MockBehavior behavior = {}) : behavior_(behavior) {}

    std::string name() const override { return "mock"; }

    std::string invoke(const AgentRequest& req) override {
        if (!req.mock_ctx) throw mock_misuse_error("mock backend requires a MockContext sidecar");
        const auto& ctx = *req.mock_ctx;
        auto rng = mock_detail::derive_rng(req, behavior_);

        switch (req.role) {
            case AgentRole::initializer: {
                RouteSet rs = mock_detail::sweep_initial(ctx.instance, req.prompt.m);
                maybe_hallucinate(rs, rng);
                return format_routes(rs);
            }
            case AgentRole::critic: {
                if (ctx.route_sets.empty()) {
                    throw mock_misuse_error("mock critic requires the incumbent route set");
                }
                RouteSet rs = mock_detail::repair(ctx.route_sets.front(), ctx.instance, req.prompt.m);
                mock_detail::apply_two_opt(rs, ctx.instance, behavior_.improvement_mode, rng);
                maybe_hallucinate(rs, rng);
                return format_routes(rs);
            }
            case AgentRole::scorer: {
                if (ctx.route_sets.size() != req.images.size()) {
                    throw mock_misuse_error("mock scorer requires one route set per image");
                }
                std::string scores;
                int best_id = 1;
                double best_score = -1.0;
                for (std::size_t i = 0; i < ctx.route_sets.size(); ++i) {
                    const auto& rs = ctx.route_sets[i];
                    const bool complete = validate(rs, ctx.instance, rs.m()).valid;
                    const int crossings = std::min(crossing_count(rs, ctx.instance), 2);
                    const double score =
                        std::clamp(5.0 - (complete ? 0.0 : 3.0) - crossings, 1.0, 5.0);
                    if (!scores.empty()) scores += ", ";
                    scores += "image" + std::to_string(i + 1) + ": " + format_double(score);
                    if (score > best_score) {
                        best_score = score;
                        best_id = static_cast<int>(i + 1);
                    }
                }
                return "<<" + scores + ">>\n<<the best route: " + std::to_string(best_id) + ">>";
            }
        }
        throw mock_misuse_error("mock: unknown role");
    }

    const MockBehavior& behavior() const { return behavior_; }

  private:
    void maybe_hallucinate(RouteSet& rs, std::mt19937_64& rng) {
        if (behavior_.hallucination_rate <= 0.0) return;
        if (uniform_unit(rng) < behavior_.hallucination_rate) {
            mock_detail::drop_random_node(rs, rng);
        }
    }

    MockBehavior behavior_;
};

struct GatewayConfig {
    int max_in_flight = 4;
    int requests_per_minute = 0;  // 0 disables the limiter
    std::optional<std::filesystem::path> cache_dir;
};

/// Uniform entry point in front of a backend: persistent reply cache,
/// in-flight cap, and a request-rate limiter.
class Gateway {
  public:
    Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {})
        : backend_(std::move(backend)), config_(config),
          cache_(config_.cache_dir ? std::make_unique<ReplyCache>(*config_.cache_dir) : nullptr),
          slots_(config_.max_in_flight) {}

    AgentReply invoke(const AgentRequest& req) {
        if (req.images.empty()) throw gateway_error("request must attach at least one image");
        if (req.temperature < 0.0 || req.temperature > 2.0) {
            throw gateway_error("temperature outside [0, 2]");
        }
        if (req.sample_index < 0) throw gateway_error("sample_index must be >= 0");

        const std::string key = cache_key(req);
        if (cache_) {
            if (auto hit = cache_->load(key)) {
                return AgentReply{std::move(*hit), 0, true, backend_->name()};
            }
        }

        SlotGuard guard(slots_);
        wait_rate_limit();
        const auto t0 = std::chrono::steady_clock::now();
        std::string text = backend_->invoke(req);
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
        if (cache_) cache_->store(key, text);
        const bool mock = backend_->name() == "mock";
        return AgentReply{std::move(text), mock ? 0 : elapsed, false, backend_->name()};
    }

    Backend& backend() { return *backend_; }

  private:
    class Slots {
      public:
        explicit Slots(int cap) : available_(cap) {}
        void acquire() {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return available_ > 0; });
            --available_;
        }
        void release() {
            {
                std::lock_guard lock(mu_);
                ++available_;
            }
            cv_.notify_one();
        }

      private:
        std::mutex mu_;
        std::condition_variable cv_;
        int available_;
    };

    struct SlotGuard {
        explicit SlotGuard(Slots& s) : slots(s) { slots.acquire(); }
        ~SlotGuard() { slots.release(); }
        Slots& slots;
    };

    void wait_rate_limit() {
        if (config_.requests_per_minute <= 0) return;
        const auto interval =
            std::chrono::microseconds(60'000'000 / config_.requests_per_minute);
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard lock(rate_mu_);
            const auto now = std::chrono::steady_clock::now();
            next_slot_ = std::max(next_slot_, now);
            wake = next_slot_;
            next_slot_ += interval;
        }
        std::this_thread::sleep_until(wake);
    }

    std::shared_ptr<Backend> backend_;
    GatewayConfig config_;
    std::unique_ptr<ReplyCache> cache_;
    Slots slots_;
    std::mutex rate_mu_;
    std::chrono::steady_clock::time_point next_slot_{};
};

}  // namespace vra
