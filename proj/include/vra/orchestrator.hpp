#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vra/gateway.hpp"
#include "vra/grammar.hpp"
#include "vra/instance.hpp"
#include "vra/prompts.hpp"
#include "vra/render.hpp"
#include "vra/routes.hpp"

namespace vra {

struct StrategyConfig {
    enum class Kind { zero_shot, multi_agent_1, multi_agent_2 };
    Kind strategy = Kind::zero_shot;
    int max_iterations = 10;
    int ensemble_size = 7;
    double critic_temperature = 0.7;
    double initializer_temperature = 0.0;
    enum class ReturnPolicy { best_valid, last_valid };
    ReturnPolicy return_policy = ReturnPolicy::best_valid;
    int m = 1;
    std::string model_id = "mock";
};

inline std::string to_string(StrategyConfig::Kind kind) {
    switch (kind) {
        case StrategyConfig::Kind::zero_shot: return "zero_shot";
        case StrategyConfig::Kind::multi_agent_1: return "multi_agent_1";
        case StrategyConfig::Kind::multi_agent_2: return "multi_agent_2";
    }
    return "unknown";
}

inline StrategyConfig::Kind strategy_from_string(const std::string& name) {
    if (name == "zero_shot") return StrategyConfig::Kind::zero_shot;
    if (name == "multi_agent_1") return StrategyConfig::Kind::multi_agent_1;
    if (name == "multi_agent_2") return StrategyConfig::Kind::multi_agent_2;
    throw std::invalid_argument("unknown strategy: " + name);
}

/// One gateway call, with everything needed to replay it.
struct AgentExchange {
    AgentRole role = AgentRole::initializer;
    int sample_index = 0;
    double temperature = 0.0;
    std::string prompt_text;
    std::vector<std::string> image_hashes;
    std::string reply_text;
    bool from_cache = false;
    std::string backend;
    std::int64_t latency_ms = 0;
    std::string parse_status;  // ok | parse_failure
    std::string note;
};

/// One proposed route set (or parse failure) with its validity and distance.
struct CandidateRecord {
    std::optional<RouteSet> routes;
    std::vector<ParseDefect> defects;
    bool valid = false;
    std::optional<double> distance;
    std::string image_hash;  // rendering of this candidate; empty for parse failures
    RenderedImage image;     // transient bytes; dropped before the record is returned
};

struct IterationRecord {
    int index = 0;  // 0 is the initializer step, 1.. are critic iterations
    std::vector<AgentExchange> exchanges;
    std::vector<CandidateRecord> candidates;
    int selected = -1;  // index into candidates; -1 when nothing was selectable
    std::string selected_image;
};

struct ExperimentRecord {
    std::string instance_id;
    StrategyConfig config;
    std::string style_hash;
    std::vector<IterationRecord> iterations;
    std::optional<RouteSet> final_routes;
    std::optional<double> final_distance;
    double reference_distance = 0.0;  // 0 until a reference is attached
    std::optional<double> gap;
    double wall_time_seconds = 0.0;
    bool failed = false;
    std::string failure;
};

using ImageSink = std::function<void(const std::string& stage, const RenderedImage&)>;

namespace orchestrator_detail {

struct LoopState {
    const Instance& inst;
    const StrategyConfig& cfg;
    Gateway& gateway;
    const RenderStyle& style;
    const ImageSink& sink;
    ExperimentRecord record;

    std::optional<RouteSet> incumbent;
    RenderedImage incumbent_image;  // rendering fed to the next critic call

    // incumbents in selection order, for the last_valid return policy
    std::vector<std::pair<double, RouteSet>> valid_incumbents;
    // every valid candidate seen, for the best_valid return policy
    std::vector<std::pair<double, RouteSet>> valid_candidates;
};

inline void emit(const ImageSink& sink, const std::string& stage, const RenderedImage& img) {
    if (sink) sink(stage, img);
}

inline CandidateRecord make_candidate(LoopState& state, const RouteParseOutcome& parsed,
                                      const std::string& stage) {
    CandidateRecord cand;
    if (parsed.ok()) {
        RouteSet rs = *parsed.routes;
        cand.valid = validate(rs, state.inst, state.cfg.m).valid;
        cand.distance = cand.valid ? total_distance(rs, state.inst) : std::nullopt;
        cand.image = render_solution(state.inst, rs, state.style);
        emit(state.sink, stage, cand.image);
        cand.image_hash = cand.image.content_hash;
        cand.routes = std::move(rs);
        if (cand.distance) {
            state.valid_candidates.emplace_back(*cand.distance, *cand.routes);
        }
    } else {
        cand.defects = parsed.defects;
    }
    return cand;
}

inline AgentExchange record_exchange(const AgentRequest& req, const AgentReply& reply,
                                     bool parsed_ok, std::string note = {}) {
    AgentExchange ex;
    ex.role = req.role;
    ex.sample_index = req.sample_index;
    ex.temperature = req.temperature;
    ex.prompt_text = req.prompt.text;
    for (const auto& img : req.images) ex.image_hashes.push_back(img.content_hash);
    ex.reply_text = reply.text;
    ex.from_cache = reply.from_cache;
    ex.backend = reply.backend;
    ex.latency_ms = reply.latency_ms;
    ex.parse_status = parsed_ok ? "ok" : "parse_failure";
    ex.note = std::move(note);
    return ex;
}

inline std::shared_ptr<const MockContext> make_ctx(const Instance& inst,
                                                   std::vector<RouteSet> route_sets) {
    auto ctx = std::make_shared<MockContext>();
    ctx->instance = inst;
    ctx->route_sets = std::move(route_sets);
    return ctx;
}

/// Initializer step: renders the bare instance and proposes the first
/// candidate. This is iteration 0 for every strategy.
inline void run_initializer(LoopState& state) {
    const RenderedImage instance_image = render_instance(state.inst, state.style);
    emit(state.sink, "instance", instance_image);
    state.incumbent_image = instance_image;

    AgentRequest req;
    req.role = AgentRole::initializer;
    req.prompt = initializer_prompt(state.cfg.m);
    req.images = {instance_image};
    req.temperature = state.cfg.initializer_temperature;
    req.sample_index = 0;
    req.model_id = state.cfg.model_id;
    req.mock_ctx = make_ctx(state.inst, {});

    const AgentReply reply = state.gateway.invoke(req);
    auto parsed = parse_routes(reply.text, state.cfg.m, state.inst.n());

    IterationRecord iteration;
    iteration.index = 0;
    iteration.exchanges.push_back(record_exchange(req, reply, parsed.ok()));
    CandidateRecord cand = make_candidate(state, parsed, "iter000_cand00");
    if (cand.routes) {
        state.incumbent = cand.routes;
        state.incumbent_image = cand.image;
        if (cand.distance) state.valid_incumbents.emplace_back(*cand.distance, *cand.routes);
    }
    iteration.selected = cand.routes ? 0 : -1;
    iteration.selected_image = cand.image_hash;
    iteration.candidates.push_back(std::move(cand));
    state.record.iterations.push_back(std::move(iteration));
}

inline AgentRequest critic_request(LoopState& state, int sample_index) {
    AgentRequest req;
    req.role = AgentRole::critic;
    req.prompt = critic_prompt(state.cfg.m);
    req.images = {state.incumbent_image};
    req.temperature = state.cfg.critic_temperature;
    req.sample_index = sample_index;
    req.model_id = state.cfg.model_id;
    std::vector<RouteSet> ctx_routes;
    if (state.incumbent) ctx_routes.push_back(*state.incumbent);
    req.mock_ctx = make_ctx(state.inst, std::move(ctx_routes));
    return req;
}

inline std::string stage_name(int iteration, int candidate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "iter%03d_cand%02d", iteration, candidate);
    return buf;
}

inline void adopt_selection(LoopState& state, IterationRecord& iteration) {
    if (iteration.selected < 0) return;
    auto& cand = iteration.candidates[static_cast<std::size_t>(iteration.selected)];
    iteration.selected_image = cand.image_hash;
    if (cand.routes) {
        // invalid selections propagate: the critic is the repair mechanism
        state.incumbent = cand.routes;
        state.incumbent_image = cand.image;
        if (cand.distance) state.valid_incumbents.emplace_back(*cand.distance, *cand.routes);
    }
}

inline void drop_transient_images(ExperimentRecord& record) {
    for (auto& iteration : record.iterations) {
        for (auto& cand : iteration.candidates) cand.image = RenderedImage{};
    }
}

inline void finish(LoopState& state) {
    auto& record = state.record;
    if (state.cfg.return_policy == StrategyConfig::ReturnPolicy::best_valid) {
        const std::pair<double, RouteSet>* best = nullptr;
        for (const auto& entry : state.valid_candidates) {
            if (best == nullptr || entry.first < best->first - 1e-15) best = &entry;
        }
        if (best != nullptr) {
            record.final_routes = best->second;
            record.final_distance = best->first;
        }
    } else {
        if (!state.valid_incumbents.empty()) {
            record.final_routes = state.valid_incumbents.back().second;
            record.final_distance = state.valid_incumbents.back().first;
        }
    }
}

}  // namespace orchestrator_detail

/// Single initializer call on the bare instance image; the one candidate is
/// the final answer (possibly invalid, hence excluded downstream).
inline ExperimentRecord run_zero_shot(const Instance& inst, const StrategyConfig& cfg, Gateway& gw,
                                      const RenderStyle& style = {}, const ImageSink& sink = {}) {
    if (cfg.strategy != StrategyConfig::Kind::zero_shot) {
        throw std::invalid_argument("run_zero_shot: wrong strategy kind");
    }
    orchestrator_detail::LoopState state{inst, cfg, gw, style, sink, {}};
    state.record.instance_id = inst.id;
    state.record.config = cfg;
    state.record.style_hash = style_hash(style);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        orchestrator_detail::run_initializer(state);
        orchestrator_detail::finish(state);
    } catch (const gateway_error& e) {
        state.record.failed = true;
        state.record.failure = e.what();
    }
    state.record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    orchestrator_detail::drop_transient_images(state.record);
    return state.record;
}

/// Initializer, then per iteration: an ensemble of critic samples, one scorer
/// call over the candidate images, and adoption of the highest-scored
/// candidate as the next incumbent (valid or not).
inline ExperimentRecord run_multi_agent_1(const Instance& inst, const StrategyConfig& cfg,
                                          Gateway& gw, const RenderStyle& style = {},
                                          const ImageSink& sink = {}) {
    if (cfg.strategy != StrategyConfig::Kind::multi_agent_1) {
        throw std::invalid_argument("run_multi_agent_1: wrong strategy kind");
    }
    if (cfg.ensemble_size < 2) {
        throw std::invalid_argument("run_multi_agent_1: ensemble_size must be >= 2");
    }
    if (cfg.max_iterations < 1) {
        throw std::invalid_argument("run_multi_agent_1: max_iterations must be >= 1");
    }
    orchestrator_detail::LoopState state{inst, cfg, gw, style, sink, {}};
    state.record.instance_id = inst.id;
    state.record.config = cfg;
    state.record.style_hash = style_hash(style);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        orchestrator_detail::run_initializer(state);

        for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
            IterationRecord iteration;
            iteration.index = iter;

            // the ensemble draws are independent samples; fan out through the
            // gateway's in-flight cap
            std::vector<AgentRequest> requests;
            requests.reserve(static_cast<std::size_t>(cfg.ensemble_size));
            for (int e = 0; e < cfg.ensemble_size; ++e) {
                requests.push_back(orchestrator_detail::critic_request(state, e));
            }
            std::vector<std::future<AgentReply>> futures;
            futures.reserve(requests.size());
            for (auto& req : requests) {
                futures.push_back(std::async(std::launch::async,
                                             [&gw, &req]() { return gw.invoke(req); }));
            }
            std::vector<AgentReply> replies(requests.size());
            std::exception_ptr failure;
            for (std::size_t e = 0; e < futures.size(); ++e) {
                try {
                    replies[e] = futures[e].get();
                } catch (...) {
                    if (!failure) failure = std::current_exception();
                }
            }
            if (failure) std::rethrow_exception(failure);

            std::vector<int> scoreable;  // candidate indices with a parsed route set
            for (std::size_t e = 0; e < replies.size(); ++e) {
                auto parsed = parse_routes(replies[e].text, cfg.m, inst.n());
                iteration.exchanges.push_back(
                    orchestrator_detail::record_exchange(requests[e], replies[e], parsed.ok()));
                CandidateRecord cand = orchestrator_detail::make_candidate(
                    state, parsed, orchestrator_detail::stage_name(iter, static_cast<int>(e)));
                if (cand.routes) scoreable.push_back(static_cast<int>(e));
                iteration.candidates.push_back(std::move(cand));
            }

            if (scoreable.size() >= 2) {
                const int k = static_cast<int>(scoreable.size());
                AgentRequest req;
                req.role = AgentRole::scorer;
                req.prompt = scorer_prompt(k);
                req.temperature = 0.0;
                req.sample_index = 0;
                req.model_id = cfg.model_id;
                std::vector<RouteSet> ctx_routes;
                for (int idx : scoreable) {
                    const auto& cand = iteration.candidates[static_cast<std::size_t>(idx)];
                    req.images.push_back(cand.image);
                    ctx_routes.push_back(*cand.routes);
                }
                req.mock_ctx = orchestrator_detail::make_ctx(inst, std::move(ctx_routes));

                const AgentReply reply = gw.invoke(req);
                auto parsed_scores = parse_scores(reply.text, k);
                std::string note;
                if (parsed_scores.ok()) {
                    if (!parsed_scores.board->best_was_explicit) note = "fallback_argmax";
                    iteration.selected = scoreable[static_cast<std::size_t>(
                        parsed_scores.board->best_id - 1)];
                } else {
                    note = "scorer_parse_failure_fallback_first";
                    iteration.selected = scoreable.front();
                }
                iteration.exchanges.push_back(orchestrator_detail::record_exchange(
                    req, reply, parsed_scores.ok(), std::move(note)));
            } else if (scoreable.size() == 1) {
                // too few candidates to rank: degrade to the single sample
                iteration.selected = scoreable.front();
                iteration.exchanges.back().note = "degraded_single_candidate";
            } else {
                iteration.selected = -1;
            }
            orchestrator_detail::adopt_selection(state, iteration);
            state.record.iterations.push_back(std::move(iteration));
        }
        orchestrator_detail::finish(state);
    } catch (const gateway_error& e) {
        state.record.failed = true;
        state.record.failure = e.what();
    }
    state.record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    orchestrator_detail::drop_transient_images(state.record);
    return state.record;
}

/// Initializer, then one critic call per iteration, each fed with the
/// rendering of the previous candidate (valid or not).
inline ExperimentRecord run_multi_agent_2(const Instance& inst, const StrategyConfig& cfg,
                                          Gateway& gw, const RenderStyle& style = {},
                                          const ImageSink& sink = {}) {
    if (cfg.strategy != StrategyConfig::Kind::multi_agent_2) {
        throw std::invalid_argument("run_multi_agent_2: wrong strategy kind");
    }
    if (cfg.max_iterations < 1) {
        throw std::invalid_argument("run_multi_agent_2: max_iterations must be >= 1");
    }
    orchestrator_detail::LoopState state{inst, cfg, gw, style, sink, {}};
    state.record.instance_id = inst.id;
    state.record.config = cfg;
    state.record.style_hash = style_hash(style);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        orchestrator_detail::run_initializer(state);

        for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
            IterationRecord iteration;
            iteration.index = iter;

            AgentRequest req = orchestrator_detail::critic_request(state, 0);
            const AgentReply reply = gw.invoke(req);
            auto parsed = parse_routes(reply.text, cfg.m, inst.n());
            iteration.exchanges.push_back(
                orchestrator_detail::record_exchange(req, reply, parsed.ok()));
            CandidateRecord cand = orchestrator_detail::make_candidate(
                state, parsed, orchestrator_detail::stage_name(iter, 0));
            const bool parsed_ok = cand.routes.has_value();
            iteration.candidates.push_back(std::move(cand));
            // parse failures leave the incumbent in place: the loop continues
            // with the last renderable candidate
            iteration.selected = parsed_ok ? 0 : -1;
            orchestrator_detail::adopt_selection(state, iteration);
            state.record.iterations.push_back(std::move(iteration));
        }
        orchestrator_detail::finish(state);
    } catch (const gateway_error& e) {
        state.record.failed = true;
        state.record.failure = e.what();
    }
    state.record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    orchestrator_detail::drop_transient_images(state.record);
    return state.record;
}

inline ExperimentRecord run_strategy(const Instance& inst, const StrategyConfig& cfg, Gateway& gw,
                                     const RenderStyle& style = {}, const ImageSink& sink = {}) {
    switch (cfg.strategy) {
        case StrategyConfig::Kind::zero_shot: return run_zero_shot(inst, cfg, gw, style, sink);
        case StrategyConfig::Kind::multi_agent_1:
            return run_multi_agent_1(inst, cfg, gw, style, sink);
        case StrategyConfig::Kind::multi_agent_2:
            return run_multi_agent_2(inst, cfg, gw, style, sink);
    }
    throw std::invalid_argument("run_strategy: unknown strategy");
}

/// Attaches the reference distance and derives the gap.
inline void attach_reference(ExperimentRecord& record, double reference_distance) {
    record.reference_distance = reference_distance;
    record.gap = gap_percent(record.final_distance, reference_distance);
}

}  // namespace vra
