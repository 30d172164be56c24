#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vra/gateway.hpp"
#include "vra/live_agent.hpp"

using namespace vra;

namespace {

Instance unit_square() {
    Instance inst;
    inst.id = "square";
    inst.nodes = {{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    return inst;
}

RenderStyle tiny_style() {
    RenderStyle style;
    style.width = 160;
    style.height = 160;
    style.margin = 12;
    style.node_radius = 4;
    style.depot_half = 5;
    style.label_scale = 1;
    return style;
}

AgentRequest request_for(const Instance& inst, AgentRole role, int m,
                         std::vector<RouteSet> ctx_routes, int sample_index = 0) {
    AgentRequest req;
    req.role = role;
    req.prompt = role == AgentRole::initializer
                     ? initializer_prompt(m)
                     : (role == AgentRole::critic ? critic_prompt(m)
                                                  : scorer_prompt(static_cast<int>(
                                                        ctx_routes.size())));
    if (role == AgentRole::scorer) {
        for (const auto& rs : ctx_routes) {
            req.images.push_back(render_solution(inst, rs, tiny_style()));
        }
    } else {
        req.images.push_back(render_instance(inst, tiny_style()));
    }
    req.sample_index = sample_index;
    req.model_id = "mock";
    auto ctx = std::make_shared<MockContext>();
    ctx->instance = inst;
    ctx->route_sets = std::move(ctx_routes);
    req.mock_ctx = ctx;
    return req;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("vra_test_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("mock initializer emits a valid tour in the route grammar") {
    const auto inst = unit_square();
    MockAgent agent;
    const auto text = agent.invoke(request_for(inst, AgentRole::initializer, 1, {}));
    const auto parsed = parse_routes(text, 1, inst.n());
    REQUIRE(parsed.ok());
    REQUIRE(validate(*parsed.routes, inst, 1).valid);
}

TEST_CASE("mock initializer partitions into m sectors") {
    const Instance inst = generate_instance(12, 8);
    MockAgent agent;
    const auto text = agent.invoke(request_for(inst, AgentRole::initializer, 3, {}));
    const auto parsed = parse_routes(text, 3, inst.n());
    REQUIRE(parsed.ok());
    REQUIRE(validate(*parsed.routes, inst, 3).valid);
    for (const auto& route : parsed.routes->routes) REQUIRE(route.size() > 2);
}

TEST_CASE("mock critic uncrosses the bowtie in best-improving mode") {
    const auto inst = unit_square();
    const auto bowtie = make_route_set({{0, 2, 1, 3, 0}});
    MockAgent agent;
    const auto text = agent.invoke(request_for(inst, AgentRole::critic, 1, {bowtie}));
    const auto parsed = parse_routes(text, 1, inst.n());
    REQUIRE(parsed.ok());
    const auto d = total_distance(*parsed.routes, inst);
    REQUIRE(d.has_value());
    REQUIRE(*d < *total_distance(bowtie, inst) - 1e-9);
    REQUIRE(*d == Catch::Approx(4.0).margin(1e-9));
}

TEST_CASE("mock critic repairs missing nodes") {
    const auto inst = unit_square();
    const auto incomplete = make_route_set({{0, 1, 2, 0}});  // node 3 missing
    MockAgent agent;
    const auto text = agent.invoke(request_for(inst, AgentRole::critic, 1, {incomplete}));
    const auto parsed = parse_routes(text, 1, inst.n());
    REQUIRE(parsed.ok());
    REQUIRE(validate(*parsed.routes, inst, 1).valid);
}

TEST_CASE("forced hallucination always drops exactly one node") {
    const Instance inst = generate_instance(9, 17);
    MockBehavior behavior;
    behavior.hallucination_rate = 1.0;
    MockAgent agent(behavior);
    for (int sample = 0; sample < 5; ++sample) {
        const auto text =
            agent.invoke(request_for(inst, AgentRole::initializer, 1, {}, sample));
        const auto parsed = parse_routes(text, 1, inst.n());
        REQUIRE(parsed.ok());
        const auto report = validate(*parsed.routes, inst, 1);
        REQUIRE_FALSE(report.valid);
        REQUIRE(report.missing.size() == 1);
        REQUIRE(report.duplicated.empty());
    }
}

TEST_CASE("mock replies are deterministic") {
    const Instance inst = generate_instance(10, 4);
    MockBehavior behavior;
    behavior.hallucination_rate = 0.5;
    behavior.seed = 9;
    MockAgent a(behavior), b(behavior);
    const auto req = request_for(inst, AgentRole::initializer, 2, {});
    REQUIRE(a.invoke(req) == b.invoke(req));
    const auto critic_req = request_for(inst, AgentRole::critic, 2,
                                        {make_route_set({{0, 1, 2, 3, 4, 0}, {0, 5, 6, 7, 8, 9, 0}})});
    REQUIRE(a.invoke(critic_req) == b.invoke(critic_req));
}

TEST_CASE("best-improving critic never emits a worse defined distance") {
    MockBehavior behavior;  // hallucination_rate = 0, best-improving
    MockAgent agent(behavior);
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const Instance inst = generate_instance(11, seed);
        RouteSet incumbent = make_route_set({{0, 3, 1, 5, 2, 4, 6, 8, 7, 9, 10, 0}});
        const double before = *total_distance(incumbent, inst);
        const auto text = agent.invoke(request_for(inst, AgentRole::critic, 1, {incumbent}));
        const auto parsed = parse_routes(text, 1, inst.n());
        REQUIRE(parsed.ok());
        REQUIRE(*total_distance(*parsed.routes, inst) <= before + 1e-9);
    }
}

TEST_CASE("mock scorer scores completeness and crossings and picks the argmax") {
    const auto inst = unit_square();
    const auto good = make_route_set({{0, 1, 2, 3, 0}});    // complete, no crossings: 5
    const auto bowtie = make_route_set({{0, 2, 1, 3, 0}});  // complete, one crossing: 4
    const auto broken = make_route_set({{0, 1, 2, 0}});     // incomplete: 2
    MockAgent agent;
    const auto text =
        agent.invoke(request_for(inst, AgentRole::scorer, 1, {broken, bowtie, good}));
    const auto parsed = parse_scores(text, 3);
    REQUIRE(parsed.ok());
    REQUIRE(parsed.board->scores.at(1) == 2.0);
    REQUIRE(parsed.board->scores.at(2) == 4.0);
    REQUIRE(parsed.board->scores.at(3) == 5.0);
    REQUIRE(parsed.board->best_id == 3);
}

TEST_CASE("mock scorer breaks ties toward the lowest image id") {
    const auto inst = unit_square();
    const auto tour = make_route_set({{0, 1, 2, 3, 0}});
    MockAgent agent;
    const auto text = agent.invoke(request_for(inst, AgentRole::scorer, 1, {tour, tour, tour}));
    const auto parsed = parse_scores(text, 3);
    REQUIRE(parsed.ok());
    REQUIRE(parsed.board->best_id == 1);
}

TEST_CASE("mock without a sidecar is a misuse error") {
    MockAgent agent;
    auto req = request_for(unit_square(), AgentRole::initializer, 1, {});
    req.mock_ctx = nullptr;
    REQUIRE_THROWS_AS(agent.invoke(req), mock_misuse_error);
}

TEST_CASE("cache round-trip stores and replays reply text byte-exactly") {
    TempDir tmp;
    const auto inst = unit_square();
    GatewayConfig config;
    config.cache_dir = tmp.path / "cache";
    Gateway gw(std::make_shared<MockAgent>(), config);

    const auto req = request_for(inst, AgentRole::initializer, 1, {});
    const auto first = gw.invoke(req);
    REQUIRE_FALSE(first.from_cache);
    const auto second = gw.invoke(req);
    REQUIRE(second.from_cache);
    REQUIRE(second.text == first.text);
}

TEST_CASE("sample index distinguishes cache keys") {
    const auto inst = unit_square();
    const auto a = request_for(inst, AgentRole::initializer, 1, {}, 0);
    const auto b = request_for(inst, AgentRole::initializer, 1, {}, 1);
    REQUIRE(cache_key(a) != cache_key(b));
    // quantized temperature: same at 2 decimals means same key
    auto c = a;
    c.temperature = 0.700;
    auto d = a;
    d.temperature = 0.701;
    REQUIRE(cache_key(c) == cache_key(d));
}

TEST_CASE("gateway validates request invariants") {
    TempDir tmp;
    Gateway gw(std::make_shared<MockAgent>());
    auto req = request_for(unit_square(), AgentRole::initializer, 1, {});
    req.images.clear();
    REQUIRE_THROWS_AS(gw.invoke(req), gateway_error);
    req = request_for(unit_square(), AgentRole::initializer, 1, {});
    req.temperature = 3.0;
    REQUIRE_THROWS_AS(gw.invoke(req), gateway_error);
    req = request_for(unit_square(), AgentRole::initializer, 1, {});
    req.sample_index = -1;
    REQUIRE_THROWS_AS(gw.invoke(req), gateway_error);
}

TEST_CASE("missing credentials fail before any network activity") {
    unsetenv("VRA_TEST_KEY");
    LiveConfig config;
    config.base_url = "http://127.0.0.1:1";  // would fail if contacted
    config.api_key_env = "VRA_TEST_KEY";
    LiveAgent agent(config);
    const auto req = request_for(unit_square(), AgentRole::initializer, 1, {});
    REQUIRE_THROWS_AS(agent.invoke(req), credential_error);
}

TEST_CASE("gateway rate limiter spaces out backend calls") {
    GatewayConfig config;
    config.requests_per_minute = 60000;  // 1ms spacing, just exercising the path
    Gateway gw(std::make_shared<MockAgent>(), config);
    const auto inst = unit_square();
    for (int i = 0; i < 3; ++i) {
        const auto reply = gw.invoke(request_for(inst, AgentRole::initializer, 1, {}, i));
        REQUIRE_FALSE(reply.text.empty());
    }
}

TEST_CASE("live client against a loopback server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::atomic<int> fail_first{0};
    std::atomic<int> rate_limit_first{0};

    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        const auto body = nlohmann::json::parse(req.body);
        if (req.get_header_value("Authorization") != "Bearer sekrit") {
            res.status = 401;
            res.set_content("{}", "application/json");
            return;
        }
        if (rate_limit_first > 0) {
            --rate_limit_first;
            res.status = 429;
            res.set_header("Retry-After", "1");
            res.set_content("{\"error\":\"slow down\"}", "application/json");
            return;
        }
        if (fail_first > 0) {
            --fail_first;
            res.status = 500;
            res.set_content("{\"error\":\"flaky\"}", "application/json");
            return;
        }
        nlohmann::json reply = {
            {"choices",
             {{{"message",
                {{"role", "assistant"},
                 {"content", "<<start>>\nSalesman1: Depot-Node1-Node2-Node3-Depot\n<<end>>"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    LiveConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    config.api_key_env = "VRA_TEST_KEY";
    config.initial_backoff_ms = 10;
    const auto req = request_for(unit_square(), AgentRole::initializer, 1, {});

    SECTION("success path returns the model text") {
        setenv("VRA_TEST_KEY", "sekrit", 1);
        LiveAgent agent(config);
        const auto text = agent.invoke(req);
        REQUIRE(parse_routes(text, 1, 4).ok());
        REQUIRE(hits == 1);
    }

    SECTION("server errors are retried with backoff") {
        setenv("VRA_TEST_KEY", "sekrit", 1);
        fail_first = 2;
        LiveAgent agent(config);
        const auto text = agent.invoke(req);
        REQUIRE(text.find("<<start>>") != std::string::npos);
        REQUIRE(hits == 3);
    }

    SECTION("rate-limit replies honor the server delay and retry") {
        setenv("VRA_TEST_KEY", "sekrit", 1);
        rate_limit_first = 1;
        LiveAgent agent(config);
        const auto t0 = std::chrono::steady_clock::now();
        const auto text = agent.invoke(req);
        const auto elapsed = std::chrono::steady_clock::now() - t0;
        REQUIRE(text.find("<<start>>") != std::string::npos);
        REQUIRE(hits == 2);
        REQUIRE(elapsed >= std::chrono::milliseconds(900));
    }

    SECTION("auth failures do not retry") {
        setenv("VRA_TEST_KEY", "wrong", 1);
        LiveAgent agent(config);
        REQUIRE_THROWS_AS(agent.invoke(req), credential_error);
        REQUIRE(hits == 1);
    }

    SECTION("retries exhaust into a transport error") {
        setenv("VRA_TEST_KEY", "sekrit", 1);
        fail_first = 100;
        LiveConfig limited = config;
        limited.max_retries = 2;
        LiveAgent agent(limited);
        REQUIRE_THROWS_AS(agent.invoke(req), transport_error);
        REQUIRE(hits == 3);
    }

    server.stop();
    thread.join();
    unsetenv("VRA_TEST_KEY");
}
