#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "vra/runner.hpp"

using namespace vra;

namespace {

struct TempRun {
    RunPaths paths;
    TempRun() {
        paths.root = std::filesystem::temp_directory_path() /
                     ("vra_run_" + std::to_string(std::random_device{}()));
    }
    ~TempRun() { std::filesystem::remove_all(paths.root); }
};

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

GenerateOptions small_generate() {
    GenerateOptions opts;
    opts.sizes = {6, 8};
    opts.count = 3;
    opts.seed = 5;
    return opts;
}

OracleOptions fast_oracle(int m) {
    OracleOptions opts;
    opts.m = m;
    opts.iteration_budget = 40;
    return opts;
}

RunOptions mock_run(StrategyConfig::Kind kind, int m) {
    RunOptions opts;
    opts.strategy.strategy = kind;
    opts.strategy.m = m;
    opts.strategy.max_iterations = 3;
    opts.strategy.ensemble_size = 3;
    opts.style.width = 160;
    opts.style.height = 160;
    opts.style.margin = 12;
    opts.style.node_radius = 4;
    opts.style.depot_half = 5;
    opts.style.label_scale = 1;
    return opts;
}

}  // namespace

TEST_CASE("generate writes size-labeled instance files deterministically") {
    TempRun a, b;
    cmd_generate(a.paths, small_generate());
    cmd_generate(b.paths, small_generate());

    for (const char* name : {"n6/n006_i000.csv", "n6/n006_i002.csv", "n8/n008_i001.csv"}) {
        const auto rel = std::filesystem::path("instances") / name;
        REQUIRE(std::filesystem::exists(a.paths.root / rel));
        REQUIRE(slurp(a.paths.root / rel) == slurp(b.paths.root / rel));
    }
    REQUIRE(list_instances(a.paths).size() == 6);
}

TEST_CASE("generate refuses to overwrite without force") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    REQUIRE_THROWS(cmd_generate(run.paths, small_generate()));
    auto forced = small_generate();
    forced.force = true;
    REQUIRE_NOTHROW(cmd_generate(run.paths, forced));
}

TEST_CASE("oracle writes references that validate and round-trip") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    const auto result = cmd_oracle(run.paths, fast_oracle(2));
    REQUIRE(result.solved == 6);
    REQUIRE(result.errors.empty());

    for (const auto& inst : list_instances(run.paths)) {
        const auto [routes, d] = load_reference(run.paths.reference_file(2, inst.id), inst.n());
        REQUIRE(validate(routes, inst, 2).valid);
        REQUIRE(*total_distance(routes, inst) == Catch::Approx(d).margin(1e-9));
    }
}

TEST_CASE("oracle repeats bit-identically in iteration-budget mode") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    cmd_oracle(run.paths, fast_oracle(1));
    const auto first = slurp(run.paths.reference_file(1, "n006_i000"));
    cmd_oracle(run.paths, fast_oracle(1));
    REQUIRE(slurp(run.paths.reference_file(1, "n006_i000")) == first);
}

TEST_CASE("oracle records infeasible instances and continues") {
    TempRun run;
    GenerateOptions opts;
    opts.sizes = {3, 6};
    opts.count = 1;
    opts.seed = 2;
    cmd_generate(run.paths, opts);
    const auto result = cmd_oracle(run.paths, fast_oracle(3));
    REQUIRE(result.solved == 1);
    REQUIRE(result.errors.size() == 1);
    REQUIRE(result.errors[0].first == "n003_i000");
}

TEST_CASE("tiny wall-clock budget still yields a valid reference") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    OracleOptions opts;
    opts.m = 1;
    opts.time_limit = 0.001;
    const auto result = cmd_oracle(run.paths, opts);
    REQUIRE(result.solved == 6);
}

TEST_CASE("run produces transcripts, images and cache; resume skips") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    cmd_oracle(run.paths, fast_oracle(1));

    auto opts = mock_run(StrategyConfig::Kind::multi_agent_2, 1);
    const auto result = cmd_run(run.paths, opts);
    REQUIRE(result.executed == 6);
    REQUIRE(result.failed == 0);

    const auto transcript = run.paths.transcripts_dir("multi_agent_2_m1") / "n006_i000.json";
    REQUIRE(std::filesystem::exists(transcript));
    const auto record = load_transcript(transcript);
    REQUIRE(record.iterations.size() == 4);  // initializer + 3 critic iterations
    REQUIRE(record.reference_distance > 0.0);
    REQUIRE(std::filesystem::exists(run.paths.images_dir() / "n006_i000" / "instance.png"));
    REQUIRE(std::filesystem::exists(run.paths.images_dir() / "n006_i000" /
                                    "multi_agent_2_m1_iter000_cand00.png"));
    REQUIRE(std::filesystem::exists(run.paths.cache_dir()));

    const auto again = cmd_run(run.paths, opts);
    REQUIRE(again.skipped == 6);
    REQUIRE(again.executed == 0);

    // deleting one transcript re-executes only that instance
    std::filesystem::remove(transcript);
    const auto partial = cmd_run(run.paths, opts);
    REQUIRE(partial.executed == 1);
    REQUIRE(partial.skipped == 5);
}

TEST_CASE("zero-shot and multi-agent 2 share initializer cache entries") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    cmd_oracle(run.paths, fast_oracle(1));

    cmd_run(run.paths, mock_run(StrategyConfig::Kind::zero_shot, 1));
    cmd_run(run.paths, mock_run(StrategyConfig::Kind::multi_agent_2, 1));

    const auto ma2 = load_transcript(run.paths.transcripts_dir("multi_agent_2_m1") /
                                     "n006_i000.json");
    REQUIRE(ma2.iterations[0].exchanges[0].from_cache);  // hit from the zero-shot run
}

TEST_CASE("run aborts when references are missing") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    REQUIRE_THROWS(cmd_run(run.paths, mock_run(StrategyConfig::Kind::zero_shot, 1)));
}

TEST_CASE("live backend without credentials aborts before any call") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    cmd_oracle(run.paths, fast_oracle(1));
    auto opts = mock_run(StrategyConfig::Kind::zero_shot, 1);
    opts.backend = "live";
    opts.live.api_key_env = "VRA_ABSENT_KEY";
    REQUIRE_THROWS_AS(cmd_run(run.paths, opts), credential_error);
    REQUIRE_THROWS(cmd_run(run.paths, [&] {
        auto bad = mock_run(StrategyConfig::Kind::zero_shot, 1);
        bad.backend = "martian";
        return bad;
    }()));
}

TEST_CASE("report emits summaries, tables and plots") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    cmd_oracle(run.paths, fast_oracle(1));
    cmd_run(run.paths, mock_run(StrategyConfig::Kind::zero_shot, 1));
    cmd_run(run.paths, mock_run(StrategyConfig::Kind::multi_agent_2, 1));

    const auto result = cmd_report(run.paths);
    REQUIRE_FALSE(result.empty);
    REQUIRE(result.strategy_count == 2);
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() / "gap_summary.csv"));
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() /
                                    "wilcoxon_zero_shot_vs_multi_agent_2.csv"));
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() /
                                    "wilcoxon_zero_shot_vs_multi_agent_2.txt"));
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() / "mean_gap_m1.png"));
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() / "std_gap_m1.png"));
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() / "summary.json"));

    // rerun on an unchanged directory reproduces identical bytes
    const auto csv = slurp(run.paths.reports_dir() / "gap_summary.csv");
    const auto png = slurp(run.paths.reports_dir() / "mean_gap_m1.png");
    cmd_report(run.paths);
    REQUIRE(slurp(run.paths.reports_dir() / "gap_summary.csv") == csv);
    REQUIRE(slurp(run.paths.reports_dir() / "mean_gap_m1.png") == png);
}

TEST_CASE("report on an empty run directory writes the empty notice") {
    TempRun run;
    std::filesystem::create_directories(run.paths.root);
    const auto result = cmd_report(run.paths);
    REQUIRE(result.empty);
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() / "EMPTY.txt"));
}

TEST_CASE("single-strategy report has summaries but no test tables") {
    TempRun run;
    cmd_generate(run.paths, small_generate());
    cmd_oracle(run.paths, fast_oracle(1));
    cmd_run(run.paths, mock_run(StrategyConfig::Kind::zero_shot, 1));
    const auto result = cmd_report(run.paths);
    REQUIRE_FALSE(result.empty);
    REQUIRE(result.strategy_count == 1);
    REQUIRE(std::filesystem::exists(run.paths.reports_dir() / "gap_summary.csv"));
    REQUIRE_FALSE(std::filesystem::exists(run.paths.reports_dir() /
                                          "wilcoxon_zero_shot_vs_multi_agent_2.csv"));
}
