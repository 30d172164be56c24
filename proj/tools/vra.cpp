// Command-line entry point: generate instances, build reference solutions,
// run agent strategies against a backend, and aggregate reports.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vra/config.hpp"
#include "vra/runner.hpp"
#include "vra/version.hpp"

namespace {

struct CommonArgs {
    std::string run_dir;
    std::string config_file;
};

vra::Config load_config(const CommonArgs& args) {
    if (args.config_file.empty()) return {};
    return vra::Config::from_file(args.config_file);
}

vra::RenderStyle style_from_config(const vra::Config& cfg) {
    vra::RenderStyle style;
    style.width = cfg.get_int("render.width", style.width);
    style.height = cfg.get_int("render.height", style.height);
    style.margin = cfg.get_int("render.margin", style.margin);
    style.node_radius = cfg.get_int("render.node_radius", style.node_radius);
    style.depot_half = cfg.get_int("render.depot_half", style.depot_half);
    style.line_width = cfg.get_double("render.line_width", style.line_width);
    style.label_scale = cfg.get_int("render.label_scale", style.label_scale);
    return style;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"image-based multi-agent TSP/mTSP experiment harness"};
    app.set_version_flag("--version", std::string(vra::kToolVersion));
    app.require_subcommand(1);

    CommonArgs common;

    // generate
    auto* generate = app.add_subcommand("generate", "generate uniform random instances");
    vra::GenerateOptions gen_opts;
    generate->add_option("--run-dir", common.run_dir, "run directory")->required();
    generate->add_option("--sizes", gen_opts.sizes, "problem sizes (node counts)");
    generate->add_option("--count", gen_opts.count, "instances per size");
    generate->add_option("--seed", gen_opts.seed, "master seed");
    generate->add_option("--extent", gen_opts.extent, "square side length");
    generate->add_flag("--force", gen_opts.force, "overwrite existing instances");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "build savings + guided-local-search references");
    vra::OracleOptions oracle_opts;
    std::int64_t oracle_iterations = -1;
    oracle->add_option("--run-dir", common.run_dir, "run directory")->required();
    oracle->add_option("--m", oracle_opts.m, "salesman count");
    oracle->add_option("--time-limit", oracle_opts.time_limit, "seconds per instance");
    oracle->add_option("--iterations", oracle_iterations,
                       "iteration budget (deterministic mode; overrides --time-limit)");
    oracle->add_option("--lambda", oracle_opts.gls_lambda, "penalty scaling factor");
    oracle->add_option("--seed", oracle_opts.seed, "solver seed");

    // run
    auto* run = app.add_subcommand("run", "run a strategy over all instances");
    vra::RunOptions run_opts;
    std::string strategy_name = "zero_shot";
    std::string return_policy = "best_valid";
    std::string mock_mode = "best";
    bool no_images = false;
    run->add_option("--run-dir", common.run_dir, "run directory")->required();
    run->add_option("--config", common.config_file, "key = value config file");
    run->add_option("--strategy", strategy_name, "zero_shot | multi_agent_1 | multi_agent_2")
        ->required();
    run->add_option("--m", run_opts.strategy.m, "salesman count");
    run->add_option("--backend", run_opts.backend, "mock | live");
    run->add_option("--max-iterations", run_opts.strategy.max_iterations, "critic iterations");
    run->add_option("--ensemble", run_opts.strategy.ensemble_size, "critic samples per iteration");
    run->add_option("--critic-temperature", run_opts.strategy.critic_temperature,
                    "critic sampling temperature");
    run->add_option("--initializer-temperature", run_opts.strategy.initializer_temperature,
                    "initializer sampling temperature");
    run->add_option("--return-policy", return_policy, "best_valid | last_valid");
    run->add_option("--jobs", run_opts.jobs, "parallel instances");
    run->add_option("--hallucination-rate", run_opts.behavior.hallucination_rate,
                    "mock: node-drop probability");
    run->add_option("--mock-mode", mock_mode, "mock critic move: best | random");
    run->add_option("--mock-seed", run_opts.behavior.seed, "mock rng seed");
    run->add_flag("--no-images", no_images, "skip image persistence");

    // report
    auto* report = app.add_subcommand("report", "aggregate transcripts into tables and plots");
    report->add_option("--run-dir", common.run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const vra::RunPaths paths{common.run_dir};
        if (generate->parsed()) {
            vra::cmd_generate(paths, gen_opts);
            std::cout << "generated instances under " << paths.instances_dir().string() << "\n";
        } else if (oracle->parsed()) {
            if (oracle_iterations >= 0) oracle_opts.iteration_budget = oracle_iterations;
            const auto result = vra::cmd_oracle(paths, oracle_opts);
            std::cout << "references solved: " << result.solved
                      << ", errors: " << result.errors.size() << "\n";
            for (const auto& [id, message] : result.errors) {
                std::cerr << "  " << id << ": " << message << "\n";
            }
        } else if (run->parsed()) {
            const vra::Config cfg = load_config(common);
            run_opts.strategy.strategy = vra::strategy_from_string(strategy_name);
            run_opts.strategy.return_policy =
                return_policy == "last_valid" ? vra::StrategyConfig::ReturnPolicy::last_valid
                                              : vra::StrategyConfig::ReturnPolicy::best_valid;
            run_opts.behavior.improvement_mode =
                mock_mode == "random" ? vra::MockBehavior::Improvement::random
                                      : vra::MockBehavior::Improvement::best_improving;
            run_opts.save_images = !no_images;
            run_opts.style = style_from_config(cfg);
            run_opts.live.base_url = cfg.get("backend.base_url", run_opts.live.base_url);
            run_opts.live.model_id = cfg.get("backend.model_id", run_opts.live.model_id);
            run_opts.live.api_key_env = cfg.get("backend.api_key_env", run_opts.live.api_key_env);
            run_opts.live.max_output_tokens =
                cfg.get_int("backend.max_output_tokens", run_opts.live.max_output_tokens);
            run_opts.live.max_retries = cfg.get_int("backend.max_retries", run_opts.live.max_retries);
            run_opts.live.timeout_seconds =
                cfg.get_double("backend.timeout_seconds", run_opts.live.timeout_seconds);
            run_opts.max_in_flight = cfg.get_int("gateway.max_in_flight", run_opts.max_in_flight);
            run_opts.requests_per_minute =
                cfg.get_int("gateway.requests_per_minute", run_opts.requests_per_minute);

            const auto result = vra::cmd_run(paths, run_opts);
            std::cout << "executed: " << result.executed << ", resumed/skipped: " << result.skipped
                      << ", failed: " << result.failed << "\n";
        } else if (report->parsed()) {
            const auto result = vra::cmd_report(paths);
            if (result.empty) {
                std::cout << "no records; wrote empty-report notice\n";
            } else {
                std::cout << "report for " << result.strategy_count << " strategies at "
                          << result.dir.string() << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "VRA_ERROR: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
