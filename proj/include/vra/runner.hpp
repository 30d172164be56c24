#pragma once

#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vra/config.hpp"
#include "vra/gateway.hpp"
#include "vra/instance.hpp"
#include "vra/live_agent.hpp"
#include "vra/orchestrator.hpp"
#include "vra/prompts.hpp"
#include "vra/report.hpp"
#include "vra/runner_paths.hpp"
#include "vra/solver.hpp"
#include "vra/stats.hpp"
#include "vra/transcript.hpp"
#include "vra/version.hpp"

namespace vra {

// ---------------------------------------------------------------------------
// manifest

inline ojson load_manifest(const RunPaths& paths) {
    std::ifstream in(paths.manifest_path());
    if (!in) return ojson::object();
    std::ostringstream buf;
    buf << in.rdbuf();
    return ojson::parse(buf.str());
}

inline void save_manifest(const RunPaths& paths, const ojson& manifest) {
    std::filesystem::create_directories(paths.root);
    std::ofstream out(paths.manifest_path(), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + paths.manifest_path().string());
    out << manifest.dump(2) << "\n";
}

/// Creates the manifest skeleton on first touch. The single timestamp field
/// is the only nondeterministic byte in the run directory.
inline ojson ensure_manifest(const RunPaths& paths) {
    ojson manifest = load_manifest(paths);
    if (!manifest.contains("run_id")) {
        manifest["run_id"] = paths.root.filename().string();
        manifest["tool_version"] = std::string(kToolVersion);
        manifest["depot_convention"] = "node 0 is the depot, the first generated point";
        manifest["rng"] = "mt19937_64; uniform doubles from the top 53 bits of one draw";
        char stamp[32] = "unknown";
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        if (gmtime_r(&now, &tm_utc) != nullptr) {
            std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        }
        manifest["created_utc"] = stamp;
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
    std::vector<int> sizes = {10, 15, 20, 25, 30, 35};
    int count = 30;
    std::uint64_t seed = 1;
    double extent = 5.0;
    bool force = false;
};

inline std::string instance_file_id(int size, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "n%03d_i%03d", size, index);
    return buf;
}

inline void cmd_generate(const RunPaths& paths, const GenerateOptions& opts) {
    if (opts.count < 1) throw std::invalid_argument("generate: count must be >= 1");
    for (int size : opts.sizes) {
        if (size < 2) throw std::invalid_argument("generate: sizes must be >= 2");
    }
    if (std::filesystem::exists(paths.instances_dir()) &&
        !std::filesystem::is_empty(paths.instances_dir()) && !opts.force) {
        throw std::runtime_error("generate: " + paths.instances_dir().string() +
                                 " is not empty (use --force to overwrite)");
    }

    std::vector<int> sizes = opts.sizes;
    std::sort(sizes.begin(), sizes.end());
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

    for (int size : sizes) {
        const auto dir = paths.instances_dir() / ("n" + std::to_string(size));
        std::filesystem::create_directories(dir);
        for (int index = 0; index < opts.count; ++index) {
            const std::uint64_t seed =
                mix_seed(opts.seed, static_cast<std::uint64_t>(size) * 100000 +
                                        static_cast<std::uint64_t>(index));
            Instance inst = generate_instance(size, seed, opts.extent);
            inst.id = instance_file_id(size, index);
            save_instance(inst, dir / (inst.id + ".csv"));
        }
    }

    ojson manifest = ensure_manifest(paths);
    manifest["generate"] = {
        {"sizes", sizes},
        {"count", opts.count},
        {"master_seed", opts.seed},
        {"extent", opts.extent},
        {"instance_seed_rule", "splitmix64(master_seed, size*100000 + index)"},
    };
    save_manifest(paths, manifest);
}

inline std::vector<Instance> list_instances(const RunPaths& paths) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::exists(paths.instances_dir())) {
        throw std::runtime_error("no instances at " + paths.instances_dir().string() +
                                 " (run `generate` first)");
    }
    for (const auto& entry :
         std::filesystem::recursive_directory_iterator(paths.instances_dir())) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Instance> out;
    out.reserve(files.size());
    for (const auto& file : files) out.push_back(load_instance(file));
    return out;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleOptions {
    int m = 1;
    double time_limit = 120.0;
    std::optional<std::int64_t> iteration_budget;  // deterministic mode when set
    double gls_lambda = 0.1;
    std::uint64_t seed = 0;
};

struct OracleResult {
    int solved = 0;
    std::vector<std::pair<std::string, std::string>> errors;  // (instance id, message)
};

inline void save_reference(const RouteSet& rs, double distance,
                           const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write reference " + path.string());
    out << format_routes(rs) << "\ndistance: " << format_double(distance) << "\n";
}

inline std::pair<RouteSet, double> load_reference(const std::filesystem::path& path, int n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read reference " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    int m = 0;
    for (std::size_t pos = 0; (pos = text.find("Salesman", pos)) != std::string::npos; pos += 8) {
        ++m;
    }
    auto parsed = parse_routes(text, m, n);
    if (!parsed.ok()) throw std::runtime_error("malformed reference " + path.string());

    const auto dpos = text.find("distance:");
    if (dpos == std::string::npos) {
        throw std::runtime_error("reference missing distance line: " + path.string());
    }
    std::istringstream dline(text.substr(dpos + 9));
    std::string value;
    dline >> value;
    return {*parsed.routes, parse_double(value)};
}

inline OracleResult cmd_oracle(const RunPaths& paths, const OracleOptions& opts) {
    OracleResult result;
    SolverConfig cfg;
    cfg.m = opts.m;
    cfg.time_limit = opts.time_limit;
    cfg.iteration_budget = opts.iteration_budget;
    cfg.gls_lambda = opts.gls_lambda;
    cfg.seed = opts.seed;

    for (const Instance& inst : list_instances(paths)) {
        try {
            RouteSet savings = solve_savings(inst, opts.m);
            RouteSet improved = improve_gls(savings, inst, cfg);
            const auto distance = total_distance(improved, inst);
            if (!distance) throw std::runtime_error("reference solution failed validation");
            save_reference(improved, *distance, paths.reference_file(opts.m, inst.id));
            ++result.solved;
        } catch (const std::exception& e) {
            result.errors.emplace_back(inst.id, e.what());
        }
    }

    ojson manifest = ensure_manifest(paths);
    ojson errors = ojson::array();
    for (const auto& [id, message] : result.errors) {
        errors.push_back({{"instance", id}, {"error", message}});
    }
    manifest["oracle_m" + std::to_string(opts.m)] = {
        {"m", opts.m},
        {"budget_mode", opts.iteration_budget ? "iterations" : "wall_clock_seconds"},
        {"time_limit_seconds", opts.time_limit},
        {"iteration_budget", opts.iteration_budget ? ojson(*opts.iteration_budget) : ojson(nullptr)},
        {"gls_lambda", opts.gls_lambda},
        {"seed", opts.seed},
        {"construction", "savings (fixed route count)"},
        {"improvement", "guided local search: two_opt, or_opt, relocate, exchange"},
        {"solved", result.solved},
        {"errors", errors},
    };
    save_manifest(paths, manifest);
    return result;
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    StrategyConfig strategy;
    std::string backend = "mock";  // mock | live
    MockBehavior behavior;
    LiveConfig live;
    RenderStyle style;
    int max_in_flight = 4;
    int requests_per_minute = 0;
    int jobs = 1;
    bool save_images = true;
};

struct RunResult {
    int executed = 0;
    int skipped = 0;
    int failed = 0;
};

inline std::string mock_model_id(const MockBehavior& behavior) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mock(h=%.3f,%s,seed=%llu)", behavior.hallucination_rate,
                  behavior.improvement_mode == MockBehavior::Improvement::best_improving
                      ? "best"
                      : "random",
                  static_cast<unsigned long long>(behavior.seed));
    return buf;
}

inline RunResult cmd_run(const RunPaths& paths, RunOptions opts) {
    std::shared_ptr<Backend> backend;
    if (opts.backend == "mock") {
        backend = std::make_shared<MockAgent>(opts.behavior);
        opts.strategy.model_id = mock_model_id(opts.behavior);
    } else if (opts.backend == "live") {
        backend = std::make_shared<LiveAgent>(opts.live);
        opts.strategy.model_id = opts.live.model_id;
        // abort before any call when credentials are absent
        if (const char* key = std::getenv(opts.live.api_key_env.c_str());
            key == nullptr || *key == '\0') {
            throw credential_error("missing credentials: set " + opts.live.api_key_env);
        }
    } else {
        throw std::invalid_argument("unknown backend: " + opts.backend);
    }

    const std::vector<Instance> instances = list_instances(paths);
    // references are a precondition for gap computation
    std::map<std::string, double> references;
    for (const auto& inst : instances) {
        const auto ref_path = paths.reference_file(opts.strategy.m, inst.id);
        if (!std::filesystem::exists(ref_path)) {
            throw std::runtime_error("missing reference for " + inst.id + " at " +
                                     ref_path.string() + " (run `oracle` first)");
        }
        references[inst.id] = load_reference(ref_path, inst.n()).second;
    }

    GatewayConfig gw_config;
    gw_config.max_in_flight = opts.max_in_flight;
    gw_config.requests_per_minute = opts.requests_per_minute;
    gw_config.cache_dir = paths.cache_dir();
    Gateway gateway(backend, gw_config);

    const std::string run_label =
        to_string(opts.strategy.strategy) + "_m" + std::to_string(opts.strategy.m);
    const auto transcripts = paths.transcripts_dir(run_label);
    std::filesystem::create_directories(transcripts);

    RunResult result;
    std::mutex result_mu;
    std::atomic<std::size_t> cursor{0};
    const int jobs = std::max(1, opts.jobs);

    auto worker = [&]() {
        while (true) {
            const std::size_t index = cursor.fetch_add(1);
            if (index >= instances.size()) return;
            const Instance& inst = instances[index];
            const auto transcript_path = transcripts / (inst.id + ".json");

            if (std::filesystem::exists(transcript_path)) {
                try {
                    (void)load_transcript(transcript_path);
                    std::lock_guard lock(result_mu);
                    ++result.skipped;
                    continue;
                } catch (const std::exception&) {
                    // unreadable transcript: re-execute the instance
                }
            }

            ImageSink sink;
            if (opts.save_images) {
                const auto image_dir = paths.images_dir() / inst.id;
                std::filesystem::create_directories(image_dir);
                const std::string prefix = run_label + "_";
                sink = [image_dir, prefix](const std::string& stage, const RenderedImage& img) {
                    const std::string name =
                        (stage == "instance" ? stage : prefix + stage) + ".png";
                    std::ofstream out(image_dir / name, std::ios::binary);
                    out << img.bytes;
                };
            }

            ExperimentRecord record;
            try {
                StrategyConfig cfg = opts.strategy;
                record = run_strategy(inst, cfg, gateway, opts.style, sink);
                attach_reference(record, references.at(inst.id));
            } catch (const std::exception& e) {
                record.instance_id = inst.id;
                record.config = opts.strategy;
                record.style_hash = style_hash(opts.style);
                record.failed = true;
                record.failure = e.what();
            }
            save_transcript(record, transcript_path);
            std::lock_guard lock(result_mu);
            ++result.executed;
            if (record.failed) ++result.failed;
        }
    };

    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    ojson manifest = ensure_manifest(paths);
    manifest["run_" + run_label] = {
        {"strategy", transcript_detail::to_json(opts.strategy)},
        {"backend", opts.backend},
        {"live_base_url", opts.backend == "live" ? ojson(opts.live.base_url) : ojson(nullptr)},
        {"mock_behavior",
         opts.backend == "mock"
             ? ojson{{"hallucination_rate", opts.behavior.hallucination_rate},
                     {"improvement_mode",
                      opts.behavior.improvement_mode ==
                              MockBehavior::Improvement::best_improving
                          ? "best_improving"
                          : "random"},
                     {"seed", opts.behavior.seed}}
             : ojson(nullptr)},
        {"style_hash", style_hash(opts.style)},
        {"prompt_template_version", std::string(kPromptTemplateVersion)},
        {"prompt_templates_hash", prompt_templates_hash()},
        {"max_in_flight", opts.max_in_flight},
        {"requests_per_minute", opts.requests_per_minute},
        {"jobs", opts.jobs},
        {"save_images", opts.save_images},
        {"executed", result.executed},
        {"skipped", result.skipped},
        {"failed", result.failed},
    };
    save_manifest(paths, manifest);
    return result;
}

// ---------------------------------------------------------------------------
// report

struct ReportResult {
    bool empty = false;
    int strategy_count = 0;
    std::filesystem::path dir;
};

namespace runner_detail {

inline int size_from_id(const std::string& id) {
    int size = 0;
    if (std::sscanf(id.c_str(), "n%d_", &size) == 1) return size;
    return 0;
}

}  // namespace runner_detail

inline ReportResult cmd_report(const RunPaths& paths) {
    ReportResult out;
    out.dir = paths.reports_dir();

    // transcripts/<strategy>_m<m>/<instance>.json
    struct GroupKey {
        std::string strategy;
        int size;
        int m;
        bool operator<(const GroupKey& other) const {
            return std::tie(strategy, size, m) < std::tie(other.strategy, other.size, other.m);
        }
    };
    std::map<GroupKey, std::map<std::string, ExperimentRecord>> groups;
    if (std::filesystem::exists(paths.transcripts_root())) {
        for (const auto& dir : std::filesystem::directory_iterator(paths.transcripts_root())) {
            if (!dir.is_directory()) continue;
            for (const auto& file : std::filesystem::directory_iterator(dir.path())) {
                if (file.path().extension() != ".json") continue;
                ExperimentRecord record = load_transcript(file.path());
                const GroupKey key{to_string(record.config.strategy),
                                   runner_detail::size_from_id(record.instance_id),
                                   record.config.m};
                groups[key][record.instance_id] = std::move(record);
            }
        }
    }
    if (groups.empty()) {
        std::filesystem::create_directories(out.dir);
        report_detail::write_file(out.dir / "EMPTY.txt",
                                  "no experiment records found; nothing to report\n");
        out.empty = true;
        return out;
    }

    std::vector<GapSummary> summaries;
    std::set<std::string> strategies;
    for (const auto& [key, records] : groups) {
        strategies.insert(key.strategy);
        std::vector<std::optional<double>> gaps;
        for (const auto& [id, record] : records) gaps.push_back(record.gap);
        GapSummary summary = summarize_gaps(gaps);
        summary.strategy = key.strategy;
        summary.problem_size = key.size;
        summary.m = key.m;
        summaries.push_back(std::move(summary));
    }
    out.strategy_count = static_cast<int>(strategies.size());

    // strategy order for pairing: zero_shot is the baseline when present
    std::vector<std::string> order;
    if (strategies.count("zero_shot")) order.push_back("zero_shot");
    for (const auto& s : strategies) {
        if (s != "zero_shot") order.push_back(s);
    }

    std::vector<StrategyPairTable> tables;
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            StrategyPairTable table;
            table.baseline = order[a];
            table.contender = order[b];
            // cells over the (size, m) combinations present for both
            std::set<std::pair<int, int>> cells;
            for (const auto& [key, records] : groups) {
                if (key.strategy == table.baseline || key.strategy == table.contender) {
                    cells.insert({key.size, key.m});
                }
            }
            for (const auto& [size, m] : cells) {
                auto ga = groups.find(GroupKey{table.baseline, size, m});
                auto gb = groups.find(GroupKey{table.contender, size, m});
                if (ga == groups.end() || gb == groups.end()) continue;

                std::map<std::string, std::optional<double>> da, db;
                for (const auto& [id, record] : ga->second) {
                    if (gb->second.count(id)) da[id] = record.final_distance;
                }
                for (const auto& [id, record] : gb->second) {
                    if (ga->second.count(id)) db[id] = record.final_distance;
                }
                const auto filtered = pair_filter(da, db, table.baseline, table.contender);

                WilcoxonCell cell;
                cell.problem_size = size;
                cell.m = m;
                cell.total_instances = static_cast<int>(filtered.pairs.size() +
                                                        filtered.excluded.size());
                for (const auto& ex : filtered.excluded) {
                    cell.excluded_reasons.push_back(ex.id + ": " + ex.reason);
                }
                if (filtered.pairs.empty()) {
                    cell.result.degenerate = true;
                    cell.result.method = "skipped";
                    cell.result.n_pairs = 0;
                } else {
                    std::vector<double> x, y;
                    for (const auto& [dx, dy] : filtered.pairs) {
                        x.push_back(dx);
                        y.push_back(dy);
                    }
                    cell.result = wilcoxon_signed_rank(x, y);
                }
                table.cells.push_back(std::move(cell));
            }
            if (!table.cells.empty()) tables.push_back(std::move(table));
        }
    }

    emit_report(summaries, tables, out.dir);

    ojson manifest = ensure_manifest(paths);
    manifest["report"] = {
        {"strategies", order},
        {"groups", static_cast<int>(groups.size())},
        {"pair_tables", static_cast<int>(tables.size())},
    };
    save_manifest(paths, manifest);
    return out;
}

}  // namespace vra
