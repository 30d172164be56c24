#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "vra/orchestrator.hpp"

namespace vra {

using ojson = nlohmann::ordered_json;

namespace transcript_detail {

inline ojson to_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

inline std::optional<double> opt_from(const ojson& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

inline ojson to_json(const RouteSet& rs) {
    return ojson{{"routes", rs.routes}, {"source", rs.source}};
}

inline RouteSet route_set_from(const ojson& j) {
    RouteSet rs;
    rs.routes = j.at("routes").get<std::vector<std::vector<int>>>();
    rs.source = j.value("source", std::string{});
    return rs;
}

inline ojson to_json(const StrategyConfig& cfg) {
    return ojson{
        {"strategy", to_string(cfg.strategy)},
        {"max_iterations", cfg.max_iterations},
        {"ensemble_size", cfg.ensemble_size},
        {"critic_temperature", cfg.critic_temperature},
        {"initializer_temperature", cfg.initializer_temperature},
        {"return_policy",
         cfg.return_policy == StrategyConfig::ReturnPolicy::best_valid ? "best_valid"
                                                                       : "last_valid"},
        {"m", cfg.m},
        {"model_id", cfg.model_id},
    };
}

inline StrategyConfig strategy_config_from(const ojson& j) {
    StrategyConfig cfg;
    cfg.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    cfg.max_iterations = j.at("max_iterations").get<int>();
    cfg.ensemble_size = j.at("ensemble_size").get<int>();
    cfg.critic_temperature = j.at("critic_temperature").get<double>();
    cfg.initializer_temperature = j.at("initializer_temperature").get<double>();
    cfg.return_policy = j.at("return_policy").get<std::string>() == "last_valid"
                            ? StrategyConfig::ReturnPolicy::last_valid
                            : StrategyConfig::ReturnPolicy::best_valid;
    cfg.m = j.at("m").get<int>();
    cfg.model_id = j.value("model_id", std::string{});
    return cfg;
}

inline ojson to_json(const AgentExchange& ex) {
    return ojson{
        {"role", std::string(to_string(ex.role))},
        {"sample_index", ex.sample_index},
        {"temperature", ex.temperature},
        {"prompt_text", ex.prompt_text},
        {"image_hashes", ex.image_hashes},
        {"reply_text", ex.reply_text},
        {"from_cache", ex.from_cache},
        {"backend", ex.backend},
        {"latency_ms", ex.latency_ms},
        {"parse_status", ex.parse_status},
        {"note", ex.note},
    };
}

inline AgentExchange exchange_from(const ojson& j) {
    AgentExchange ex;
    const auto role = j.at("role").get<std::string>();
    ex.role = role == "initializer" ? AgentRole::initializer
                                    : (role == "critic" ? AgentRole::critic : AgentRole::scorer);
    ex.sample_index = j.at("sample_index").get<int>();
    ex.temperature = j.at("temperature").get<double>();
    ex.prompt_text = j.at("prompt_text").get<std::string>();
    ex.image_hashes = j.at("image_hashes").get<std::vector<std::string>>();
    ex.reply_text = j.at("reply_text").get<std::string>();
    ex.from_cache = j.at("from_cache").get<bool>();
    ex.backend = j.at("backend").get<std::string>();
    ex.latency_ms = j.at("latency_ms").get<std::int64_t>();
    ex.parse_status = j.at("parse_status").get<std::string>();
    ex.note = j.value("note", std::string{});
    return ex;
}

inline ojson to_json(const CandidateRecord& cand) {
    ojson defects = ojson::array();
    for (const auto& d : cand.defects) {
        defects.push_back(ojson{{"kind", d.kind}, {"detail", d.detail}, {"position", d.position}});
    }
    return ojson{
        {"routes", cand.routes ? to_json(*cand.routes) : ojson(nullptr)},
        {"defects", defects},
        {"valid", cand.valid},
        {"distance", to_json(cand.distance)},
        {"image_hash", cand.image_hash},
    };
}

inline CandidateRecord candidate_from(const ojson& j) {
    CandidateRecord cand;
    if (!j.at("routes").is_null()) cand.routes = route_set_from(j.at("routes"));
    for (const auto& d : j.at("defects")) {
        cand.defects.push_back(ParseDefect{d.at("kind").get<std::string>(),
                                           d.at("detail").get<std::string>(),
                                           d.at("position").get<std::size_t>()});
    }
    cand.valid = j.at("valid").get<bool>();
    cand.distance = opt_from(j.at("distance"));
    cand.image_hash = j.at("image_hash").get<std::string>();
    return cand;
}

}  // namespace transcript_detail

inline ojson to_json(const ExperimentRecord& record) {
    ojson iterations = ojson::array();
    for (const auto& iter : record.iterations) {
        ojson exchanges = ojson::array();
        for (const auto& ex : iter.exchanges) exchanges.push_back(transcript_detail::to_json(ex));
        ojson candidates = ojson::array();
        for (const auto& cand : iter.candidates) {
            candidates.push_back(transcript_detail::to_json(cand));
        }
        iterations.push_back(ojson{
            {"index", iter.index},
            {"selected", iter.selected},
            {"selected_image", iter.selected_image},
            {"exchanges", exchanges},
            {"candidates", candidates},
        });
    }
    return ojson{
        {"instance_id", record.instance_id},
        {"strategy_config", transcript_detail::to_json(record.config)},
        {"style_hash", record.style_hash},
        {"final_routes",
         record.final_routes ? transcript_detail::to_json(*record.final_routes) : ojson(nullptr)},
        {"final_distance", transcript_detail::to_json(record.final_distance)},
        {"reference_distance", record.reference_distance},
        {"gap", transcript_detail::to_json(record.gap)},
        {"failed", record.failed},
        {"failure", record.failure},
        {"wall_time_seconds", record.wall_time_seconds},
        {"iterations", iterations},
    };
}

inline ExperimentRecord record_from_json(const ojson& j) {
    ExperimentRecord record;
    record.instance_id = j.at("instance_id").get<std::string>();
    record.config = transcript_detail::strategy_config_from(j.at("strategy_config"));
    record.style_hash = j.at("style_hash").get<std::string>();
    if (!j.at("final_routes").is_null()) {
        record.final_routes = transcript_detail::route_set_from(j.at("final_routes"));
    }
    record.final_distance = transcript_detail::opt_from(j.at("final_distance"));
    record.reference_distance = j.at("reference_distance").get<double>();
    record.gap = transcript_detail::opt_from(j.at("gap"));
    record.failed = j.at("failed").get<bool>();
    record.failure = j.at("failure").get<std::string>();
    record.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    for (const auto& ji : j.at("iterations")) {
        IterationRecord iter;
        iter.index = ji.at("index").get<int>();
        iter.selected = ji.at("selected").get<int>();
        iter.selected_image = ji.at("selected_image").get<std::string>();
        for (const auto& je : ji.at("exchanges")) {
            iter.exchanges.push_back(transcript_detail::exchange_from(je));
        }
        for (const auto& jc : ji.at("candidates")) {
            iter.candidates.push_back(transcript_detail::candidate_from(jc));
        }
        record.iterations.push_back(std::move(iter));
    }
    return record;
}

inline std::string transcript_to_string(const ExperimentRecord& record) {
    return to_json(record).dump(2) + "\n";
}

inline void save_transcript(const ExperimentRecord& record, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write transcript " + path.string());
    out << transcript_to_string(record);
}

inline ExperimentRecord load_transcript(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read transcript " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return record_from_json(ojson::parse(buf.str()));
}

}  // namespace vra
