#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vra/digest.hpp"
#include "vra/gateway.hpp"

namespace vra {

struct LiveConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_id = "gpt-4o";
    std::string api_key_env = "VRA_API_KEY";
    int max_output_tokens = 2048;  // sized for 3 routes x 35 nodes with slack
    int max_retries = 3;
    int initial_backoff_ms = 500;
    double timeout_seconds = 120.0;
};

/// Vision chat-completion client: one user message carrying the prompt text
/// plus the images as base64 data URLs. Transport failures retry with
/// exponential backoff; auth failures never retry; rate-limit replies honor
/// the server-provided delay.
class LiveAgent : public Backend {
  public:
    explicit LiveAgent(LiveConfig config) : config_(std::move(config)) {}

    std::string name() const override { return "live"; }

    std::string invoke(const AgentRequest& req) override {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw credential_error("missing credentials: set " + config_.api_key_env);
        }

        nlohmann::json content = nlohmann::json::array();
        content.push_back({{"type", "text"}, {"text", req.prompt.text}});
        for (const auto& img : req.images) {
            content.push_back(
                {{"type", "image_url"},
                 {"image_url",
                  {{"url", "data:image/" + img.format + ";base64," + base64_encode(img.bytes)}}}});
        }
        const nlohmann::json body = {
            {"model", req.model_id.empty() ? config_.model_id : req.model_id},
            {"temperature", req.temperature},
            {"max_tokens", config_.max_output_tokens},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
        };
        const std::string payload = body.dump();

        auto [origin, prefix] = split_url(config_.base_url);
        std::string last_error = "no attempt made";
        int backoff_ms = config_.initial_backoff_ms;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
                backoff_ms *= 2;
            }
            httplib::Client client(origin);
            client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
            client.set_bearer_token_auth(key);

            auto res = client.Post(prefix + "/chat/completions", payload, "application/json");
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) {
                return extract_content(res->body);
            }
            if (res->status == 401 || res->status == 403) {
                throw credential_error("backend rejected credentials (HTTP " +
                                       std::to_string(res->status) + ")");
            }
            if (res->status == 429) {
                last_error = "rate limited (HTTP 429)";
                if (res->has_header("Retry-After")) {
                    const int delay = std::atoi(res->get_header_value("Retry-After").c_str());
                    if (delay > 0) {
                        std::this_thread::sleep_for(std::chrono::seconds(delay));
                        backoff_ms = config_.initial_backoff_ms;  // server delay already served
                    }
                }
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error (HTTP " + std::to_string(res->status) + ")";
                continue;
            }
            throw transport_error("backend error (HTTP " + std::to_string(res->status) +
                                  "): " + res->body.substr(0, 200));
        }
        throw transport_error("retries exhausted: " + last_error);
    }

  private:
    static std::pair<std::string, std::string> split_url(const std::string& base_url) {
        const auto scheme = base_url.find("://");
        if (scheme == std::string::npos) {
            throw std::invalid_argument("base_url must include a scheme: " + base_url);
        }
        const auto slash = base_url.find('/', scheme + 3);
        if (slash == std::string::npos) return {base_url, ""};
        return {base_url.substr(0, slash), base_url.substr(slash)};
    }

    static std::string extract_content(const std::string& body) {
        const auto parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
            !parsed["choices"][0].contains("message")) {
            throw transport_error("malformed backend response: " + body.substr(0, 200));
        }
        const auto& message = parsed["choices"][0]["message"];
        if (!message.contains("content") || !message["content"].is_string()) {
            throw transport_error("backend response missing text content");
        }
        return message["content"].get<std::string>();
    }

    LiveConfig config_;
};

}  // namespace vra
