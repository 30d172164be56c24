#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vra/instance.hpp"

namespace vra {

/// Flat `key = value` configuration, one entry per line, `#` comments.
/// Precedence is resolved by the caller: flags > file > defaults.
class Config {
  public:
    Config() = default;

    static Config from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read config " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_string(buf.str());
    }

    static Config from_string(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r") != std::string::npos) {
                    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                ": expected key = value");
                }
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": empty key");
            }
            cfg.values_[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    int get_int(const std::string& key, int fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : std::stoi(it->second);
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : parse_double(it->second);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
        if (it->second == "false" || it->second == "0" || it->second == "no") return false;
        throw std::invalid_argument("config key " + key + ": not a boolean: " + it->second);
    }

    const std::map<std::string, std::string>& values() const { return values_; }

  private:
    static std::string trim(std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        if (begin == std::string::npos) return {};
        return s.substr(begin, end - begin + 1);
    }

    std::map<std::string, std::string> values_;
};

}  // namespace vra
