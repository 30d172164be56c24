#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vra/routes.hpp"

namespace vra {

constexpr std::string_view kBlockStart = "<<start>>";
constexpr std::string_view kBlockEnd = "<<end>>";

struct ParseDefect {
    std::string kind;    // missing_delimiter | wrong_salesman_count | bad_token | index_range | ...
    std::string detail;
    std::size_t position = 0;  // byte offset into the reply text
};

/// Scores assigned by the scorer agent, one per image id 1..k.
struct ScoreBoard {
    std::map<int, double> scores;
    int best_id = 0;
    bool best_was_explicit = false;  // false when best_id fell back to argmax
};

struct RouteParseOutcome {
    std::optional<RouteSet> routes;
    std::vector<ParseDefect> defects;
    bool ok() const { return routes.has_value(); }
};

struct ScoreParseOutcome {
    std::optional<ScoreBoard> board;
    std::vector<ParseDefect> defects;
    bool ok() const { return board.has_value(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

inline std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        if (iequals(haystack.substr(i, needle.size()), needle)) return i;
    }
    return std::string_view::npos;
}

/// "Depot" / "Node{j}" / bare "{j}" -> node index, or nullopt.
inline std::optional<int> parse_node_token(std::string_view token) {
    token = trim(token);
    if (token.empty()) return std::nullopt;
    if (iequals(token, "depot")) return 0;
    if (token.size() > 4 && iequals(token.substr(0, 4), "node")) token.remove_prefix(4);
    token = trim(token);
    if (token.empty()) return std::nullopt;
    int value = 0;
    for (char c : token) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        value = value * 10 + (c - '0');
        if (value > 1'000'000) return std::nullopt;
    }
    return value;
}

}  // namespace detail

/// Parses the first <<start>>...<<end>> block against the route grammar.
/// Syntactic defects (delimiters, token shape, index range, salesman count)
/// fail the parse; semantic defects (missing/duplicated nodes) are left to
/// validate().
inline RouteParseOutcome parse_routes(const std::string& text, int m, int n) {
    RouteParseOutcome out;
    const std::size_t start = detail::ifind(text, kBlockStart);
    if (start == std::string_view::npos) {
        out.defects.push_back({"missing_delimiter", "no <<start>> marker", 0});
        return out;
    }
    const std::size_t body_begin = start + kBlockStart.size();
    const std::size_t end = detail::ifind(text, kBlockEnd, body_begin);
    if (end == std::string_view::npos) {
        out.defects.push_back({"missing_delimiter", "unterminated block: no <<end>>", start});
        return out;
    }
    const std::string_view block(text.data() + body_begin, end - body_begin);

    std::vector<std::vector<int>> routes;
    std::size_t line_begin = 0;
    while (line_begin <= block.size()) {
        std::size_t line_end = block.find('\n', line_begin);
        if (line_end == std::string_view::npos) line_end = block.size();
        const std::string_view raw_line = block.substr(line_begin, line_end - line_begin);
        const std::size_t offset = body_begin + line_begin;
        line_begin = line_end + 1;

        const std::string_view line = detail::trim(raw_line);
        if (line.empty()) continue;

        if (!(line.size() >= 8 && detail::iequals(line.substr(0, 8), "salesman"))) {
            out.defects.push_back({"unexpected_text", std::string(line), offset});
            continue;
        }
        std::string_view rest = line.substr(8);
        rest = detail::trim(rest);
        std::size_t digits = 0;
        int index = 0;
        while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) {
            index = index * 10 + (rest[digits] - '0');
            ++digits;
        }
        if (digits == 0) {
            out.defects.push_back({"bad_token", "salesman label without number", offset});
            continue;
        }
        rest = detail::trim(rest.substr(digits));
        if (rest.empty() || rest.front() != ':') {
            out.defects.push_back({"bad_token", "missing ':' after salesman label", offset});
            continue;
        }
        rest = rest.substr(1);

        if (index != static_cast<int>(routes.size()) + 1) {
            out.defects.push_back({"wrong_salesman_count",
                                   "expected Salesman" + std::to_string(routes.size() + 1) +
                                       ", got Salesman" + std::to_string(index),
                                   offset});
            continue;
        }

        // Dash-separated node tokens; anchors must denote the depot.
        std::vector<int> route;
        bool line_ok = true;
        std::size_t tok_begin = 0;
        const std::string_view seq = rest;
        std::vector<std::string_view> tokens;
        while (tok_begin <= seq.size()) {
            std::size_t dash = seq.find('-', tok_begin);
            if (dash == std::string_view::npos) dash = seq.size();
            tokens.push_back(seq.substr(tok_begin, dash - tok_begin));
            tok_begin = dash + 1;
        }
        if (tokens.size() < 2) {
            out.defects.push_back({"bad_token", "route needs at least depot-depot", offset});
            continue;
        }
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            const auto node = detail::parse_node_token(tokens[t]);
            if (!node) {
                out.defects.push_back(
                    {"bad_token", "unparseable token '" + std::string(detail::trim(tokens[t])) + "'",
                     offset});
                line_ok = false;
                break;
            }
            const bool is_anchor = t == 0 || t + 1 == tokens.size();
            if (is_anchor && *node != 0) {
                out.defects.push_back({"bad_anchor", "route must start and end at the depot", offset});
                line_ok = false;
                break;
            }
            if (!is_anchor && (*node < 1 || *node > n - 1)) {
                out.defects.push_back(
                    {"index_range", "node index " + std::to_string(*node) + " outside [1, " +
                                        std::to_string(n - 1) + "]",
                     offset});
                line_ok = false;
                break;
            }
            route.push_back(*node);
        }
        if (line_ok) routes.push_back(std::move(route));
    }

    if (static_cast<int>(routes.size()) != m && out.defects.empty()) {
        out.defects.push_back({"wrong_salesman_count",
                               "expected " + std::to_string(m) + " routes, got " +
                                   std::to_string(routes.size()),
                               start});
    }
    if (!out.defects.empty()) return out;

    out.routes = make_route_set(std::move(routes));
    return out;
}

/// Parses the scorer reply: the score list plus the best-route line. When the
/// explicit best id is absent or out of range, best_id falls back to the
/// lowest-index maximum score.
inline ScoreParseOutcome parse_scores(const std::string& text, int k) {
    ScoreParseOutcome out;
    if (k < 2) throw std::invalid_argument("parse_scores: k must be >= 2");

    ScoreBoard board;
    std::size_t pos = 0;
    while ((pos = detail::ifind(text, "image", pos)) != std::string_view::npos) {
        std::size_t p = pos + 5;
        while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
        std::size_t d = p;
        int id = 0;
        while (d < text.size() && std::isdigit(static_cast<unsigned char>(text[d]))) {
            id = id * 10 + (text[d] - '0');
            ++d;
        }
        if (d == p) {
            pos += 5;
            continue;
        }
        std::size_t c = d;
        while (c < text.size() && std::isspace(static_cast<unsigned char>(text[c]))) ++c;
        if (c >= text.size() || text[c] != ':') {
            pos = d;
            continue;
        }
        ++c;
        while (c < text.size() && (std::isspace(static_cast<unsigned char>(text[c])))) ++c;
        std::size_t num_end = c;
        while (num_end < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[num_end])) || text[num_end] == '.' ||
                text[num_end] == '+' || text[num_end] == '-')) {
            ++num_end;
        }
        if (num_end == c) {
            out.defects.push_back({"bad_token", "non-numeric score for image " + std::to_string(id), pos});
            pos = d;
            continue;
        }
        double score = 0.0;
        try {
            score = parse_double(std::string_view(text).substr(c, num_end - c));
        } catch (const std::exception&) {
            out.defects.push_back({"bad_token", "non-numeric score for image " + std::to_string(id), pos});
            pos = num_end;
            continue;
        }
        if (id < 1 || id > k) {
            out.defects.push_back({"index_range", "image id " + std::to_string(id) + " outside 1.." +
                                                      std::to_string(k),
                                   pos});
        } else if (board.scores.count(id)) {
            out.defects.push_back({"duplicate_id", "image " + std::to_string(id) + " scored twice", pos});
        } else {
            board.scores[id] = score;
        }
        pos = num_end;
    }

    if (static_cast<int>(board.scores.size()) != k) {
        out.defects.push_back({"incomplete_scores",
                               "found " + std::to_string(board.scores.size()) + " of " +
                                   std::to_string(k) + " scores",
                               0});
    }
    if (!out.defects.empty()) return out;

    // Optional "<<the best route: ID>>" line.
    const std::size_t best_pos = detail::ifind(text, "best route");
    if (best_pos != std::string_view::npos) {
        std::size_t p = best_pos + 10;
        while (p < text.size() && !std::isdigit(static_cast<unsigned char>(text[p])) &&
               text[p] != '\n') {
            ++p;
        }
        int id = 0;
        bool any = false;
        while (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
            id = id * 10 + (text[p] - '0');
            ++p;
            any = true;
        }
        if (any && id >= 1 && id <= k) {
            board.best_id = id;
            board.best_was_explicit = true;
        }
    }
    if (!board.best_was_explicit) {
        double best_score = board.scores.at(1);
        board.best_id = 1;
        for (const auto& [id, score] : board.scores) {
            if (score > best_score) {
                best_score = score;
                board.best_id = id;
            }
        }
    }
    out.board = std::move(board);
    return out;
}

/// Canonical text in the prompt's output grammar. parse_routes(format_routes(rs))
/// reproduces rs.
inline std::string format_routes(const RouteSet& rs) {
    std::string out(kBlockStart);
    out += '\n';
    for (int i = 0; i < rs.m(); ++i) {
        const auto& route = rs.routes[static_cast<std::size_t>(i)];
        if (route.size() < 2 || route.front() != 0 || route.back() != 0) {
            throw std::invalid_argument("format_routes: route " + std::to_string(i + 1) +
                                        " is not depot-anchored");
        }
        out += "Salesman" + std::to_string(i + 1) + ": Depot";
        for (std::size_t t = 1; t + 1 < route.size(); ++t) {
            out += "-Node" + std::to_string(route[t]);
        }
        out += "-Depot\n";
    }
    out += kBlockEnd;
    return out;
}

}  // namespace vra
