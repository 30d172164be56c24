#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vra/geometry.hpp"
#include "vra/rng.hpp"

namespace vra {

/// Shortest decimal form that round-trips the exact double value.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return v;
}

/// A planar problem instance. Node 0 is the depot.
struct Instance {
    std::string id;
    std::vector<Point> nodes;
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(nodes.size()); }
    const Point& depot() const { return nodes.front(); }
};

/// Draws n points i.i.d. uniform on [0, extent]^2. The first point is the
/// depot. Coordinate pairs that collide with an earlier node are redrawn.
inline Instance generate_instance(int n, std::uint64_t seed, double extent = 5.0) {
    if (n < 2) throw std::invalid_argument("generate_instance: n must be >= 2");
    if (!(extent > 0)) throw std::invalid_argument("generate_instance: extent must be > 0");

    std::mt19937_64 rng(seed);
    Instance inst;
    inst.seed = seed;
    inst.id = "n" + std::to_string(n) + "_s" + std::to_string(seed);
    inst.nodes.reserve(static_cast<std::size_t>(n));
    while (inst.n() < n) {
        double x = uniform_unit(rng) * extent;
        double y = uniform_unit(rng) * extent;
        Point p{x, y};
        bool dup = false;
        for (const auto& q : inst.nodes) {
            if (q == p) {
                dup = true;
                break;
            }
        }
        if (!dup) inst.nodes.push_back(p);
    }
    return inst;
}

inline std::vector<std::vector<double>> distance_matrix(const Instance& inst) {
    const int n = inst.n();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            d[i][j] = d[j][i] = distance(inst.nodes[i], inst.nodes[j]);
        }
    }
    return d;
}

inline std::string instance_to_csv(const Instance& inst) {
    std::string out = "index,x,y\n";
    for (int i = 0; i < inst.n(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(inst.nodes[i].x);
        out += ',';
        out += format_double(inst.nodes[i].y);
        out += '\n';
    }
    return out;
}

inline Instance instance_from_csv(const std::string& csv, std::string id) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "index,x,y") {
        throw std::invalid_argument("instance csv: missing 'index,x,y' header");
    }
    Instance inst;
    inst.id = std::move(id);
    int expect = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t c1 = line.find(',');
        std::size_t c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw std::invalid_argument("instance csv: malformed row '" + line + "'");
        }
        int idx = std::stoi(line.substr(0, c1));
        if (idx != expect++) throw std::invalid_argument("instance csv: rows out of order");
        inst.nodes.push_back(Point{parse_double(line.substr(c1 + 1, c2 - c1 - 1)),
                                   parse_double(line.substr(c2 + 1))});
    }
    if (inst.n() < 2) throw std::invalid_argument("instance csv: need at least 2 nodes");
    for (int i = 0; i < inst.n(); ++i) {
        for (int j = i + 1; j < inst.n(); ++j) {
            if (inst.nodes[i] == inst.nodes[j]) {
                throw std::invalid_argument("instance csv: duplicate coordinates");
            }
        }
    }
    return inst;
}

inline void save_instance(const Instance& inst, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << instance_to_csv(inst);
}

inline Instance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return instance_from_csv(buf.str(), path.stem().string());
}

}  // namespace vra
