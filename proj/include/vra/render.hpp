#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vra/digest.hpp"
#include "vra/instance.hpp"
#include "vra/raster.hpp"
#include "vra/routes.hpp"

namespace vra {

/// Visual conventions for instance and solution images: depot as a filled
/// black square, numbered circular node markers, one palette color per route.
struct RenderStyle {
    int width = 1024;
    int height = 1024;
    int margin = 51;  // ~5% of the default canvas
    double world_extent = 5.0;
    int node_radius = 7;
    int depot_half = 9;
    double line_width = 3.0;
    int label_scale = 2;
    Color background = colors::white;
    Color node_color = colors::gray;
    Color depot_color = colors::black;
    Color label_color = colors::black;
    std::vector<Color> palette = {colors::crimson, colors::royal_blue, colors::forest,
                                  colors::orange,  colors::purple,     colors::teal,
                                  colors::magenta, colors::olive};
};

inline std::string style_hash(const RenderStyle& s) {
    std::string key = std::to_string(s.width) + "," + std::to_string(s.height) + "," +
                      std::to_string(s.margin) + "," + format_double(s.world_extent) + "," +
                      std::to_string(s.node_radius) + "," + std::to_string(s.depot_half) + "," +
                      format_double(s.line_width) + "," + std::to_string(s.label_scale);
    for (const auto& c : s.palette) {
        key += ";" + std::to_string(c.r) + "." + std::to_string(c.g) + "." + std::to_string(c.b);
    }
    return sha256_hex(key);
}

struct RenderedImage {
    std::string bytes;
    std::string format = "png";
    std::string content_hash;  // sha256 of bytes
};

/// World [0, extent]^2 to pixel coordinates; larger y is higher on screen.
inline std::pair<double, double> world_to_pixel(const RenderStyle& style, const Point& p) {
    const double span_x = style.width - 1.0 - 2.0 * style.margin;
    const double span_y = style.height - 1.0 - 2.0 * style.margin;
    const double px = style.margin + p.x / style.world_extent * span_x;
    const double py = (style.height - 1.0) - style.margin - p.y / style.world_extent * span_y;
    return {px, py};
}

inline Point pixel_to_world(const RenderStyle& style, double px, double py) {
    const double span_x = style.width - 1.0 - 2.0 * style.margin;
    const double span_y = style.height - 1.0 - 2.0 * style.margin;
    return Point{(px - style.margin) / span_x * style.world_extent,
                 ((style.height - 1.0) - style.margin - py) / span_y * style.world_extent};
}

namespace detail {

inline void check_viewport(const RenderStyle& style) {
    const int marker = std::max(style.node_radius, style.depot_half);
    if (style.width - 2 * style.margin <= 4 * marker ||
        style.height - 2 * style.margin <= 4 * marker) {
        throw std::invalid_argument("render: viewport too small for markers");
    }
}

inline void draw_nodes(Canvas& canvas, const Instance& inst, const RenderStyle& style) {
    for (int i = 0; i < inst.n(); ++i) {
        const auto [px, py] = world_to_pixel(style, inst.nodes[static_cast<std::size_t>(i)]);
        if (i == 0) {
            canvas.fill_rect(static_cast<int>(std::lround(px)) - style.depot_half,
                             static_cast<int>(std::lround(py)) - style.depot_half,
                             static_cast<int>(std::lround(px)) + style.depot_half,
                             static_cast<int>(std::lround(py)) + style.depot_half,
                             style.depot_color);
        } else {
            canvas.fill_disc(px, py, style.node_radius, style.node_color);
        }
        const std::string label = std::to_string(i);
        canvas.draw_text(static_cast<int>(std::lround(px)) + style.node_radius + 3,
                         static_cast<int>(std::lround(py)) - style.node_radius -
                             Canvas::text_height(style.label_scale),
                         label, style.label_scale, style.label_color);
    }
}

inline RenderedImage finish(Canvas& canvas) {
    RenderedImage img;
    img.bytes = encode_png(canvas);
    img.content_hash = sha256_hex(img.bytes);
    return img;
}

}  // namespace detail

/// The bare instance: markers and labels only. This is what the initializer
/// agent sees.
inline RenderedImage render_instance(const Instance& inst, const RenderStyle& style) {
    detail::check_viewport(style);
    Canvas canvas(style.width, style.height, style.background);
    detail::draw_nodes(canvas, inst, style);
    return detail::finish(canvas);
}

/// Instance plus one polyline per route in palette order. Invalid route sets
/// render fine: nodes without incident edges simply stay bare.
inline RenderedImage render_solution(const Instance& inst, const RouteSet& rs,
                                     const RenderStyle& style) {
    detail::check_viewport(style);
    if (rs.m() > static_cast<int>(style.palette.size())) {
        throw std::invalid_argument("render: palette smaller than route count");
    }
    Canvas canvas(style.width, style.height, style.background);
    for (int r = 0; r < rs.m(); ++r) {
        const auto& route = rs.routes[static_cast<std::size_t>(r)];
        const Color color = style.palette[static_cast<std::size_t>(r)];
        for (std::size_t k = 0; k + 1 < route.size(); ++k) {
            const int a = route[k];
            const int b = route[k + 1];
            if (a < 0 || b < 0 || a >= inst.n() || b >= inst.n()) continue;
            const auto [ax, ay] = world_to_pixel(style, inst.nodes[static_cast<std::size_t>(a)]);
            const auto [bx, by] = world_to_pixel(style, inst.nodes[static_cast<std::size_t>(b)]);
            canvas.draw_segment(ax, ay, bx, by, style.line_width / 2.0, color);
        }
    }
    detail::draw_nodes(canvas, inst, style);
    return detail::finish(canvas);
}

}  // namespace vra
