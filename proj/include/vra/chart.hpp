#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "vra/raster.hpp"
#include "vra/render.hpp"

namespace vra {

struct ChartSeries {
    std::string label;
    Color color;
    std::vector<std::pair<double, double>> points;  // sorted by x by the caller
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ChartSeries> series;
    int width = 900;
    int height = 600;
};

namespace chart_detail {

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// 1-2-5 tick step covering roughly `target` intervals.
inline double nice_step(double range, int target) {
    if (range <= 0) return 1.0;
    const double rough = range / target;
    const double mag = std::pow(10.0, std::floor(std::log10(rough)));
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= rough) return mag * mult;
    }
    return mag * 10.0;
}

}  // namespace chart_detail

/// Deterministic line chart: fixed embedded font, no timestamps, stable
/// bytes for identical inputs.
inline RenderedImage render_chart(const ChartSpec& spec) {
    const int left = 80, right = 30, top = 40, bottom = 60;
    Canvas canvas(spec.width, spec.height, colors::white);

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : spec.series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmin <= xmax)) {  // no points at all
        xmin = 0;
        xmax = 1;
        ymin = 0;
        ymax = 1;
    }
    if (xmax - xmin < 1e-12) {
        xmin -= 1;
        xmax += 1;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 1;
        ymax += 1;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const int plot_w = spec.width - left - right;
    const int plot_h = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
    auto py = [&](double y) { return top + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

    // grid and ticks
    const double xstep = chart_detail::nice_step(xmax - xmin, 6);
    const double ystep = chart_detail::nice_step(ymax - ymin, 6);
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9; x += xstep) {
        const int gx = static_cast<int>(std::lround(px(x)));
        canvas.draw_segment(gx, top, gx, top + plot_h, 0.5, colors::light_gray);
        const std::string label = chart_detail::tick_label(x);
        canvas.draw_text(gx - Canvas::text_width(label, 1) / 2, top + plot_h + 8, label, 1,
                         colors::black);
    }
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9; y += ystep) {
        const int gy = static_cast<int>(std::lround(py(y)));
        canvas.draw_segment(left, gy, left + plot_w, gy, 0.5, colors::light_gray);
        const std::string label = chart_detail::tick_label(y);
        canvas.draw_text(left - Canvas::text_width(label, 1) - 6, gy - 3, label, 1, colors::black);
    }
    // axes
    canvas.draw_segment(left, top + plot_h, left + plot_w, top + plot_h, 1.0, colors::black);
    canvas.draw_segment(left, top, left, top + plot_h, 1.0, colors::black);

    // series
    for (const auto& s : spec.series) {
        for (std::size_t i = 0; i + 1 < s.points.size(); ++i) {
            canvas.draw_segment(px(s.points[i].first), py(s.points[i].second),
                                px(s.points[i + 1].first), py(s.points[i + 1].second), 1.2,
                                s.color);
        }
        for (const auto& [x, y] : s.points) {
            canvas.fill_rect(static_cast<int>(std::lround(px(x))) - 2,
                             static_cast<int>(std::lround(py(y))) - 2,
                             static_cast<int>(std::lround(px(x))) + 2,
                             static_cast<int>(std::lround(py(y))) + 2, s.color);
        }
    }

    // title, labels, legend
    canvas.draw_text(left, 12, spec.title, 2, colors::black);
    canvas.draw_text(left + plot_w / 2 - Canvas::text_width(spec.x_label, 1) / 2,
                     spec.height - 20, spec.x_label, 1, colors::black);
    canvas.draw_text(8, top - 12, spec.y_label, 1, colors::black);
    int ly = top + 8;
    for (const auto& s : spec.series) {
        canvas.fill_rect(left + plot_w - 150, ly, left + plot_w - 140, ly + 8, s.color);
        canvas.draw_text(left + plot_w - 134, ly, s.label, 1, colors::black);
        ly += 14;
    }

    RenderedImage img;
    img.bytes = encode_png(canvas);
    img.content_hash = sha256_hex(img.bytes);
    return img;
}

}  // namespace vra
