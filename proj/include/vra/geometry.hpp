#pragma once

#include <cmath>

namespace vra {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point& a, const Point& b) = default;
};

inline double distance(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Signed twice-area of triangle (a, b, c). Positive for counter-clockwise.
inline double cross_orientation(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Proper (interior-to-interior) intersection of segments ab and cd.
/// Collinear or touching configurations do not count; the epsilon absorbs
/// floating-point noise in near-degenerate orientations.
inline bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d,
                           double eps = 1e-12) {
    const double o1 = cross_orientation(a, b, c);
    const double o2 = cross_orientation(a, b, d);
    const double o3 = cross_orientation(c, d, a);
    const double o4 = cross_orientation(c, d, b);
    auto sign = [eps](double v) { return v > eps ? 1 : (v < -eps ? -1 : 0); };
    return sign(o1) * sign(o2) < 0 && sign(o3) * sign(o4) < 0;
}

}  // namespace vra
