#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace uavbo {

using Rng = std::mt19937_64;

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }

inline double squared_norm(Point p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point p) { return std::hypot(p.x, p.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Axis-aligned rectangle. "Up" is +y, so the upper-left corner is (x_min, y_max).
struct Rect {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 1.0;
    double y_max = 1.0;

    static Rect unit() { return {}; }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool valid() const { return x_max > x_min && y_max > y_min; }

    bool contains(Point p, double tol = 0.0) const {
        return p.x >= x_min - tol && p.x <= x_max + tol && p.y >= y_min - tol &&
               p.y <= y_max + tol;
    }

    Point clamp(Point p) const {
        return {std::clamp(p.x, x_min, x_max), std::clamp(p.y, y_min, y_max)};
    }

    Point upper_left() const { return {x_min, y_max}; }
    Point lower_right() const { return {x_max, y_min}; }
    Point center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
    double diagonal() const { return std::hypot(width(), height()); }

    /// Affine map into [0,1]^2.
    Point to_unit(Point p) const {
        return {(p.x - x_min) / width(), (p.y - y_min) / height()};
    }
    Point from_unit(Point u) const {
        return {x_min + u.x * width(), y_min + u.y * height()};
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

/// SplitMix64 finalizer; used to derive independent sub-stream seeds from a run seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return mix_seed(mix_seed(seed ^ mix_seed(stream)) + index);
}

}  // namespace uavbo
