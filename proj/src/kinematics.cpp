#include "uavbo/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavbo {

namespace {

constexpr double kOnCircle = 1e-9;

void loiter_advance(UavState& st, double arc) {
    const Point rel = st.position - st.waypoint;
    const double d = norm(rel);
    const double r = st.loiter_radius;

    if (std::abs(d - r) > kOnCircle) {
        const Point u = d > 1e-12 ? (1.0 / d) * rel : Point{std::cos(st.heading), std::sin(st.heading)};
        const double gap = std::abs(d - r);
        const double dir = d < r ? 1.0 : -1.0;
        if (arc < gap) {
            st.position = st.position + (dir * arc) * u;
            st.heading = std::atan2(dir * u.y, dir * u.x);
            return;
        }
        st.position = st.waypoint + r * u;
        st.heading = std::atan2(dir * u.y, dir * u.x);
        arc -= gap;
        if (arc <= 0.0) return;
    }

    const Point on = st.position - st.waypoint;
    const double angle = std::atan2(on.y, on.x) + arc / r;
    st.position = st.waypoint + r * Point{std::cos(angle), std::sin(angle)};
    st.heading = angle + 0.5 * std::numbers::pi;
}

}  // namespace

UavState step(const UavState& state, double dt) {
    if (!(dt > 0.0) || dt > kMaxStep) {
        throw std::invalid_argument("step: dt must be in (0, 1] seconds");
    }
    UavState st = state;
    const double travel = st.speed * dt;

    if (st.mode == FlightMode::transit) {
        const Point to = st.waypoint - st.position;
        const double d = norm(to);
        if (d > st.loiter_radius) {
            const double move = std::min(travel, d);
            st.position = st.position + (move / d) * to;
            st.heading = std::atan2(to.y, to.x);
            if (distance(st.position, st.waypoint) <= st.loiter_radius) st.mode = FlightMode::loiter;
            return st;
        }
        st.mode = FlightMode::loiter;
    }
    loiter_advance(st, travel);
    return st;
}

UavState set_waypoint(const UavState& state, Point target, const Rect& region) {
    UavState st = state;
    st.waypoint = region.clamp(target);
    st.mode = FlightMode::transit;
    return st;
}

std::vector<Point> initial_scan_waypoints(const Rect& region, int n_init, ScanAxis axis) {
    if (n_init < 0) throw std::invalid_argument("initial_scan_waypoints: n_init must be >= 0");
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(n_init) + 2);
    out.push_back(region.upper_left());
    const double parts = static_cast<double>(n_init + 1);
    for (int k = 1; k <= n_init; ++k) {
        const bool odd = (k % 2) == 1;
        if (axis == ScanAxis::vertical) {
            out.push_back({odd ? region.x_max : region.x_min, region.y_max - k * region.height() / parts});
        } else {
            out.push_back({region.x_min + k * region.width() / parts, odd ? region.y_min : region.y_max});
        }
    }
    out.push_back(region.lower_right());
    return out;
}

}  // namespace uavbo
