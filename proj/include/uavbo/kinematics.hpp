#pragma once

// Fixed-wing UAV motion in metric coordinates: constant-speed straight transit,
// counterclockwise loiter about the waypoint on arrival, and the zig-zag
// initial scan.

#include <vector>

#include "uavbo/geometry.hpp"

namespace uavbo {

enum class FlightMode { transit, loiter };

struct UavState {
    Point position;
    double heading = 0.0;  // radians, counterclockwise from +x
    double speed = 15.8;   // m/s, ~57 km/h
    Point waypoint;
    FlightMode mode = FlightMode::transit;
    double loiter_radius = 50.0;
};

/// Axis along which the scan advances; bounce points lie on the opposite pair of edges.
enum class ScanAxis { vertical, horizontal };

inline constexpr double kMaxStep = 1.0;

/// Advances the state by `dt` seconds (0 < dt <= kMaxStep).
///
/// Transit moves speed*dt straight at the waypoint and switches to loiter once
/// within loiter_radius. Loiter first closes the radial gap to the circle (if
/// any) and spends the remaining arc length advancing counterclockwise.
UavState step(const UavState& state, double dt);

/// Targets a new waypoint, clamped into `region`; always resets to transit.
UavState set_waypoint(const UavState& state, Point target, const Rect& region);

/// Upper-left corner, then n_init bounce points, then the lower-right corner.
///
/// With ScanAxis::vertical the scan descends from top to bottom and bounces
/// between the right and left edges at evenly spaced heights; horizontal
/// advances left to right bouncing between the bottom and top edges.
std::vector<Point> initial_scan_waypoints(const Rect& region, int n_init,
                                          ScanAxis axis = ScanAxis::vertical);

}  // namespace uavbo
