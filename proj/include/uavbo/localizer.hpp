#pragma once

// End-to-end localization runs: initial scan, measurement-driven Bayesian
// optimization, stopping rule, and the two multi-device strategies.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uavbo/channel.hpp"
#include "uavbo/geometry.hpp"
#include "uavbo/gp.hpp"
#include "uavbo/kinematics.hpp"

namespace uavbo {

struct StopParams {
    double radius_m = 20.0;
    int streak = 4;
    double max_time_s = 1800.0;

    void validate() const;
};

struct Source {
    std::string id;
    Point position;  // meters
};

enum class Strategy { single, multi_sequential, multi_aggregated };

/// Everything a run needs besides hyperparameters, stopping rule and seed.
struct World {
    Rect region{0.0, 0.0, 1000.0, 1000.0};
    std::vector<Source> sources{{"dev0", {500.0, 500.0}}};
    std::shared_ptr<const ChannelProfile> profile;
    ArrivalParams arrivals;
    bool random_arrivals = true;  // false: fixed gaps of delta_t
    bool missingness = true;      // false: every transmission is received
    double speed = 15.8;
    double loiter_radius = 50.0;
    double dt = 1.0;
    int n_init = 3;
    ScanAxis scan_axis = ScanAxis::vertical;
    int min_init_measurements = 3;
    int n_candidates = 350;
    bool predictive_noise = false;  // add sigma^2 to the variance used by EI

    void validate() const;
};

enum class EventKind { measurement, decision, estimate, stop };

const char* to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct TraceEvent {
    double time = 0.0;
    Point uav;
    EventKind kind = EventKind::measurement;
    std::optional<double> rssi;          // measurement: raw RSSI
    std::optional<double> tx_time;       // measurement: emission time
    std::optional<Point> estimate;       // estimate / stop
    std::optional<double> error_m;       // estimate / stop
    std::optional<Point> waypoint;       // decision
    std::optional<std::uint64_t> candidate_seed;  // decision / estimate
    std::optional<double> rssi_offset;   // decision / estimate: centering offset in use
    bool search_phase = false;           // estimate: counts toward the stopping rule
    std::string note;                    // stop: "rule" | "max_time" | "aborted"

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct RunTrace {
    std::string device_id;
    Point source;
    std::vector<TraceEvent> events;
    std::optional<Point> final_estimate;
    double final_error_m = 0.0;  // NaN when no estimate was ever made
    bool stopped_by_rule = false;
    double duration_s = 0.0;
    bool aborted = false;  // a GP conditioning failure ended the run early
    std::string abort_reason;

    friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// True iff the last `streak` estimates all lie within radius of their centroid.
bool should_stop(std::span<const Point> recent_estimates, const StopParams& stop);

RunTrace run_localization(const World& world, const Hyperparams& theta, const StopParams& stop,
                          std::uint64_t seed);

/// Devices are localized one after another; the scan runs once, and packets
/// from every device are kept whenever they arrive.
std::vector<RunTrace> run_multi_sequential(const World& world, const Hyperparams& theta,
                                           const StopParams& stop, std::uint64_t seed);

/// One event loop; the waypoint maximizes EI on the elementwise-max aggregate of
/// the per-device posteriors of devices not yet located.
std::vector<RunTrace> run_multi_aggregated(const World& world, const Hyperparams& theta,
                                           const StopParams& stop, std::uint64_t seed);

std::vector<RunTrace> run_strategy(Strategy strategy, const World& world, const Hyperparams& theta,
                                   const StopParams& stop, std::uint64_t seed);

/// Seed of the candidate set for decision round `round` of a run.
std::uint64_t candidate_round_seed(std::uint64_t run_seed, std::uint64_t round);

/// Channel RNG seed for device `index` of a run.
std::uint64_t device_channel_seed(std::uint64_t run_seed, std::uint64_t index);

}  // namespace uavbo
