#include "uavbo/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uavbo/acquisition.hpp"
#include "uavbo/errors.hpp"

namespace uavbo {

namespace {

constexpr std::uint64_t kCandidateStream = 0x43414e44;  // "CAND"
constexpr std::uint64_t kChannelStream = 0x4348414e;    // "CHAN"

struct Device {
    const Source* source = nullptr;
    Dataset data;
    Rng rng;
    std::vector<double> tx_times;
    std::size_t next_tx = 0;
    bool offset_frozen = false;
    bool active = true;
    bool fresh = false;
    std::vector<Point> history;  // search-phase estimates, meters
    std::optional<Point> last_estimate;
    RunTrace trace;
};

class Mission {
public:
    Mission(const World& world, const Hyperparams& theta, const StopParams& stop,
            std::uint64_t seed, Strategy strategy)
        : world_(world), theta_(theta), stop_(stop), seed_(seed), strategy_(strategy) {
        world_.validate();
        theta_.validate();
        stop_.validate();
        if (strategy_ == Strategy::single && world_.sources.size() != 1) {
            throw std::invalid_argument("run_localization: expects exactly one source");
        }

        ArrivalParams arrivals = world_.arrivals;
        if (!world_.random_arrivals) arrivals.eps_max = 0.0;
        devices_.resize(world_.sources.size());
        for (std::size_t j = 0; j < devices_.size(); ++j) {
            Device& d = devices_[j];
            d.source = &world_.sources[j];
            d.rng.seed(device_channel_seed(seed_, j));
            d.tx_times = transmission_times(arrivals, stop_.max_time_s, d.rng);
            d.trace.device_id = d.source->id;
            d.trace.source = d.source->position;
            d.trace.final_error_m = std::numeric_limits<double>::quiet_NaN();
        }

        scan_ = initial_scan_waypoints(world_.region, world_.n_init, world_.scan_axis);
        uav_.position = scan_.front();
        uav_.speed = world_.speed;
        uav_.loiter_radius = world_.loiter_radius;
        uav_ = set_waypoint(uav_, scan_[1], world_.region);
        scan_index_ = 1;
    }

    std::vector<RunTrace> run() {
        double t = 0.0;
        try {
            for (long k = 1; !done_; ++k) {
                t = static_cast<double>(k) * world_.dt;
                if (t > stop_.max_time_s + 1e-9) {
                    t = static_cast<double>(k - 1) * world_.dt;
                    break;
                }
                uav_ = step(uav_, world_.dt);
                receive(t);
                if (scanning_) {
                    scan_estimates(t);
                    advance_scan();
                }
                if (!scanning_) {
                    if (strategy_ == Strategy::multi_aggregated) {
                        search_aggregated(t);
                    } else {
                        search_targeted(t);
                    }
                }
                for (auto& d : devices_) d.fresh = false;
            }
        } catch (const ConditioningError& e) {
            for (auto& d : devices_) {
                if (d.active) {
                    d.trace.aborted = true;
                    d.trace.abort_reason = e.what();
                    finish(d, t, "aborted");
                }
            }
        }
        for (auto& d : devices_)
            if (d.active) finish(d, t, "max_time");

        std::vector<RunTrace> out;
        out.reserve(devices_.size());
        for (auto& d : devices_) out.push_back(std::move(d.trace));
        return out;
    }

private:
    // -- measurements -----------------------------------------------------

    void receive(double t) {
        for (auto& d : devices_) {
            if (!d.active) continue;  // located devices are no longer tracked
            while (d.next_tx < d.tx_times.size() && d.tx_times[d.next_tx] <= t + 1e-9) {
                const double tx = d.tx_times[d.next_tx++];
                const double dist = distance(uav_.position, d.source->position);
                std::optional<double> rssi =
                    world_.missingness ? try_receive(dist, *world_.profile, d.rng)
                                       : std::optional<double>(sample_rssi(dist, *world_.profile, d.rng));
                if (!rssi) continue;
                d.data.append(tx, world_.region.to_unit(uav_.position), *rssi);
                if (!d.offset_frozen) d.data.recenter(d.data.mean_raw_rssi());
                d.fresh = true;

                TraceEvent ev;
                ev.time = t;
                ev.uav = uav_.position;
                ev.kind = EventKind::measurement;
                ev.rssi = *rssi;
                ev.tx_time = tx;
                d.trace.events.push_back(ev);
            }
        }
    }

    // -- scan phase -------------------------------------------------------

    void start_scan() {
        scanning_ = true;
        std::reverse(scan_.begin(), scan_.end());
        scan_index_ = 0;
        uav_ = set_waypoint(uav_, scan_[0], world_.region);
    }

    void scan_estimates(double t) {
        std::vector<std::size_t> fresh;
        for (std::size_t j = 0; j < devices_.size(); ++j)
            if (devices_[j].active && devices_[j].fresh) fresh.push_back(j);
        if (fresh.empty()) return;
        const auto [seed, candidates] = next_round();
        for (std::size_t j : fresh) {
            const Posterior post = GpModel(devices_[j].data, theta_).predict(candidates);
            record_estimate(devices_[j], t, post, seed, false);
        }
    }

    bool scan_floor_met() const {
        const auto floor = static_cast<std::size_t>(world_.min_init_measurements);
        if (strategy_ == Strategy::multi_aggregated) {
            for (const auto& d : devices_)
                if (d.active && d.data.size() < floor) return false;
            return true;
        }
        return devices_[target_].data.size() >= floor;
    }

    void advance_scan() {
        if (uav_.mode != FlightMode::loiter) return;
        if (++scan_index_ < scan_.size()) {
            uav_ = set_waypoint(uav_, scan_[scan_index_], world_.region);
            return;
        }
        if (!scan_floor_met()) {
            start_scan();
            return;
        }
        scanning_ = false;
        for (auto& d : devices_) freeze(d);
        decision_due_ = true;
    }

    void freeze(Device& d) {
        if (d.offset_frozen || d.data.empty()) return;
        d.data.recenter(d.data.mean_raw_rssi());
        d.offset_frozen = true;
    }

    // -- search phase -----------------------------------------------------

    void search_targeted(double t) {
        Device& d = devices_[target_];
        if (!d.fresh && !decision_due_) return;
        if (d.data.empty()) {
            start_scan();
            return;
        }
        freeze(d);
        const auto [seed, candidates] = next_round();
        const GpModel model(d.data, theta_);
        const Posterior post = model.predict(candidates, {world_.predictive_noise});

        if (d.fresh) {
            record_estimate(d, t, post, seed, true);
            if (should_stop(d.history, stop_)) {
                finish(d, t, "rule");
                next_target();
                return;
            }
        }
        if (decision_due_ || (d.fresh && uav_.mode == FlightMode::loiter)) {
            const Incumbent inc = incumbent(model, d.data);
            const std::size_t w = select_next_waypoint(post, inc);
            issue_decision(t, world_.region.from_unit(candidates[w]), seed, {&d});
        }
    }

    void next_target() {
        if (strategy_ == Strategy::single || ++target_ >= devices_.size()) {
            done_ = true;
            return;
        }
        if (devices_[target_].data.size() < static_cast<std::size_t>(world_.min_init_measurements)) {
            start_scan();
            return;
        }
        decision_due_ = true;
    }

    void search_aggregated(double t) {
        std::vector<Device*> live;
        bool any_fresh = false;
        for (auto& d : devices_) {
            if (!d.active) continue;
            live.push_back(&d);
            any_fresh = any_fresh || d.fresh;
        }
        if (!any_fresh && !decision_due_) return;
        if (std::all_of(live.begin(), live.end(), [](const Device* d) { return d->data.empty(); })) {
            start_scan();
            return;
        }

        const auto [seed, candidates] = next_round();
        std::vector<GpModel> models;
        std::vector<Posterior> posts;
        models.reserve(live.size());
        posts.reserve(live.size());
        for (Device* d : live) {
            freeze(*d);
            models.emplace_back(d->data, theta_);
            posts.push_back(models.back().predict(candidates, {world_.predictive_noise}));
        }

        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < live.size(); ++i) {
            Device& d = *live[i];
            if (d.fresh) {
                record_estimate(d, t, posts[i], seed, true);
                if (should_stop(d.history, stop_)) {
                    finish(d, t, "rule");
                    continue;
                }
            }
            keep.push_back(i);
        }
        if (keep.empty()) {
            done_ = true;
            return;
        }
        if (!(decision_due_ || (any_fresh && uav_.mode == FlightMode::loiter))) return;

        std::vector<Posterior> remaining;
        std::vector<Device*> remaining_devices;
        double mu_plus = -std::numeric_limits<double>::infinity();
        for (std::size_t i : keep) {
            remaining.push_back(std::move(posts[i]));
            remaining_devices.push_back(live[i]);
            if (!live[i]->data.empty())
                mu_plus = std::max(mu_plus, incumbent(models[i], live[i]->data).mu_plus);
        }
        const AggregatedPosterior agg = aggregate_multi_device(remaining);
        const std::size_t w = select_next_waypoint(agg, mu_plus);
        issue_decision(t, world_.region.from_unit(candidates[w]), seed, remaining_devices);
    }

    // -- bookkeeping ------------------------------------------------------

    std::pair<std::uint64_t, std::vector<Point>> next_round() {
        const std::uint64_t seed = candidate_round_seed(seed_, round_++);
        Rng rng(seed);
        return {seed, sample_candidates(Rect::unit(), world_.n_candidates, rng)};
    }

    void record_estimate(Device& d, double t, const Posterior& post, std::uint64_t seed,
                         bool search_phase) {
        const Point est = world_.region.from_unit(post.candidates[estimate_location(post)]);
        d.last_estimate = est;
        if (search_phase) d.history.push_back(est);

        TraceEvent ev;
        ev.time = t;
        ev.uav = uav_.position;
        ev.kind = EventKind::estimate;
        ev.estimate = est;
        ev.error_m = distance(est, d.source->position);
        ev.candidate_seed = seed;
        ev.rssi_offset = d.data.offset();
        ev.search_phase = search_phase;
        d.trace.events.push_back(ev);
    }

    void issue_decision(double t, Point target, std::uint64_t seed,
                        const std::vector<Device*>& recipients) {
        uav_ = set_waypoint(uav_, target, world_.region);
        decision_due_ = false;
        for (Device* d : recipients) {
            TraceEvent ev;
            ev.time = t;
            ev.uav = uav_.position;
            ev.kind = EventKind::decision;
            ev.waypoint = uav_.waypoint;
            ev.candidate_seed = seed;
            ev.rssi_offset = d->data.offset();
            d->trace.events.push_back(ev);
        }
    }

    void finish(Device& d, double t, const char* reason) {
        d.active = false;
        TraceEvent ev;
        ev.time = t;
        ev.uav = uav_.position;
        ev.kind = EventKind::stop;
        ev.note = reason;
        if (d.last_estimate) {
            ev.estimate = d.last_estimate;
            ev.error_m = distance(*d.last_estimate, d.source->position);
            d.trace.final_estimate = d.last_estimate;
            d.trace.final_error_m = *ev.error_m;
        }
        d.trace.stopped_by_rule = std::string_view(reason) == "rule";
        d.trace.duration_s = t;
        d.trace.events.push_back(ev);
    }

    World world_;
    Hyperparams theta_;
    StopParams stop_;
    std::uint64_t seed_;
    Strategy strategy_;

    std::vector<Device> devices_;
    UavState uav_;
    std::vector<Point> scan_;
    std::size_t scan_index_ = 0;
    bool scanning_ = true;
    bool decision_due_ = false;
    bool done_ = false;
    std::size_t target_ = 0;
    std::uint64_t round_ = 0;
};

}  // namespace

void StopParams::validate() const {
    std::vector<std::string> issues;
    if (!(radius_m > 0.0)) issues.push_back("stop.radius_m: must be > 0");
    if (streak < 2) issues.push_back("stop.streak: must be >= 2");
    if (!(max_time_s > 0.0)) issues.push_back("stop.max_time_s: must be > 0");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

void World::validate() const {
    std::vector<std::string> issues;
    if (!region.valid()) issues.push_back("region: must have positive width and height");
    if (sources.empty()) issues.push_back("sources: at least one source required");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (!region.contains(sources[i].position))
            issues.push_back("sources[" + std::to_string(i) + "]: outside region");
        for (std::size_t k = 0; k < i; ++k)
            if (sources[k].id == sources[i].id)
                issues.push_back("sources[" + std::to_string(i) + "]: duplicate id '" +
                                 sources[i].id + "'");
    }
    if (!profile) issues.push_back("channel: no profile loaded");
    if (!(speed > 0.0)) issues.push_back("uav.speed: must be > 0");
    if (!(loiter_radius > 0.0)) issues.push_back("uav.loiter_radius: must be > 0");
    if (!(dt > 0.0 && dt <= kMaxStep)) issues.push_back("uav.dt: must be in (0, 1]");
    if (n_init < 0) issues.push_back("uav.n_init: must be >= 0");
    if (min_init_measurements < 1) issues.push_back("uav.min_init_measurements: must be >= 1");
    if (n_candidates < 1) issues.push_back("n_candidates: must be >= 1");
    try {
        arrivals.validate();
    } catch (const ValidationError& e) {
        for (const auto& s : e.issues()) issues.push_back("arrivals." + s);
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::measurement: return "measurement";
        case EventKind::decision: return "decision";
        case EventKind::estimate: return "estimate";
        case EventKind::stop: return "stop";
    }
    return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
    for (auto k : {EventKind::measurement, EventKind::decision, EventKind::estimate, EventKind::stop})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

bool should_stop(std::span<const Point> recent_estimates, const StopParams& stop) {
    const auto k = static_cast<std::size_t>(stop.streak);
    if (k == 0 || recent_estimates.size() < k) return false;
    const auto tail = recent_estimates.last(k);
    Point c;
    for (const Point& p : tail) c = c + p;
    c = (1.0 / static_cast<double>(k)) * c;
    return std::all_of(tail.begin(), tail.end(),
                       [&](const Point& p) { return distance(p, c) <= stop.radius_m; });
}

std::uint64_t candidate_round_seed(std::uint64_t run_seed, std::uint64_t round) {
    return derive_seed(run_seed, kCandidateStream, round);
}

std::uint64_t device_channel_seed(std::uint64_t run_seed, std::uint64_t index) {
    return derive_seed(run_seed, kChannelStream, index);
}

RunTrace run_localization(const World& world, const Hyperparams& theta, const StopParams& stop,
                          std::uint64_t seed) {
    return std::move(Mission(world, theta, stop, seed, Strategy::single).run().front());
}

std::vector<RunTrace> run_multi_sequential(const World& world, const Hyperparams& theta,
                                           const StopParams& stop, std::uint64_t seed) {
    return Mission(world, theta, stop, seed, Strategy::multi_sequential).run();
}

std::vector<RunTrace> run_multi_aggregated(const World& world, const Hyperparams& theta,
                                           const StopParams& stop, std::uint64_t seed) {
    return Mission(world, theta, stop, seed, Strategy::multi_aggregated).run();
}

std::vector<RunTrace> run_strategy(Strategy strategy, const World& world, const Hyperparams& theta,
                                   const StopParams& stop, std::uint64_t seed) {
    return Mission(world, theta, stop, seed, strategy).run();
}

}  // namespace uavbo
