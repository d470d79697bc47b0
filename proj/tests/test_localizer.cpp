#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "uavbo/acquisition.hpp"
#include "uavbo/channel.hpp"
#include "uavbo/errors.hpp"
#include "uavbo/localizer.hpp"
#include "uavbo/scenario.hpp"

using namespace uavbo;

namespace {

World default_world() { return build_world(ScenarioConfig{}); }

const Hyperparams kTheta{};
const StopParams kStop{};

std::vector<Point> search_estimates(const RunTrace& t) {
    std::vector<Point> out;
    for (const auto& ev : t.events)
        if (ev.kind == EventKind::estimate && ev.search_phase) out.push_back(*ev.estimate);
    return out;
}

void check_trace_shape(const RunTrace& t) {
    REQUIRE(!t.events.empty());
    int stops = 0;
    double prev_tx = -1.0;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& ev = t.events[i];
        if (i) CHECK(ev.time >= t.events[i - 1].time);
        if (ev.kind == EventKind::stop) ++stops;
        if (ev.kind == EventKind::measurement) {
            REQUIRE(ev.tx_time.has_value());
            CHECK(*ev.tx_time > prev_tx);
            CHECK(*ev.tx_time <= ev.time + 1e-9);
            prev_tx = *ev.tx_time;
        }
    }
    CHECK(stops == 1);
    CHECK(t.events.back().kind == EventKind::stop);
}

/// Rebuilds the dataset visible at event `upto` from the trace and re-derives
/// that round's candidates from the recorded seed.
struct Replay {
    Dataset data;
    std::vector<Point> candidates;
};

Replay replay_at(const World& w, const RunTrace& t, std::size_t upto) {
    const auto& ev = t.events[upto];
    Replay r{Dataset(*ev.rssi_offset), {}};
    for (std::size_t i = 0; i < upto; ++i) {
        const auto& m = t.events[i];
        if (m.kind == EventKind::measurement) r.data.append(*m.tx_time, w.region.to_unit(m.uav), *m.rssi);
    }
    Rng rng(*ev.candidate_seed);
    r.candidates = sample_candidates(Rect::unit(), w.n_candidates, rng);
    return r;
}

void check_replay(const World& w, const RunTrace& t) {
    int decisions = 0, estimates = 0;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& ev = t.events[i];
        if (ev.kind != EventKind::decision && ev.kind != EventKind::estimate) continue;
        const Replay r = replay_at(w, t, i);
        const bool noise = ev.kind == EventKind::decision ? w.predictive_noise
                                                          : (ev.search_phase && w.predictive_noise);
        const Posterior p = posterior(r.data, r.candidates, kTheta, {noise});
        if (ev.kind == EventKind::estimate) {
            const auto best = std::max_element(p.mean.begin(), p.mean.end()) - p.mean.begin();
            const Point want = w.region.from_unit(r.candidates[best]);
            CHECK(distance(want, *ev.estimate) <= 1e-9);
            ++estimates;
            continue;
        }
        // Incumbent: best posterior mean over the visited locations.
        std::vector<Point> visited;
        for (const auto& m : r.data.measurements()) visited.push_back(m.location);
        const Posterior at_visited = posterior(r.data, visited, kTheta);
        const double mu_plus = *std::max_element(at_visited.mean.begin(), at_visited.mean.end());
        std::size_t best = 0;
        double best_ei = -1.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double ei = expected_improvement(p.mean[j], p.std[j], mu_plus);
            if (ei > best_ei) {
                best_ei = ei;
                best = j;
            }
        }
        const Point want = w.region.clamp(w.region.from_unit(r.candidates[best]));
        CHECK(distance(want, *ev.waypoint) <= 1e-9);
        ++decisions;
    }
    CHECK(decisions > 0);
    CHECK(estimates > 0);
}

ChannelProfile starved_profile() {
    return ChannelProfile({ChannelBin{0.0, 2000.0, 0.0, {{-60.0, 1.0}}}});
}

}  // namespace

TEST_CASE("stopping predicate") {
    StopParams s{50.0, 3, 1800.0};
    const std::vector<Point> same{{10, 10}, {10, 10}, {10, 10}};
    CHECK(should_stop(same, s));
    const std::vector<Point> apart{{10, 10}, {10, 10}, {510, 10}};
    CHECK_FALSE(should_stop(apart, s));
    CHECK_FALSE(should_stop(std::vector<Point>{{1, 1}, {1, 1}}, s));
    CHECK_FALSE(should_stop(std::vector<Point>{}, s));

    // Only the last k estimates count.
    const std::vector<Point> recent{{900, 900}, {10, 10}, {12, 10}, {10, 12}};
    CHECK(should_stop(recent, s));

    s.streak = 4;
    const double r = 0.9 * s.radius_m;
    std::vector<Point> circle;
    for (int i = 0; i < 4; ++i) {
        const double a = 0.3 + i * std::numbers::pi / 2.0;
        circle.push_back({200.0 + r * std::cos(a), 300.0 + r * std::sin(a)});
    }
    CHECK(oracle::clustered(circle, s.radius_m));
    CHECK(should_stop(circle, s));

    std::mt19937_64 rng(41);
    std::normal_distribution<double> n(0.0, 30.0);
    for (int i = 0; i < 2000; ++i) {
        std::vector<Point> pts;
        for (int k = 0; k < 4; ++k) pts.push_back({n(rng), n(rng)});
        CHECK(should_stop(pts, s) == oracle::clustered(pts, s.radius_m));
    }
}

TEST_CASE("single-device run: shape, determinism and stop soundness") {
    const World w = default_world();
    const RunTrace a = run_localization(w, kTheta, kStop, 17);
    const RunTrace b = run_localization(w, kTheta, kStop, 17);
    CHECK(a == b);
    CHECK_FALSE(a == run_localization(w, kTheta, kStop, 18));

    check_trace_shape(a);
    CHECK(a.stopped_by_rule);
    CHECK(a.events.back().note == "rule");
    REQUIRE(a.final_estimate.has_value());
    CHECK(a.final_error_m == doctest::Approx(distance(*a.final_estimate, w.sources[0].position)));
    const auto est = search_estimates(a);
    REQUIRE(est.size() >= static_cast<std::size_t>(kStop.streak));
    CHECK(oracle::clustered({est.end() - kStop.streak, est.end()}, kStop.radius_m));
}

TEST_CASE("decisions and estimates replay from the trace") {
    const World w = default_world();
    for (std::uint64_t seed : {3u, 4u, 5u}) check_replay(w, run_localization(w, kTheta, kStop, seed));

    World noisy = w;
    noisy.predictive_noise = true;
    check_replay(noisy, run_localization(noisy, kTheta, kStop, 6));
}

TEST_CASE("search decisions wait for a measurement") {
    const World w = default_world();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RunTrace t = run_localization(w, kTheta, kStop, seed);
        bool first = true;
        for (std::size_t i = 0; i < t.events.size(); ++i) {
            if (t.events[i].kind != EventKind::decision) continue;
            if (first) {  // issued on leaving the initial scan
                first = false;
                continue;
            }
            bool fresh = false;
            for (std::size_t j = i; j-- > 0 && t.events[j].time == t.events[i].time;)
                fresh = fresh || t.events[j].kind == EventKind::measurement;
            CHECK(fresh);
        }
    }
}

TEST_CASE("initial scan precedes the search") {
    const World w = default_world();
    const RunTrace t = run_localization(w, kTheta, kStop, 9);
    double first_decision = -1.0;
    for (const auto& ev : t.events)
        if (ev.kind == EventKind::decision) {
            first_decision = ev.time;
            break;
        }
    // Scan path: corner, three bounces, corner; it takes on the order of 3 minutes.
    const auto wps = initial_scan_waypoints(w.region, w.n_init);
    double len = 0.0;
    for (std::size_t i = 1; i < wps.size(); ++i) len += distance(wps[i], wps[i - 1]);
    CHECK(first_decision >= (len - 4 * w.loiter_radius) / w.speed);
    for (const auto& ev : t.events)
        if (ev.kind == EventKind::estimate && ev.time < first_decision) CHECK_FALSE(ev.search_phase);
}

TEST_CASE("reception starvation ends at max_time with no estimate") {
    World w = default_world();
    w.profile = std::make_shared<const ChannelProfile>(starved_profile());
    const StopParams stop{20.0, 4, 600.0};
    const RunTrace t = run_localization(w, kTheta, stop, 1);
    check_trace_shape(t);
    CHECK(t.events.size() == 1);
    CHECK(t.events.back().note == "max_time");
    CHECK_FALSE(t.stopped_by_rule);
    CHECK_FALSE(t.final_estimate.has_value());
    CHECK(std::isnan(t.final_error_m));
    CHECK(t.duration_s == 600.0);
}

TEST_CASE("disabling missingness and jitter") {
    World w = default_world();
    w.profile = std::make_shared<const ChannelProfile>(starved_profile());
    w.missingness = false;
    w.random_arrivals = false;
    const StopParams stop{20.0, 4, 200.0};
    const RunTrace t = run_localization(w, kTheta, stop, 1);
    std::vector<double> tx;
    for (const auto& ev : t.events)
        if (ev.kind == EventKind::measurement) tx.push_back(*ev.tx_time);
    REQUIRE(tx.size() == 20);
    for (std::size_t i = 0; i < tx.size(); ++i) CHECK(tx[i] == doctest::Approx(10.0 * (i + 1)));
}

TEST_CASE("world validation") {
    World w = default_world();
    w.sources[0].position = {2000.0, 10.0};
    try {
        run_localization(w, kTheta, kStop, 1);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("sources[0]") != std::string::npos);
    }
    CHECK_THROWS_AS(run_localization(default_world(), kTheta, StopParams{0.0, 4, 10.0}, 1), ValidationError);
    CHECK_THROWS_AS(run_localization(default_world(), kTheta, StopParams{20.0, 1, 10.0}, 1), ValidationError);
}

TEST_CASE("M = 1 strategies reduce to the single-device run") {
    const World w = default_world();
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const RunTrace single = run_localization(w, kTheta, kStop, seed);
        const auto seq = run_multi_sequential(w, kTheta, kStop, seed);
        const auto agg = run_multi_aggregated(w, kTheta, kStop, seed);
        REQUIRE(seq.size() == 1);
        REQUIRE(agg.size() == 1);
        CHECK(seq[0] == single);
        CHECK(agg[0] == single);
        CHECK(run_strategy(Strategy::single, w, kTheta, kStop, seed)[0] == single);
    }
}

TEST_CASE("M = 2 sequential: the second search starts with collected data") {
    World w = default_world();
    w.sources = {{"a", {200.0, 250.0}}, {"b", {800.0, 750.0}}};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto traces = run_multi_sequential(w, kTheta, kStop, seed);
        REQUIRE(traces.size() == 2);
        for (const auto& t : traces) check_trace_shape(t);
        check_replay(w, traces[0]);
        check_replay(w, traces[1]);

        const double first_stop = traces[0].events.back().time;
        int early = 0;
        double first_b_decision = INFINITY;
        for (const auto& ev : traces[1].events) {
            if (ev.kind == EventKind::measurement && ev.time <= first_stop) ++early;
            if (ev.kind == EventKind::decision) first_b_decision = std::min(first_b_decision, ev.time);
        }
        CHECK(early >= 1);
        CHECK(first_b_decision >= first_stop);
        CHECK(traces == run_multi_sequential(w, kTheta, kStop, seed));
    }
}

TEST_CASE("aggregation over coincident identical devices equals either device") {
    Dataset d;
    d.append(1.0, {0.2, 0.3}, -55.0);
    d.append(2.0, {0.6, 0.4}, -60.0);
    d.append(3.0, {0.5, 0.9}, -52.0);
    d.recenter(d.mean_raw_rssi());
    Rng rng(2);
    const auto c = sample_candidates(Rect::unit(), 350, rng);
    const Posterior p = posterior(d, c, kTheta);
    const std::vector<Posterior> both{p, p};
    const Posterior agg = aggregate_multi_device(both);
    CHECK(agg.mean == p.mean);
    CHECK(agg.std == p.std);
    CHECK(select_next_waypoint(agg, incumbent(d, kTheta)) == select_next_waypoint(p, incumbent(d, kTheta)));
}

TEST_CASE("M = 3 aggregated search beats the uninformed guess") {
    const World base = default_world();
    int all_removed = 0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(1000 + s);
        std::uniform_real_distribution<double> u(100.0, 900.0);
        World w = base;
        w.sources = {{"a", {u(rng), u(rng)}}, {"b", {u(rng), u(rng)}}, {"c", {u(rng), u(rng)}}};
        const auto traces = run_multi_aggregated(w, kTheta, kStop, 7000 + s);
        REQUIRE(traces.size() == 3);
        bool removed = true;
        for (std::size_t j = 0; j < 3; ++j) {
            const RunTrace& t = traces[j];
            check_trace_shape(t);
            removed = removed && t.stopped_by_rule;
            // Starved baseline: with no data the estimate is an uninformed
            // uniform point, whose expected error we integrate numerically.
            const Point src = w.sources[j].position;
            double base_err = 0.0;
            const int g = 100;
            for (int ix = 0; ix < g; ++ix)
                for (int iy = 0; iy < g; ++iy)
                    base_err += distance(src, {(ix + 0.5) * 10.0, (iy + 0.5) * 10.0});
            base_err /= g * g;
            REQUIRE(t.final_estimate.has_value());
            CHECK(t.final_error_m <= base_err);
            const auto est = search_estimates(t);
            if (t.stopped_by_rule) {
                REQUIRE(est.size() >= static_cast<std::size_t>(kStop.streak));
                CHECK(oracle::clustered({est.end() - kStop.streak, est.end()}, kStop.radius_m));
            }
        }
        all_removed += removed;
    }
    CHECK(all_removed >= static_cast<int>(0.8 * seeds));
}

TEST_CASE("seed derivation") {
    CHECK(candidate_round_seed(1, 0) != candidate_round_seed(1, 1));
    CHECK(candidate_round_seed(1, 0) != candidate_round_seed(2, 0));
    CHECK(device_channel_seed(1, 0) != device_channel_seed(1, 1));
    CHECK(device_channel_seed(5, 3) == device_channel_seed(5, 3));
    CHECK(candidate_round_seed(5, 3) != device_channel_seed(5, 3));
}
