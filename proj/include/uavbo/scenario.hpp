#pragma once

// Scenario configuration: one JSON document holding every knob of a run or
// batch, with all defaults embedded.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavbo/channel.hpp"
#include "uavbo/gp.hpp"
#include "uavbo/localizer.hpp"

namespace uavbo {

struct ChannelConfig {
    std::string profile_path;  // empty: generate from `generator`
    ProfileGenerator generator;
    bool missingness = true;
};

struct ScenarioConfig {
    Rect region{0.0, 0.0, 1000.0, 1000.0};
    std::vector<Source> sources{{"dev0", {500.0, 500.0}}};
    ChannelConfig channel;
    ArrivalParams arrivals;
    bool random_arrivals = true;
    double speed = 15.8;
    double loiter_radius = 50.0;
    double dt = 1.0;
    int n_init = 3;
    ScanAxis scan_axis = ScanAxis::vertical;
    int min_init_measurements = 3;
    Hyperparams gp;
    bool predictive_noise = false;
    int n_candidates = 350;
    StopParams stop;
    Strategy strategy = Strategy::single;
    std::uint64_t seed = 1;
    int runs = 1000;

    /// Throws ValidationError listing every failed field.
    void validate() const;
};

const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

/// Parses JSON; keys absent from the document keep their defaults. Unknown keys
/// and type mismatches are reported together as a ValidationError.
ScenarioConfig parse_config(const std::string& json_text);
std::string format_config(const ScenarioConfig& config);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Resolves the channel profile (relative paths against `base_dir`) and copies
/// the rest of the configuration into a World.
World build_world(const ScenarioConfig& config, const std::filesystem::path& base_dir = {});

}  // namespace uavbo
