#pragma once

// Stochastic measurement generation: binned empirical RSSI, probe-request
// transmission times, and distance-dependent packet loss.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavbo/geometry.hpp"

namespace uavbo {

struct HistogramEntry {
    double rssi = 0.0;
    double prob = 0.0;

    friend bool operator==(const HistogramEntry&, const HistogramEntry&) = default;
};

struct ChannelBin {
    double lo_m = 0.0;
    double hi_m = 0.0;
    double reception_prob = 1.0;
    std::vector<HistogramEntry> histogram;

    double mean_rssi() const;
    friend bool operator==(const ChannelBin&, const ChannelBin&) = default;
};

/// Contiguous distance bins, each [lo, hi) except the last which is closed.
/// Distances past the last edge use the last bin; below the first edge, the first.
class ChannelProfile {
public:
    ChannelProfile() = default;
    /// Throws ValidationError naming the first offending bin(s).
    explicit ChannelProfile(std::vector<ChannelBin> bins);

    const std::vector<ChannelBin>& bins() const { return bins_; }
    std::size_t bin_count() const { return bins_.size(); }
    std::size_t bin_index(double distance_m) const;
    const ChannelBin& bin_for(double distance_m) const { return bins_[bin_index(distance_m)]; }
    std::vector<double> edges() const;

    friend bool operator==(const ChannelProfile&, const ChannelProfile&) = default;

private:
    std::vector<ChannelBin> bins_;
};

/// Log-distance path-loss generator for a default profile:
/// rssi = p0 - 10 * eta * log10(max(d, 1)) + N(0, noise_std^2), discretized to
/// `rssi_step`, averaged over the distances inside each bin.
struct ProfileGenerator {
    double p0 = -30.0;
    double path_loss_exponent = 3.0;
    double noise_std = 4.0;
    double max_range_m = 600.0;
    int bins = 20;
    double min_reception = 0.05;
    double rssi_step = 1.0;

    void validate() const;
};

ChannelProfile generate_profile(const ProfileGenerator& gen);

enum class ProfileFormat { text, json };

/// Text grammar:
///   [# comment lines]
///   bin_lo_m,bin_hi_m,reception_prob
///   <lo>,<hi>,<p>          one edge line per bin
///     <rssi>,<prob>        indented histogram entries for that bin
ChannelProfile parse_profile(const std::string& content, ProfileFormat format);
std::string format_profile(const ChannelProfile& profile, ProfileFormat format);

/// Format is chosen by extension (.json) or a leading '{'.
ChannelProfile load_profile(const std::filesystem::path& path);
void save_profile(const ChannelProfile& profile, const std::filesystem::path& path);

struct ArrivalParams {
    double delta_t = 10.0;
    double eps_max = 5.0;

    void validate() const;
};

double sample_rssi(double distance_m, const ChannelProfile& profile, Rng& rng);

/// Emission times in (0, horizon] with i.i.d. uniform gaps on
/// [delta_t - eps_max, delta_t + eps_max], starting from time zero.
std::vector<double> transmission_times(const ArrivalParams& params, double horizon, Rng& rng);

/// A Bernoulli(reception_prob) draw followed, on success, by sample_rssi.
std::optional<double> try_receive(double distance_m, const ChannelProfile& profile, Rng& rng);

}  // namespace uavbo
