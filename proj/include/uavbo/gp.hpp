#pragma once

// Gaussian-process regression over normalized 2-D locations.
//
// All functions here are pure: they read their arguments and return values,
// so they may be called concurrently on shared data.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "uavbo/geometry.hpp"

namespace uavbo {

/// GP hyperparameters. Signal units are (centered) RSSI; length scale is in
/// normalized-coordinate units.
struct Hyperparams {
    double noise_std = 4.47;
    double signal_std = 3.32;
    double length_scale = 0.2;

    void validate() const;
    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct Measurement {
    double time = 0.0;
    Point location;  // normalized coordinates
    double rssi = 0.0;  // centered: raw minus the dataset offset
};

/// Time-ordered measurements with a centering offset subtracted from raw RSSI.
class Dataset {
public:
    explicit Dataset(double offset = 0.0) : offset_(offset) {}

    /// Appends a raw RSSI reading. Throws std::invalid_argument unless `time`
    /// is strictly later than the last stored measurement.
    void append(double time, Point location, double raw_rssi);

    /// Changes the centering offset, shifting every stored value accordingly.
    void recenter(double offset);

    double offset() const { return offset_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const Measurement& operator[](std::size_t i) const { return items_[i]; }
    const std::vector<Measurement>& measurements() const { return items_; }
    double raw_rssi(std::size_t i) const { return items_[i].rssi + offset_; }
    double mean_raw_rssi() const;

private:
    std::vector<Measurement> items_;
    double offset_;
};

struct Posterior {
    std::vector<Point> candidates;
    std::vector<double> mean;
    std::vector<double> std;

    std::size_t size() const { return candidates.size(); }
};

struct PosteriorOptions {
    /// Report predictive variance of y (adds noise_std^2) instead of latent f.
    bool include_noise = false;
};

/// Relative diagonal jitter, scaled by signal_std^2.
inline constexpr double kJitter = 1e-9;

/// Squared-exponential covariance sf^2 * exp(-|a-b|^2 / l^2). No factor 1/2.
double kernel(Point a, Point b, const Hyperparams& theta);

/// A dataset conditioned once (Cholesky of K + sigma^2 I) and queried many times.
class GpModel {
public:
    /// Throws ConditioningError if the system matrix is not positive definite.
    GpModel(const Dataset& data, const Hyperparams& theta);
    GpModel(GpModel&&) noexcept;
    GpModel& operator=(GpModel&&) noexcept;
    ~GpModel();

    Posterior predict(std::span<const Point> candidates, PosteriorOptions options = {}) const;
    std::vector<double> mean_at(std::span<const Point> locations) const;
    const Hyperparams& params() const { return theta_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Hyperparams theta_;
};

/// Predictive mean and latent standard deviation at each candidate.
/// Throws ConditioningError if the system matrix is not positive definite.
Posterior posterior(const Dataset& data, std::span<const Point> candidates,
                    const Hyperparams& theta, PosteriorOptions options = {});

/// log N(y; 0, K + sigma^2 I). Zero for an empty dataset.
double log_marginal_likelihood(const Dataset& data, const Hyperparams& theta);

/// Evenly spaced inclusive axis; a single-point axis sits at `lo`.
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;

    double at(int i) const;
    /// Index of the grid value nearest to `v` (clamped into the axis).
    int nearest(double v) const;
    double step() const { return count > 1 ? (hi - lo) / (count - 1) : 0.0; }
};

struct FitGrid {
    GridAxis length_scale{0.05, 1.0, 20};
    GridAxis signal_std{0.5, 10.0, 20};
    GridAxis noise_std{1.0, 10.0, 10};

    void validate() const;
    std::size_t size() const {
        return static_cast<std::size_t>(length_scale.count) * signal_std.count * noise_std.count;
    }
};

struct GridIndex {
    int length_scale = 0;
    int signal_std = 0;
    int noise_std = 0;

    friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

/// Log marginal likelihood on every grid node; -inf where factorization failed.
struct LikelihoodSurface {
    FitGrid grid;
    std::vector<double> values;

    double at(GridIndex i) const { return values[flat(i)]; }
    std::size_t flat(GridIndex i) const {
        return (static_cast<std::size_t>(i.length_scale) * grid.signal_std.count + i.signal_std) *
                   grid.noise_std.count +
               i.noise_std;
    }
    Hyperparams params(GridIndex i) const {
        return {grid.noise_std.at(i.noise_std), grid.signal_std.at(i.signal_std),
                grid.length_scale.at(i.length_scale)};
    }
};

struct FitResult {
    Hyperparams best;
    GridIndex best_index;
    LikelihoodSurface surface;
};

/// Exhaustive grid maximization of the log marginal likelihood. Ties go to the
/// smallest length scale, then signal std, then noise std.
///
/// Each length scale needs one eigendecomposition of the correlation matrix;
/// every (signal, noise) pair is then evaluated in O(n).
FitResult fit_hyperparameters(const Dataset& data, const FitGrid& grid);

/// Mean squared error between test RSSI (re-centered with the train offset)
/// and the posterior mean predicted from `train` at the test locations.
double holdout_mse(const Dataset& train, const Dataset& test, const Hyperparams& theta);

}  // namespace uavbo
