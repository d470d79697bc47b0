#pragma once

// Offline hyperparameter fitting from a scan of the region: grid-search the
// log marginal likelihood on a train split and score a held-out split.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uavbo/geometry.hpp"
#include "uavbo/gp.hpp"

namespace uavbo {

/// One scan row; the file header is `x_m,y_m,rssi`.
struct ScanPoint {
    Point position;  // meters
    double rssi = 0.0;
};

std::vector<ScanPoint> parse_scan_csv(const std::string& content);
std::string format_scan_csv(const std::vector<ScanPoint>& points);

/// Normalizes positions into `region` and centers RSSI on its mean.
Dataset make_dataset(const std::vector<ScanPoint>& points, const Rect& region);

/// Surfaces over (length_scale, signal_std) at the fitted noise_std.
struct FitReport {
    FitResult fit;
    Hyperparams best;
    std::vector<double> loglik;  // [il * n_sf + is]
    std::vector<double> mse;     // same layout
    std::size_t train_size = 0;
    std::size_t test_size = 0;
};

inline constexpr std::size_t kMinScanPoints = 10;

/// 80/20 split (shuffled by `seed`), grid fit on the train part, holdout MSE of
/// the test part for every (l, sf) node. Throws std::invalid_argument when the
/// scan has fewer than kMinScanPoints rows.
FitReport run_fit(const std::vector<ScanPoint>& scan, const Rect& region, const FitGrid& grid,
                  std::uint64_t seed);

/// Long-format grid CSV: length_scale,signal_std,value
std::string format_surface_csv(const FitReport& report, const std::vector<double>& values);

/// Draws `n` uniform locations in `region` and a GP sample (plus noise) with `theta`;
/// `mean_rssi` is added back so the rows look like raw RSSI.
std::vector<ScanPoint> synthesize_scan(const Rect& region, const Hyperparams& theta, int n,
                                       double mean_rssi, std::uint64_t seed);

}  // namespace uavbo
