#pragma once

// Seeded Monte Carlo batches and error-vs-time statistics.

#include <cstdint>
#include <string>
#include <vector>

#include "uavbo/localizer.hpp"
#include "uavbo/scenario.hpp"

namespace uavbo {

struct RunSummary {
    int run = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    bool stopped_by_rule = false;
    double final_error_m = 0.0;  // mean over devices; NaN if none estimated
    double duration_s = 0.0;     // latest stop time over devices
    int measurements = 0;        // over all devices
    int measurements_300s = 0;
};

/// Error-vs-time statistics on a fixed grid. A run contributes at grid time t
/// the error of its latest estimate at or before t (held after its stop);
/// runs with no estimate yet are left out of that grid point.
struct BatchStats {
    std::vector<double> time_s;
    std::vector<double> mean_err_m;
    std::vector<double> std_err_m;  // population std; 0 for a single run
    std::vector<int> contributing_runs;
    std::vector<RunSummary> runs;

    int failures() const;
};

inline constexpr double kStatsGridStep = 10.0;

/// Error of the latest estimate at or before t, averaged over devices that have one.
double run_error_at(const std::vector<RunTrace>& traces, double t);

RunSummary summarize_run(int index, std::uint64_t seed, const std::vector<RunTrace>& traces);

/// Executes runs with seeds base, base+1, ... on `parallelism` threads. Output is
/// independent of the thread count. `keep_traces` retains every run's traces.
struct BatchResult {
    BatchStats stats;
    std::vector<std::vector<RunTrace>> traces;  // empty unless keep_traces
};

BatchResult run_batch(const World& world, const ScenarioConfig& config, int runs, int parallelism,
                      bool keep_traces = false);

BatchStats compute_stats(const std::vector<std::vector<RunTrace>>& traces,
                         const std::vector<RunSummary>& summaries, double max_time_s);

/// stats.csv header: t_s,mean_err_m,std_err_m
std::string format_stats_csv(const BatchStats& stats);
/// runs_summary.csv header:
/// run,seed,status,stopped_by_rule,final_error_m,duration_s,measurements,measurements_300s
std::string format_runs_summary_csv(const BatchStats& stats);

}  // namespace uavbo
