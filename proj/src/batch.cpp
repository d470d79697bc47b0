#include "uavbo/batch.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "uavbo/trace_io.hpp"

namespace uavbo {

int BatchStats::failures() const {
    int n = 0;
    for (const auto& r : runs) n += r.failed ? 1 : 0;
    return n;
}

double run_error_at(const std::vector<RunTrace>& traces, double t) {
    double sum = 0.0;
    int count = 0;
    for (const auto& tr : traces) {
        std::optional<double> err;
        for (const auto& ev : tr.events) {
            if (ev.time > t) break;
            if (ev.kind == EventKind::estimate) err = ev.error_m;
        }
        if (err) {
            sum += *err;
            ++count;
        }
    }
    return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

RunSummary summarize_run(int index, std::uint64_t seed, const std::vector<RunTrace>& traces) {
    RunSummary s;
    s.run = index;
    s.seed = seed;
    s.stopped_by_rule = !traces.empty();
    double err_sum = 0.0;
    int err_count = 0;
    for (const auto& tr : traces) {
        if (tr.aborted) {
            s.failed = true;
            s.failure = tr.abort_reason;
        }
        s.stopped_by_rule = s.stopped_by_rule && tr.stopped_by_rule;
        s.duration_s = std::max(s.duration_s, tr.duration_s);
        if (!std::isnan(tr.final_error_m)) {
            err_sum += tr.final_error_m;
            ++err_count;
        }
        for (const auto& ev : tr.events) {
            if (ev.kind != EventKind::measurement) continue;
            ++s.measurements;
            if (ev.time <= 300.0) ++s.measurements_300s;
        }
    }
    s.final_error_m = err_count ? err_sum / err_count : std::numeric_limits<double>::quiet_NaN();
    return s;
}

BatchStats compute_stats(const std::vector<std::vector<RunTrace>>& traces,
                         const std::vector<RunSummary>& summaries, double max_time_s) {
    BatchStats stats;
    stats.runs = summaries;
    const auto steps = static_cast<long>(std::floor(max_time_s / kStatsGridStep + 1e-9));
    for (long k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) * kStatsGridStep;
        double sum = 0.0;
        double sq = 0.0;
        int n = 0;
        for (std::size_t r = 0; r < traces.size(); ++r) {
            if (summaries[r].failed) continue;
            const double e = run_error_at(traces[r], t);
            if (std::isnan(e)) continue;
            sum += e;
            ++n;
        }
        const double mean = n ? sum / n : std::numeric_limits<double>::quiet_NaN();
        for (std::size_t r = 0; r < traces.size() && n; ++r) {
            if (summaries[r].failed) continue;
            const double e = run_error_at(traces[r], t);
            if (!std::isnan(e)) sq += (e - mean) * (e - mean);
        }
        stats.time_s.push_back(t);
        stats.mean_err_m.push_back(mean);
        stats.std_err_m.push_back(n ? std::sqrt(sq / n) : std::numeric_limits<double>::quiet_NaN());
        stats.contributing_runs.push_back(n);
    }
    return stats;
}

BatchResult run_batch(const World& world, const ScenarioConfig& config, int runs, int parallelism,
                      bool keep_traces) {
    if (runs < 1) throw std::invalid_argument("run_batch: runs must be >= 1");
    parallelism = std::max(1, std::min(parallelism, runs));

    std::vector<std::vector<RunTrace>> traces(static_cast<std::size_t>(runs));
    std::vector<RunSummary> summaries(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};

    auto worker = [&] {
        for (int i = next++; i < runs; i = next++) {
            const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(i);
            try {
                traces[i] = run_strategy(config.strategy, world, config.gp, config.stop, seed);
                summaries[i] = summarize_run(i, seed, traces[i]);
            } catch (const std::exception& e) {
                traces[i].clear();
                summaries[i] = RunSummary{};
                summaries[i].run = i;
                summaries[i].seed = seed;
                summaries[i].failed = true;
                summaries[i].failure = e.what();
                summaries[i].final_error_m = std::numeric_limits<double>::quiet_NaN();
            }
        }
    };

    std::vector<std::jthread> pool;
    for (int w = 1; w < parallelism; ++w) pool.emplace_back(worker);
    worker();
    pool.clear();

    BatchResult result;
    result.stats = compute_stats(traces, summaries, config.stop.max_time_s);
    if (keep_traces) result.traces = std::move(traces);
    return result;
}

std::string format_stats_csv(const BatchStats& stats) {
    std::string out = "t_s,mean_err_m,std_err_m\n";
    for (std::size_t i = 0; i < stats.time_s.size(); ++i) {
        out += format_number(stats.time_s[i]) + "," + format_number(stats.mean_err_m[i]) + "," +
               format_number(stats.std_err_m[i]) + "\n";
    }
    return out;
}

std::string format_runs_summary_csv(const BatchStats& stats) {
    std::string out =
        "run,seed,status,stopped_by_rule,final_error_m,duration_s,measurements,measurements_300s\n";
    for (const auto& r : stats.runs) {
        out += std::to_string(r.run) + "," + std::to_string(r.seed) + "," + (r.failed ? "failed" : "ok") +
               "," + (r.stopped_by_rule ? "1" : "0") + "," + format_number(r.final_error_m) + "," +
               format_number(r.duration_s) + "," + std::to_string(r.measurements) + "," +
               std::to_string(r.measurements_300s) + "\n";
    }
    return out;
}

}  // namespace uavbo
