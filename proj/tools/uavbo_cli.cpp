// uavbo: command-line front end for scenario runs, Monte Carlo batches,
// hyperparameter fitting and channel-profile generation.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "uavbo/batch.hpp"
#include "uavbo/channel.hpp"
#include "uavbo/errors.hpp"
#include "uavbo/fitting.hpp"
#include "uavbo/scenario.hpp"
#include "uavbo/trace_io.hpp"

namespace fs = std::filesystem;
using namespace uavbo;

namespace {

enum ExitCode : int {
    kOk = 0,
    kError = 1,
    kInvalid = 2,
    kMaxTime = 3,
    kTooManyFailures = 4,
};

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::optional<int> runs;
    int parallelism = 1;
    std::string strategy;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "Scenario JSON (defaults apply to absent keys)");
    app->add_option("--seed", o.seed, "Base seed (overrides config)");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--runs", o.runs, "Number of runs (overrides config)");
    app->add_option("--parallelism", o.parallelism, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--strategy", o.strategy, "single|multi-seq|multi-agg (overrides config)");
}

ScenarioConfig resolve_config(const CommonOptions& o, fs::path& base_dir) {
    ScenarioConfig c;
    if (!o.config.empty()) {
        c = load_config(o.config);
        base_dir = fs::path(o.config).parent_path();
    }
    if (o.seed) c.seed = *o.seed;
    if (o.runs) c.runs = *o.runs;
    if (!o.strategy.empty()) c.strategy = parse_strategy(o.strategy);
    c.validate();
    return c;
}

std::string trace_stem(const ScenarioConfig& c, const RunTrace& t) {
    return c.strategy == Strategy::single ? std::string("trace") : "trace_" + t.device_id;
}

int cmd_run(const CommonOptions& o) {
    fs::path base;
    const ScenarioConfig c = resolve_config(o, base);
    const World world = build_world(c, base);
    const auto traces = run_strategy(c.strategy, world, c.gp, c.stop, c.seed);
    fs::create_directories(o.out);
    bool all_rule = true;
    for (const auto& t : traces) {
        const std::string stem = trace_stem(c, t);
        write_text(fs::path(o.out) / (stem + ".csv"), format_trace_csv(t));
        write_text(fs::path(o.out) / (stem + ".jsonl"), format_trace_jsonl(t));
        std::printf("%s: %s after %s s, final error %s m\n", t.device_id.c_str(),
                    t.events.back().note.c_str(), format_number(t.duration_s).c_str(),
                    format_number(t.final_error_m).c_str());
        if (t.aborted) {
            std::fprintf(stderr, "run aborted: %s\n", t.abort_reason.c_str());
            return kError;
        }
        all_rule = all_rule && t.stopped_by_rule;
    }
    return all_rule ? kOk : kMaxTime;
}

int cmd_montecarlo(const CommonOptions& o) {
    fs::path base;
    const ScenarioConfig c = resolve_config(o, base);
    const World world = build_world(c, base);
    const BatchResult result = run_batch(world, c, c.runs, o.parallelism);
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "stats.csv", format_stats_csv(result.stats));
    write_text(fs::path(o.out) / "runs_summary.csv", format_runs_summary_csv(result.stats));

    const int failures = result.stats.failures();
    std::printf("runs: %d, failures: %d\n", c.runs, failures);
    for (std::size_t i = 0; i < result.stats.time_s.size(); ++i) {
        if (result.stats.time_s[i] == 300.0) {
            std::printf("mean error at 300 s: %s m (std %s m)\n",
                        format_number(result.stats.mean_err_m[i]).c_str(),
                        format_number(result.stats.std_err_m[i]).c_str());
        }
    }
    return failures * 10 > c.runs ? kTooManyFailures : kOk;
}

GridAxis parse_axis(const std::string& text, const GridAxis& fallback) {
    if (text.empty()) return fallback;
    GridAxis a;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &a.lo, &a.hi, &a.count) != 3) {
        throw ValidationError("grid axis '" + text + "': expected lo:hi:count");
    }
    return a;
}

struct FitOptions {
    std::string scan;
    std::string l_axis;
    std::string sf_axis;
    std::string sn_axis;
};

int cmd_fit(const CommonOptions& o, const FitOptions& f) {
    fs::path base;
    const ScenarioConfig c = resolve_config(o, base);
    FitGrid grid;
    grid.length_scale = parse_axis(f.l_axis, grid.length_scale);
    grid.signal_std = parse_axis(f.sf_axis, grid.signal_std);
    grid.noise_std = parse_axis(f.sn_axis, grid.noise_std);

    const auto scan = parse_scan_csv(read_text(f.scan));
    const FitReport report = run_fit(scan, c.region, grid, c.seed);
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "surface_loglik.csv", format_surface_csv(report, report.loglik));
    write_text(fs::path(o.out) / "surface_mse.csv", format_surface_csv(report, report.mse));
    const auto& b = report.best;
    std::printf("argmax: length_scale=%s signal_std=%s noise_std=%s loglik=%s\n",
                format_number(b.length_scale).c_str(), format_number(b.signal_std).c_str(),
                format_number(b.noise_std).c_str(),
                format_number(report.fit.surface.at(report.fit.best_index)).c_str());
    return kOk;
}

struct GenProfileOptions {
    ProfileGenerator gen;
    std::string format = "text";
};

int cmd_gen_profile(const CommonOptions& o, const GenProfileOptions& g) {
    const ChannelProfile profile = generate_profile(g.gen);
    fs::create_directories(o.out);
    const fs::path path = fs::path(o.out) / (g.format == "json" ? "profile.json" : "profile.csv");
    save_profile(profile, path);
    std::printf("wrote %s (%zu bins)\n", path.string().c_str(), profile.bin_count());
    return kOk;
}

int cmd_print_config(const CommonOptions& o) {
    fs::path base;
    std::cout << format_config(resolve_config(o, base));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"UAV source localization with GP regression and expected improvement"};
    app.require_subcommand(1);

    CommonOptions common;
    FitOptions fit;
    GenProfileOptions gen;

    auto* run = app.add_subcommand("run", "Execute one localization run and write trace files");
    add_common(run, common);
    auto* mc = app.add_subcommand("montecarlo", "Seeded batch of runs with error-vs-time statistics");
    add_common(mc, common);
    auto* fit_cmd = app.add_subcommand("fit", "Grid-search GP hyperparameters on scan data");
    add_common(fit_cmd, common);
    fit_cmd->add_option("--scan", fit.scan, "CSV with header x_m,y_m,rssi")->required();
    fit_cmd->add_option("--length-scale", fit.l_axis, "lo:hi:count (default 0.05:1:20)");
    fit_cmd->add_option("--signal-std", fit.sf_axis, "lo:hi:count (default 0.5:10:20)");
    fit_cmd->add_option("--noise-std", fit.sn_axis, "lo:hi:count (default 1:10:10)");
    auto* gp_cmd = app.add_subcommand("gen-profile", "Write a log-distance channel profile");
    add_common(gp_cmd, common);
    gp_cmd->add_option("--p0", gen.gen.p0, "RSSI at 1 m");
    gp_cmd->add_option("--eta", gen.gen.path_loss_exponent, "Path-loss exponent");
    gp_cmd->add_option("--noise-std", gen.gen.noise_std, "Shadowing std");
    gp_cmd->add_option("--max-range", gen.gen.max_range_m, "Upper edge of the last bin (m)");
    gp_cmd->add_option("--bins", gen.gen.bins, "Number of distance bins");
    gp_cmd->add_option("--min-reception", gen.gen.min_reception, "Reception probability floor");
    gp_cmd->add_option("--rssi-step", gen.gen.rssi_step, "Histogram resolution");
    gp_cmd->add_option("--format", gen.format, "text|json")->check(CLI::IsMember({"text", "json"}));
    auto* pc = app.add_subcommand("print-config", "Print the effective configuration as JSON");
    add_common(pc, common);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(common);
        if (mc->parsed()) return cmd_montecarlo(common);
        if (fit_cmd->parsed()) return cmd_fit(common, fit);
        if (gp_cmd->parsed()) return cmd_gen_profile(common, gen);
        if (pc->parsed()) return cmd_print_config(common);
    } catch (const ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
