#pragma once

// RunTrace serialization: a flat CSV for plotting and a JSON-lines record
// file carrying every event field.
//
// CSV header: time_s,uav_x_m,uav_y_m,event,rssi,est_x_m,est_y_m,error_m
// Empty cells mean "not applicable to this event".

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavbo/localizer.hpp"

namespace uavbo {

inline constexpr const char* kTraceCsvHeader =
    "time_s,uav_x_m,uav_y_m,event,rssi,est_x_m,est_y_m,error_m";

/// One CSV row as read back from disk.
struct TraceCsvRow {
    double time_s = 0.0;
    Point uav;
    EventKind event = EventKind::measurement;
    std::optional<double> rssi;
    std::optional<Point> estimate;
    std::optional<double> error_m;

    friend bool operator==(const TraceCsvRow&, const TraceCsvRow&) = default;
};

/// Shortest round-trip decimal representation.
std::string format_number(double v);

std::string format_trace_csv(const RunTrace& trace);
std::vector<TraceCsvRow> parse_trace_csv(const std::string& content);
TraceCsvRow to_csv_row(const TraceEvent& ev);

std::string format_trace_jsonl(const RunTrace& trace);
/// Rebuilds the event list; device id and source come from the records.
RunTrace parse_trace_jsonl(const std::string& content);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace uavbo
