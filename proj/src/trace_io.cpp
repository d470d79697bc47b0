#include "uavbo/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "uavbo/errors.hpp"

namespace uavbo {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& cell, int line) {
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError("trace csv line " + std::to_string(line) + ": bad number '" + cell + "'");
    }
    return v;
}

json point_json(Point p) { return json::array({p.x, p.y}); }

Point json_point(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

TraceCsvRow to_csv_row(const TraceEvent& ev) {
    return {ev.time, ev.uav, ev.kind, ev.rssi, ev.estimate, ev.error_m};
}

std::string format_trace_csv(const RunTrace& trace) {
    std::string out = std::string(kTraceCsvHeader) + "\n";
    for (const auto& ev : trace.events) {
        out += format_number(ev.time) + "," + format_number(ev.uav.x) + "," + format_number(ev.uav.y) +
               "," + to_string(ev.kind) + "," + opt(ev.rssi) + "," +
               (ev.estimate ? format_number(ev.estimate->x) : "") + "," +
               (ev.estimate ? format_number(ev.estimate->y) : "") + "," + opt(ev.error_m) + "\n";
    }
    return out;
}

std::vector<TraceCsvRow> parse_trace_csv(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || line != kTraceCsvHeader) {
        throw ParseError("trace csv: missing or unexpected header");
    }
    std::vector<TraceCsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 8) {
            throw ParseError("trace csv line " + std::to_string(line_no) + ": expected 8 columns");
        }
        TraceCsvRow row;
        row.time_s = parse_opt(cells[0], line_no).value_or(0.0);
        row.uav = {parse_opt(cells[1], line_no).value_or(0.0), parse_opt(cells[2], line_no).value_or(0.0)};
        const auto kind = parse_event_kind(cells[3]);
        if (!kind) throw ParseError("trace csv line " + std::to_string(line_no) + ": bad event kind");
        row.event = *kind;
        row.rssi = parse_opt(cells[4], line_no);
        const auto ex = parse_opt(cells[5], line_no);
        const auto ey = parse_opt(cells[6], line_no);
        if (ex && ey) row.estimate = Point{*ex, *ey};
        row.error_m = parse_opt(cells[7], line_no);
        rows.push_back(row);
    }
    return rows;
}

std::string format_trace_jsonl(const RunTrace& trace) {
    std::string out;
    for (const auto& ev : trace.events) {
        json j = {{"device", trace.device_id},
                  {"source", point_json(trace.source)},
                  {"t", ev.time},
                  {"uav", point_json(ev.uav)},
                  {"event", to_string(ev.kind)}};
        if (ev.rssi) j["rssi"] = *ev.rssi;
        if (ev.tx_time) j["tx_time"] = *ev.tx_time;
        if (ev.estimate) j["estimate"] = point_json(*ev.estimate);
        if (ev.error_m) j["error_m"] = *ev.error_m;
        if (ev.waypoint) j["waypoint"] = point_json(*ev.waypoint);
        if (ev.candidate_seed) j["candidate_seed"] = *ev.candidate_seed;
        if (ev.rssi_offset) j["rssi_offset"] = *ev.rssi_offset;
        if (ev.kind == EventKind::estimate) j["search_phase"] = ev.search_phase;
        if (!ev.note.empty()) j["note"] = ev.note;
        out += j.dump() + "\n";
    }
    return out;
}

RunTrace parse_trace_jsonl(const std::string& content) {
    RunTrace trace;
    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            trace.device_id = j.at("device").get<std::string>();
            trace.source = json_point(j.at("source"));
            TraceEvent ev;
            ev.time = j.at("t").get<double>();
            ev.uav = json_point(j.at("uav"));
            const auto kind = parse_event_kind(j.at("event").get<std::string>());
            if (!kind) throw ParseError("bad event kind");
            ev.kind = *kind;
            if (j.contains("rssi")) ev.rssi = j["rssi"].get<double>();
            if (j.contains("tx_time")) ev.tx_time = j["tx_time"].get<double>();
            if (j.contains("estimate")) ev.estimate = json_point(j["estimate"]);
            if (j.contains("error_m")) ev.error_m = j["error_m"].get<double>();
            if (j.contains("waypoint")) ev.waypoint = json_point(j["waypoint"]);
            if (j.contains("candidate_seed")) ev.candidate_seed = j["candidate_seed"].get<std::uint64_t>();
            if (j.contains("rssi_offset")) ev.rssi_offset = j["rssi_offset"].get<double>();
            if (j.contains("search_phase")) ev.search_phase = j["search_phase"].get<bool>();
            if (j.contains("note")) ev.note = j["note"].get<std::string>();
            trace.events.push_back(std::move(ev));
        } catch (const std::exception& e) {
            throw ParseError("trace jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!trace.events.empty() && trace.events.back().kind == EventKind::stop) {
        const auto& stop = trace.events.back();
        trace.final_estimate = stop.estimate;
        trace.final_error_m = stop.error_m.value_or(std::nan(""));
        trace.stopped_by_rule = stop.note == "rule";
        trace.duration_s = stop.time;
        trace.aborted = stop.note == "aborted";
    }
    return trace;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace uavbo
