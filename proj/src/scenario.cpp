#include "uavbo/scenario.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "uavbo/errors.hpp"

namespace uavbo {

using nlohmann::json;

namespace {

/// Reads optional fields out of a JSON object, collecting every problem.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& issues)
        : obj_(obj), path_(std::move(path)), issues_(issues) {
        if (!obj_.is_object()) issues_.push_back(path_ + ": expected an object");
    }

    ~Reader() {
        if (!obj_.is_object()) return;
        for (const auto& [key, _] : obj_.items())
            if (!seen_.count(key)) issues_.push_back(join(key) + ": unknown key");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            issues_.push_back(join(key) + ": wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
        return &obj_.at(key);
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

const char* to_string(ScanAxis a) { return a == ScanAxis::vertical ? "vertical" : "horizontal"; }

}  // namespace

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::single: return "single";
        case Strategy::multi_sequential: return "multi-seq";
        case Strategy::multi_aggregated: return "multi-agg";
    }
    return "?";
}

Strategy parse_strategy(const std::string& s) {
    if (s == "single") return Strategy::single;
    if (s == "multi-seq") return Strategy::multi_sequential;
    if (s == "multi-agg") return Strategy::multi_aggregated;
    throw ValidationError("strategy: must be one of single|multi-seq|multi-agg (got '" + s + "')");
}

void ScenarioConfig::validate() const {
    std::vector<std::string> issues;
    auto absorb = [&](const char* prefix, auto&& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            for (const auto& s : e.issues()) issues.push_back(std::string(prefix) + s);
        }
    };
    if (!region.valid()) issues.push_back("region: must have positive width and height");
    if (sources.empty()) issues.push_back("sources: at least one source required");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const std::string tag = "sources[" + std::to_string(i) + "]";
        if (!region.contains(sources[i].position)) issues.push_back(tag + ": outside region");
        if (sources[i].id.empty()) issues.push_back(tag + ".id: must be non-empty");
        if (!ids.insert(sources[i].id).second) issues.push_back(tag + ".id: duplicate");
    }
    if (strategy == Strategy::single && sources.size() != 1)
        issues.push_back("strategy: 'single' needs exactly one source");
    if (channel.profile_path.empty()) absorb("channel.generator.", [&] { channel.generator.validate(); });
    absorb("arrivals.", [&] { arrivals.validate(); });
    if (!(speed > 0.0)) issues.push_back("uav.speed: must be > 0");
    if (!(loiter_radius > 0.0)) issues.push_back("uav.loiter_radius: must be > 0");
    if (!(dt > 0.0 && dt <= kMaxStep)) issues.push_back("uav.dt: must be in (0, 1]");
    if (n_init < 0) issues.push_back("uav.n_init: must be >= 0");
    if (min_init_measurements < 1) issues.push_back("uav.min_init_measurements: must be >= 1");
    absorb("gp.", [&] { gp.validate(); });
    if (n_candidates < 1) issues.push_back("candidates: must be >= 1");
    absorb("", [&] { stop.validate(); });
    if (runs < 1) issues.push_back("runs: must be >= 1");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

ScenarioConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }

    ScenarioConfig c;
    std::vector<std::string> issues;
    {
        Reader root(doc, "", issues);
        if (const json* r = root.child("region")) {
            Reader rd(*r, "region", issues);
            rd.get("x_min", c.region.x_min);
            rd.get("y_min", c.region.y_min);
            rd.get("x_max", c.region.x_max);
            rd.get("y_max", c.region.y_max);
        }
        if (const json* s = root.child("sources")) {
            if (!s->is_array()) {
                issues.push_back("sources: expected an array");
            } else {
                c.sources.clear();
                for (std::size_t i = 0; i < s->size(); ++i) {
                    Source src{"dev" + std::to_string(i), {}};
                    Reader sr((*s)[i], "sources[" + std::to_string(i) + "]", issues);
                    sr.get("id", src.id);
                    sr.get("x", src.position.x);
                    sr.get("y", src.position.y);
                    c.sources.push_back(src);
                }
            }
        }
        if (const json* ch = root.child("channel")) {
            Reader cr(*ch, "channel", issues);
            cr.get("profile", c.channel.profile_path);
            cr.get("missingness", c.channel.missingness);
            if (const json* g = cr.child("generator")) {
                Reader gr(*g, "channel.generator", issues);
                auto& gen = c.channel.generator;
                gr.get("p0", gen.p0);
                gr.get("path_loss_exponent", gen.path_loss_exponent);
                gr.get("noise_std", gen.noise_std);
                gr.get("max_range_m", gen.max_range_m);
                gr.get("bins", gen.bins);
                gr.get("min_reception", gen.min_reception);
                gr.get("rssi_step", gen.rssi_step);
            }
        }
        if (const json* a = root.child("arrivals")) {
            Reader ar(*a, "arrivals", issues);
            ar.get("delta_t", c.arrivals.delta_t);
            ar.get("eps_max", c.arrivals.eps_max);
            ar.get("random", c.random_arrivals);
        }
        if (const json* u = root.child("uav")) {
            Reader ur(*u, "uav", issues);
            ur.get("speed", c.speed);
            ur.get("loiter_radius", c.loiter_radius);
            ur.get("dt", c.dt);
            ur.get("n_init", c.n_init);
            ur.get("min_init_measurements", c.min_init_measurements);
            std::string axis = to_string(c.scan_axis);
            ur.get("scan_axis", axis);
            if (axis == "vertical") {
                c.scan_axis = ScanAxis::vertical;
            } else if (axis == "horizontal") {
                c.scan_axis = ScanAxis::horizontal;
            } else {
                issues.push_back("uav.scan_axis: must be vertical|horizontal");
            }
        }
        if (const json* g = root.child("gp")) {
            Reader gr(*g, "gp", issues);
            gr.get("length_scale", c.gp.length_scale);
            gr.get("signal_std", c.gp.signal_std);
            gr.get("noise_std", c.gp.noise_std);
            gr.get("predictive_noise", c.predictive_noise);
        }
        root.get("candidates", c.n_candidates);
        if (const json* s = root.child("stop")) {
            Reader sr(*s, "stop", issues);
            sr.get("radius_m", c.stop.radius_m);
            sr.get("streak", c.stop.streak);
            sr.get("max_time_s", c.stop.max_time_s);
        }
        std::string strategy = to_string(c.strategy);
        root.get("strategy", strategy);
        try {
            c.strategy = parse_strategy(strategy);
        } catch (const ValidationError& e) {
            issues.insert(issues.end(), e.issues().begin(), e.issues().end());
        }
        root.get("seed", c.seed);
        root.get("runs", c.runs);
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    c.validate();
    return c;
}

std::string format_config(const ScenarioConfig& c) {
    json sources = json::array();
    for (const auto& s : c.sources) sources.push_back({{"id", s.id}, {"x", s.position.x}, {"y", s.position.y}});
    const auto& g = c.channel.generator;
    json doc = {
        {"region", {{"x_min", c.region.x_min}, {"y_min", c.region.y_min}, {"x_max", c.region.x_max}, {"y_max", c.region.y_max}}},
        {"sources", sources},
        {"channel",
         {{"profile", c.channel.profile_path},
          {"missingness", c.channel.missingness},
          {"generator",
           {{"p0", g.p0},
            {"path_loss_exponent", g.path_loss_exponent},
            {"noise_std", g.noise_std},
            {"max_range_m", g.max_range_m},
            {"bins", g.bins},
            {"min_reception", g.min_reception},
            {"rssi_step", g.rssi_step}}}}},
        {"arrivals", {{"delta_t", c.arrivals.delta_t}, {"eps_max", c.arrivals.eps_max}, {"random", c.random_arrivals}}},
        {"uav",
         {{"speed", c.speed},
          {"loiter_radius", c.loiter_radius},
          {"dt", c.dt},
          {"n_init", c.n_init},
          {"scan_axis", to_string(c.scan_axis)},
          {"min_init_measurements", c.min_init_measurements}}},
        {"gp",
         {{"length_scale", c.gp.length_scale},
          {"signal_std", c.gp.signal_std},
          {"noise_std", c.gp.noise_std},
          {"predictive_noise", c.predictive_noise}}},
        {"candidates", c.n_candidates},
        {"stop", {{"radius_m", c.stop.radius_m}, {"streak", c.stop.streak}, {"max_time_s", c.stop.max_time_s}}},
        {"strategy", to_string(c.strategy)},
        {"seed", c.seed},
        {"runs", c.runs},
    };
    return doc.dump(2) + "\n";
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

World build_world(const ScenarioConfig& c, const std::filesystem::path& base_dir) {
    c.validate();
    World w;
    w.region = c.region;
    w.sources = c.sources;
    if (c.channel.profile_path.empty()) {
        w.profile = std::make_shared<const ChannelProfile>(generate_profile(c.channel.generator));
    } else {
        std::filesystem::path p = c.channel.profile_path;
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        w.profile = std::make_shared<const ChannelProfile>(load_profile(p));
    }
    w.arrivals = c.arrivals;
    w.random_arrivals = c.random_arrivals;
    w.missingness = c.channel.missingness;
    w.speed = c.speed;
    w.loiter_radius = c.loiter_radius;
    w.dt = c.dt;
    w.n_init = c.n_init;
    w.scan_axis = c.scan_axis;
    w.min_init_measurements = c.min_init_measurements;
    w.n_candidates = c.n_candidates;
    w.predictive_noise = c.predictive_noise;
    w.validate();
    return w;
}

}  // namespace uavbo
