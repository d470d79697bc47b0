#include "uavbo/channel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "uavbo/errors.hpp"

namespace uavbo {

namespace {

constexpr double kProbTolerance = 1e-9;

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(std::string_view s, int line_no) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw ParseError("profile line " + std::to_string(line_no) + ": bad number '" +
                         std::string(s) + "'");
    }
    return v;
}

std::vector<double> split_numbers(const std::string& line, int line_no) {
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(parse_double(std::string_view(line).substr(start, comma - start), line_no));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double ChannelBin::mean_rssi() const {
    double m = 0.0;
    for (const auto& e : histogram) m += e.rssi * e.prob;
    return m;
}

ChannelProfile::ChannelProfile(std::vector<ChannelBin> bins) : bins_(std::move(bins)) {
    std::vector<std::string> issues;
    if (bins_.empty()) issues.push_back("profile: no bins");
    for (std::size_t b = 0; b < bins_.size(); ++b) {
        const auto& bin = bins_[b];
        const std::string tag = "bin " + std::to_string(b);
        if (!(bin.hi_m > bin.lo_m)) issues.push_back(tag + ": edges not strictly increasing");
        if (b > 0 && bin.lo_m != bins_[b - 1].hi_m)
            issues.push_back(tag + ": lower edge does not match previous bin's upper edge");
        if (!(bin.reception_prob >= 0.0 && bin.reception_prob <= 1.0))
            issues.push_back(tag + ": reception_prob outside [0,1]");
        if (b > 0 && bin.reception_prob > bins_[b - 1].reception_prob)
            issues.push_back(tag + ": reception_prob increases with distance");
        if (bin.histogram.empty()) {
            issues.push_back(tag + ": empty histogram");
            continue;
        }
        double total = 0.0;
        bool bad_entry = false;
        for (const auto& e : bin.histogram) {
            if (!(e.prob >= 0.0) || !std::isfinite(e.rssi)) bad_entry = true;
            total += e.prob;
        }
        if (bad_entry) issues.push_back(tag + ": negative probability or non-finite rssi");
        if (std::abs(total - 1.0) > kProbTolerance)
            issues.push_back(tag + ": histogram probabilities sum to " + fmt(total));
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::size_t ChannelProfile::bin_index(double distance_m) const {
    // First bin whose lower edge exceeds d, minus one: [lo, hi) convention.
    auto it = std::upper_bound(bins_.begin(), bins_.end(), distance_m,
                               [](double d, const ChannelBin& b) { return d < b.lo_m; });
    if (it == bins_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(bins_.begin(), it)) - 1;
}

std::vector<double> ChannelProfile::edges() const {
    std::vector<double> e;
    e.reserve(bins_.size() + 1);
    for (const auto& b : bins_) e.push_back(b.lo_m);
    if (!bins_.empty()) e.push_back(bins_.back().hi_m);
    return e;
}

void ProfileGenerator::validate() const {
    std::vector<std::string> issues;
    if (!(noise_std >= 0.0)) issues.push_back("noise_std: must be >= 0");
    if (!(path_loss_exponent >= 0.0)) issues.push_back("path_loss_exponent: must be >= 0");
    if (!(max_range_m > 0.0)) issues.push_back("max_range_m: must be > 0");
    if (bins < 1) issues.push_back("bins: must be >= 1");
    if (!(min_reception >= 0.0 && min_reception <= 1.0))
        issues.push_back("min_reception: must be in [0,1]");
    if (!(rssi_step > 0.0)) issues.push_back("rssi_step: must be > 0");
    if (!std::isfinite(p0)) issues.push_back("p0: must be finite");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

ChannelProfile generate_profile(const ProfileGenerator& gen) {
    gen.validate();
    constexpr int kSubsamples = 64;
    const double width = gen.max_range_m / gen.bins;
    std::vector<ChannelBin> bins;
    bins.reserve(static_cast<std::size_t>(gen.bins));

    for (int b = 0; b < gen.bins; ++b) {
        ChannelBin bin;
        bin.lo_m = b * width;
        bin.hi_m = (b + 1 == gen.bins) ? gen.max_range_m : (b + 1) * width;
        const double mid = 0.5 * (bin.lo_m + bin.hi_m);
        bin.reception_prob = std::clamp(1.0 - mid / gen.max_range_m, gen.min_reception, 1.0);

        std::vector<double> means(kSubsamples);
        for (int s = 0; s < kSubsamples; ++s) {
            const double d = bin.lo_m + (s + 0.5) * (bin.hi_m - bin.lo_m) / kSubsamples;
            means[s] = gen.p0 - 10.0 * gen.path_loss_exponent * std::log10(std::max(d, 1.0));
        }
        const auto [lo_it, hi_it] = std::minmax_element(means.begin(), means.end());
        const long k_lo = std::lround(std::floor((*lo_it - 6.0 * gen.noise_std) / gen.rssi_step));
        const long k_hi = std::lround(std::ceil((*hi_it + 6.0 * gen.noise_std) / gen.rssi_step));

        double total = 0.0;
        for (long k = k_lo; k <= k_hi; ++k) {
            const double r = static_cast<double>(k) * gen.rssi_step;
            double p = 0.0;
            for (double m : means) {
                if (gen.noise_std > 0.0) {
                    const double a = (r - 0.5 * gen.rssi_step - m) / gen.noise_std;
                    const double c = (r + 0.5 * gen.rssi_step - m) / gen.noise_std;
                    p += normal_cdf(c) - normal_cdf(a);
                } else if (std::lround(m / gen.rssi_step) == k) {
                    p += 1.0;
                }
            }
            p /= kSubsamples;
            if (p < 1e-12) continue;
            bin.histogram.push_back({r, p});
            total += p;
        }
        for (auto& e : bin.histogram) e.prob /= total;
        bins.push_back(std::move(bin));
    }
    return ChannelProfile(std::move(bins));
}

ChannelProfile parse_profile(const std::string& content, ProfileFormat format) {
    std::vector<ChannelBin> bins;
    if (format == ProfileFormat::json) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(content);
            for (const auto& jb : j.at("bins")) {
                ChannelBin bin;
                bin.lo_m = jb.at("bin_lo_m").get<double>();
                bin.hi_m = jb.at("bin_hi_m").get<double>();
                bin.reception_prob = jb.at("reception_prob").get<double>();
                for (const auto& e : jb.at("histogram")) {
                    bin.histogram.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
                }
                bins.push_back(std::move(bin));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("profile json: ") + e.what());
        }
        return ChannelProfile(std::move(bins));
    }

    std::istringstream in(content);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        if (!header_seen) {
            if (line.substr(first) != "bin_lo_m,bin_hi_m,reception_prob") {
                throw ParseError("profile line " + std::to_string(line_no) +
                                 ": expected header 'bin_lo_m,bin_hi_m,reception_prob'");
            }
            header_seen = true;
            continue;
        }
        const auto values = split_numbers(line, line_no);
        if (first > 0) {
            if (bins.empty() || values.size() != 2) {
                throw ParseError("profile line " + std::to_string(line_no) +
                                 ": histogram entry must be 'rssi,prob' under a bin line");
            }
            bins.back().histogram.push_back({values[0], values[1]});
        } else {
            if (values.size() != 3) {
                throw ParseError("profile line " + std::to_string(line_no) +
                                 ": bin line must be 'lo,hi,reception_prob'");
            }
            bins.push_back({values[0], values[1], values[2], {}});
        }
    }
    if (!header_seen) throw ParseError("profile: missing header");
    return ChannelProfile(std::move(bins));
}

std::string format_profile(const ChannelProfile& profile, ProfileFormat format) {
    if (format == ProfileFormat::json) {
        nlohmann::json bins = nlohmann::json::array();
        for (const auto& b : profile.bins()) {
            nlohmann::json hist = nlohmann::json::array();
            for (const auto& e : b.histogram) hist.push_back({e.rssi, e.prob});
            bins.push_back({{"bin_lo_m", b.lo_m},
                            {"bin_hi_m", b.hi_m},
                            {"reception_prob", b.reception_prob},
                            {"histogram", std::move(hist)}});
        }
        return nlohmann::json{{"bins", std::move(bins)}}.dump(1) + "\n";
    }
    std::string out = "bin_lo_m,bin_hi_m,reception_prob\n";
    for (const auto& b : profile.bins()) {
        out += fmt(b.lo_m) + "," + fmt(b.hi_m) + "," + fmt(b.reception_prob) + "\n";
        for (const auto& e : b.histogram) out += "  " + fmt(e.rssi) + "," + fmt(e.prob) + "\n";
    }
    return out;
}

namespace {

ProfileFormat detect_format(const std::filesystem::path& path, const std::string& content) {
    if (path.extension() == ".json") return ProfileFormat::json;
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '{') return ProfileFormat::json;
    return ProfileFormat::text;
}

}  // namespace

ChannelProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open profile " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string content = ss.str();
    return parse_profile(content, detect_format(path, content));
}

void save_profile(const ChannelProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write profile " + path.string());
    const auto format = path.extension() == ".json" ? ProfileFormat::json : ProfileFormat::text;
    out << format_profile(profile, format);
}

void ArrivalParams::validate() const {
    std::vector<std::string> issues;
    if (!(delta_t > 0.0)) issues.push_back("delta_t: must be > 0");
    if (!(eps_max >= 0.0 && eps_max < delta_t))
        issues.push_back("eps_max: must satisfy 0 <= eps_max < delta_t");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

double sample_rssi(double distance_m, const ChannelProfile& profile, Rng& rng) {
    const auto& hist = profile.bin_for(distance_m).histogram;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double acc = 0.0;
    for (const auto& e : hist) {
        acc += e.prob;
        if (u < acc) return e.rssi;
    }
    // Rounding left u above the cumulative total; take the last supported value.
    for (auto it = hist.rbegin(); it != hist.rend(); ++it)
        if (it->prob > 0.0) return it->rssi;
    return hist.back().rssi;
}

std::vector<double> transmission_times(const ArrivalParams& params, double horizon, Rng& rng) {
    params.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("transmission_times: horizon must be > 0");
    std::uniform_real_distribution<double> gap(params.delta_t - params.eps_max,
                                               params.delta_t + params.eps_max);
    std::vector<double> out;
    double t = 0.0;
    while (true) {
        t += params.eps_max > 0.0 ? gap(rng) : params.delta_t;
        if (t > horizon) break;
        out.push_back(t);
    }
    return out;
}

std::optional<double> try_receive(double distance_m, const ChannelProfile& profile, Rng& rng) {
    const double p = profile.bin_for(distance_m).reception_prob;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (!(u < p)) return std::nullopt;
    return sample_rssi(distance_m, profile, rng);
}

}  // namespace uavbo
