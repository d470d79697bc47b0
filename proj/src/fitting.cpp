#include "uavbo/fitting.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "uavbo/acquisition.hpp"
#include "uavbo/errors.hpp"
#include "uavbo/trace_io.hpp"

namespace uavbo {

std::vector<ScanPoint> parse_scan_csv(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("scan csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x_m,y_m,rssi") throw ParseError("scan csv: expected header 'x_m,y_m,rssi'");
    std::vector<ScanPoint> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double v[3];
        std::size_t start = 0;
        for (int k = 0; k < 3; ++k) {
            const auto comma = line.find(',', start);
            if ((k < 2) == (comma == std::string::npos)) {
                throw ParseError("scan csv line " + std::to_string(line_no) + ": expected 3 columns");
            }
            const std::string cell = line.substr(start, comma - start);
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v[k]);
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw ParseError("scan csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            start = comma + 1;
        }
        out.push_back({{v[0], v[1]}, v[2]});
    }
    return out;
}

std::string format_scan_csv(const std::vector<ScanPoint>& points) {
    std::string out = "x_m,y_m,rssi\n";
    for (const auto& p : points)
        out += format_number(p.position.x) + "," + format_number(p.position.y) + "," + format_number(p.rssi) + "\n";
    return out;
}

Dataset make_dataset(const std::vector<ScanPoint>& points, const Rect& region) {
    double mean = 0.0;
    for (const auto& p : points) mean += p.rssi;
    if (!points.empty()) mean /= static_cast<double>(points.size());
    Dataset d(mean);
    for (std::size_t i = 0; i < points.size(); ++i)
        d.append(static_cast<double>(i), region.to_unit(points[i].position), points[i].rssi);
    return d;
}

FitReport run_fit(const std::vector<ScanPoint>& scan, const Rect& region, const FitGrid& grid,
                  std::uint64_t seed) {
    if (scan.size() < kMinScanPoints) {
        throw std::invalid_argument("fit: need at least " + std::to_string(kMinScanPoints) +
                                    " scan points, got " + std::to_string(scan.size()));
    }
    std::vector<std::size_t> order(scan.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = (scan.size() * 4 + 4) / 5;

    std::vector<ScanPoint> train_pts;
    std::vector<ScanPoint> test_pts;
    for (std::size_t k = 0; k < order.size(); ++k)
        (k < n_train ? train_pts : test_pts).push_back(scan[order[k]]);

    const Dataset train = make_dataset(train_pts, region);
    Dataset test(train.offset());
    for (std::size_t i = 0; i < test_pts.size(); ++i)
        test.append(static_cast<double>(i), region.to_unit(test_pts[i].position), test_pts[i].rssi);

    FitReport report;
    report.fit = fit_hyperparameters(train, grid);
    report.best = report.fit.best;
    report.train_size = train.size();
    report.test_size = test.size();

    const int n_l = grid.length_scale.count;
    const int n_sf = grid.signal_std.count;
    report.loglik.resize(static_cast<std::size_t>(n_l) * n_sf);
    report.mse.resize(report.loglik.size());
    for (int il = 0; il < n_l; ++il) {
        for (int is = 0; is < n_sf; ++is) {
            const GridIndex idx{il, is, report.fit.best_index.noise_std};
            const std::size_t k = static_cast<std::size_t>(il) * n_sf + is;
            report.loglik[k] = report.fit.surface.at(idx);
            try {
                report.mse[k] = test.empty() ? std::nan("")
                                             : holdout_mse(train, test, report.fit.surface.params(idx));
            } catch (const ConditioningError&) {
                report.mse[k] = std::nan("");
            }
        }
    }
    return report;
}

std::string format_surface_csv(const FitReport& report, const std::vector<double>& values) {
    const auto& g = report.fit.surface.grid;
    std::string out = "length_scale,signal_std,value\n";
    for (int il = 0; il < g.length_scale.count; ++il)
        for (int is = 0; is < g.signal_std.count; ++is)
            out += format_number(g.length_scale.at(il)) + "," + format_number(g.signal_std.at(is)) + "," +
                   format_number(values[static_cast<std::size_t>(il) * g.signal_std.count + is]) + "\n";
    return out;
}

std::vector<ScanPoint> synthesize_scan(const Rect& region, const Hyperparams& theta, int n,
                                       double mean_rssi, std::uint64_t seed) {
    theta.validate();
    Rng rng(seed);
    const auto locations = sample_candidates(Rect::unit(), n, rng);
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) k(i, j) = kernel(locations[i], locations[j], theta);
    k.diagonal().array() += kJitter * theta.signal_std * theta.signal_std;
    const Eigen::LLT<Eigen::MatrixXd> llt(k);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
    const Eigen::VectorXd f = llt.matrixL() * z;

    std::vector<ScanPoint> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back({region.from_unit(locations[i]), mean_rssi + f[i] + theta.noise_std * normal(rng)});
    return out;
}

}  // namespace uavbo
