#include "uavbo/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "uavbo/errors.hpp"

namespace uavbo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Eigen::MatrixXd gram(const Dataset& data, const Hyperparams& theta) {
    const auto n = static_cast<Eigen::Index>(data.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = theta.signal_std * theta.signal_std;
        for (Eigen::Index j = 0; j < i; ++j) {
            k(i, j) = k(j, i) = kernel(data[i].location, data[j].location, theta);
        }
    }
    return k;
}

double diagonal_load(const Hyperparams& theta) {
    const double sf2 = theta.signal_std * theta.signal_std;
    return theta.noise_std * theta.noise_std + kJitter * sf2;
}

Eigen::LLT<Eigen::MatrixXd> factorize(const Dataset& data, const Hyperparams& theta) {
    Eigen::MatrixXd k = gram(data, theta);
    k.diagonal().array() += diagonal_load(theta);
    // LLT does not notice inf/NaN entries, so check them explicitly.
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (k.allFinite()) llt.compute(k);
    if (!k.allFinite() || llt.info() != Eigen::Success) {
        throw ConditioningError("GP system matrix K + sigma^2 I (n = " +
                                std::to_string(data.size()) +
                                ") is not positive definite after jitter; check for "
                                "non-finite locations or degenerate hyperparameters");
    }
    return llt;
}

Eigen::VectorXd targets(const Dataset& data) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(data.size()));
    for (std::size_t i = 0; i < data.size(); ++i) y[static_cast<Eigen::Index>(i)] = data[i].rssi;
    return y;
}

}  // namespace

void Hyperparams::validate() const {
    std::vector<std::string> issues;
    if (!(noise_std > 0.0) || !std::isfinite(noise_std)) issues.push_back("noise_std: must be > 0");
    if (!(signal_std > 0.0) || !std::isfinite(signal_std)) issues.push_back("signal_std: must be > 0");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale))
        issues.push_back("length_scale: must be > 0");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

void Dataset::append(double time, Point location, double raw_rssi) {
    if (!items_.empty() && !(time > items_.back().time)) {
        throw std::invalid_argument("Dataset::append: time " + std::to_string(time) +
                                    " is not after the last measurement at " +
                                    std::to_string(items_.back().time));
    }
    if (!std::isfinite(location.x) || !std::isfinite(location.y) || !std::isfinite(raw_rssi)) {
        throw std::invalid_argument("Dataset::append: non-finite measurement");
    }
    items_.push_back({time, location, raw_rssi - offset_});
}

void Dataset::recenter(double offset) {
    const double shift = offset_ - offset;
    for (auto& m : items_) m.rssi += shift;
    offset_ = offset;
}

double Dataset::mean_raw_rssi() const {
    if (items_.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < items_.size(); ++i) s += raw_rssi(i);
    return s / static_cast<double>(items_.size());
}

double kernel(Point a, Point b, const Hyperparams& theta) {
    const double l2 = theta.length_scale * theta.length_scale;
    return theta.signal_std * theta.signal_std * std::exp(-squared_norm(a - b) / l2);
}

struct GpModel::Impl {
    std::vector<Point> locations;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd alpha;
};

GpModel::GpModel(const Dataset& data, const Hyperparams& theta)
    : impl_(std::make_unique<Impl>()), theta_(theta) {
    impl_->locations.reserve(data.size());
    for (const auto& m : data.measurements()) impl_->locations.push_back(m.location);
    if (!data.empty()) {
        impl_->llt = factorize(data, theta);
        impl_->alpha = impl_->llt.solve(targets(data));
    }
}

GpModel::GpModel(GpModel&&) noexcept = default;
GpModel& GpModel::operator=(GpModel&&) noexcept = default;
GpModel::~GpModel() = default;

std::vector<double> GpModel::mean_at(std::span<const Point> locations) const {
    std::vector<double> out(locations.size(), 0.0);
    const auto& xs = impl_->locations;
    if (xs.empty()) return out;
    for (std::size_t j = 0; j < locations.size(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            acc += kernel(xs[i], locations[j], theta_) * impl_->alpha[static_cast<Eigen::Index>(i)];
        out[j] = acc;
    }
    return out;
}

Posterior GpModel::predict(std::span<const Point> candidates, PosteriorOptions options) const {
    if (candidates.empty()) throw std::invalid_argument("posterior: no candidates");

    Posterior out;
    out.candidates.assign(candidates.begin(), candidates.end());
    const auto m = static_cast<Eigen::Index>(candidates.size());
    const double prior_var = theta_.signal_std * theta_.signal_std;
    const double extra = options.include_noise ? theta_.noise_std * theta_.noise_std : 0.0;
    const auto& xs = impl_->locations;

    if (xs.empty()) {
        out.mean.assign(candidates.size(), 0.0);
        out.std.assign(candidates.size(), std::sqrt(prior_var + extra));
        return out;
    }

    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd cross(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i) cross(i, j) = kernel(xs[i], candidates[j], theta_);

    const Eigen::VectorXd mean = cross.transpose() * impl_->alpha;
    // v = L^{-1} k_*, so k_*^T (K + s^2 I)^{-1} k_* = |v|^2.
    impl_->llt.matrixL().solveInPlace(cross);
    const Eigen::VectorXd reduction = cross.colwise().squaredNorm().transpose();

    out.mean.resize(candidates.size());
    out.std.resize(candidates.size());
    for (Eigen::Index j = 0; j < m; ++j) {
        out.mean[j] = mean[j];
        out.std[j] = std::sqrt(std::max(0.0, prior_var - reduction[j]) + extra);
    }
    return out;
}

Posterior posterior(const Dataset& data, std::span<const Point> candidates,
                    const Hyperparams& theta, PosteriorOptions options) {
    if (candidates.empty()) throw std::invalid_argument("posterior: no candidates");
    return GpModel(data, theta).predict(candidates, options);
}

double log_marginal_likelihood(const Dataset& data, const Hyperparams& theta) {
    if (data.empty()) return 0.0;
    const auto llt = factorize(data, theta);
    const Eigen::VectorXd y = targets(data);
    const Eigen::VectorXd alpha = llt.solve(y);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(data.size()) * kLog2Pi;
}

double GridAxis::at(int i) const {
    if (count <= 1) return lo;
    if (i == count - 1) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
}

int GridAxis::nearest(double v) const {
    if (count <= 1) return 0;
    const double t = (v - lo) / step();
    return std::clamp(static_cast<int>(std::lround(t)), 0, count - 1);
}

void FitGrid::validate() const {
    std::vector<std::string> issues;
    auto check = [&](const GridAxis& a, const char* name) {
        if (a.count < 1) issues.push_back(std::string(name) + ".count: must be >= 1");
        if (!(a.lo > 0.0)) issues.push_back(std::string(name) + ".lo: must be > 0");
        if (a.count > 1 && !(a.hi > a.lo))
            issues.push_back(std::string(name) + ".hi: must exceed lo");
    };
    check(length_scale, "length_scale");
    check(signal_std, "signal_std");
    check(noise_std, "noise_std");
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

FitResult fit_hyperparameters(const Dataset& data, const FitGrid& grid) {
    grid.validate();
    if (data.size() < 2) {
        throw std::invalid_argument("fit_hyperparameters: need at least 2 measurements");
    }
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::VectorXd y = targets(data);

    FitResult result;
    result.surface.grid = grid;
    result.surface.values.assign(grid.size(), kNegInf);

    for (int il = 0; il < grid.length_scale.count; ++il) {
        const Hyperparams unit{1.0, 1.0, grid.length_scale.at(il)};
        const Eigen::MatrixXd corr = gram(data, unit);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
        if (eig.info() != Eigen::Success) continue;
        const Eigen::VectorXd lambda = eig.eigenvalues();
        const Eigen::VectorXd z2 = (eig.eigenvectors().transpose() * y).array().square();

        for (int is = 0; is < grid.signal_std.count; ++is) {
            const double sf2 = grid.signal_std.at(is) * grid.signal_std.at(is);
            for (int in = 0; in < grid.noise_std.count; ++in) {
                const double sn = grid.noise_std.at(in);
                const double load = sn * sn + kJitter * sf2;
                double quad = 0.0;
                double log_det = 0.0;
                bool ok = true;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double d = sf2 * lambda[k] + load;
                    if (!(d > 0.0) || !std::isfinite(d)) {
                        ok = false;
                        break;
                    }
                    quad += z2[k] / d;
                    log_det += std::log(d);
                }
                if (!ok) continue;
                result.surface.values[result.surface.flat({il, is, in})] =
                    -0.5 * quad - 0.5 * log_det - 0.5 * static_cast<double>(n) * kLog2Pi;
            }
        }
    }

    // Strict '>' in lexicographic (l, sf, sn) order keeps the smallest index on ties.
    double best = kNegInf;
    bool found = false;
    for (int il = 0; il < grid.length_scale.count; ++il)
        for (int is = 0; is < grid.signal_std.count; ++is)
            for (int in = 0; in < grid.noise_std.count; ++in) {
                const GridIndex idx{il, is, in};
                const double v = result.surface.at(idx);
                if (!found || v > best) {
                    if (!found && v == kNegInf) continue;
                    best = v;
                    result.best_index = idx;
                    found = true;
                }
            }
    if (!found) {
        throw ConditioningError("fit_hyperparameters: every grid point failed to factorize");
    }
    result.best = result.surface.params(result.best_index);
    return result;
}

double holdout_mse(const Dataset& train, const Dataset& test, const Hyperparams& theta) {
    if (test.empty()) throw std::invalid_argument("holdout_mse: empty test set");
    std::vector<Point> locations;
    locations.reserve(test.size());
    for (const auto& m : test.measurements()) locations.push_back(m.location);
    const Posterior post = posterior(train, locations, theta);
    double sse = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double r = test.raw_rssi(i) - train.offset() - post.mean[i];
        sse += r * r;
    }
    return sse / static_cast<double>(test.size());
}

}  // namespace uavbo
