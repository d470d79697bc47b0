#include "uavbo/acquisition.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uavbo {

double expected_improvement(double mu, double sigma, double mu_plus) {
    if (!(sigma > 0.0)) return 0.0;
    const double gap = mu - mu_plus;
    const double u = gap / sigma;
    const double cdf = 0.5 * std::erfc(-u / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(0.0, gap * cdf + sigma * pdf);
}

std::vector<Point> sample_candidates(const Rect& region, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_candidates: n must be >= 1");
    std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
    std::uniform_real_distribution<double> uy(region.y_min, region.y_max);
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = ux(rng);
        out.push_back({x, uy(rng)});
    }
    return out;
}

Incumbent incumbent(const GpModel& model, const Dataset& data) {
    if (data.empty()) {
        throw std::invalid_argument("incumbent: no measurements yet, cannot score candidates");
    }
    std::vector<Point> visited;
    visited.reserve(data.size());
    for (const auto& m : data.measurements()) visited.push_back(m.location);
    const std::vector<double> mean = model.mean_at(visited);

    Incumbent best{mean[0], visited[0], 0};
    for (std::size_t i = 1; i < visited.size(); ++i) {
        if (mean[i] > best.mu_plus) best = {mean[i], visited[i], i};
    }
    return best;
}

Incumbent incumbent(const Dataset& data, const Hyperparams& theta) {
    if (data.empty()) {
        throw std::invalid_argument("incumbent: no measurements yet, cannot score candidates");
    }
    return incumbent(GpModel(data, theta), data);
}

std::size_t select_next_waypoint(const Posterior& post, double mu_plus) {
    if (post.size() == 0) throw std::invalid_argument("select_next_waypoint: empty posterior");
    std::size_t arg = 0;
    double best = expected_improvement(post.mean[0], post.std[0], mu_plus);
    for (std::size_t i = 1; i < post.size(); ++i) {
        const double ei = expected_improvement(post.mean[i], post.std[i], mu_plus);
        if (ei > best) {
            best = ei;
            arg = i;
        }
    }
    return arg;
}

std::size_t estimate_location(const Posterior& post) {
    if (post.size() == 0) throw std::invalid_argument("estimate_location: empty posterior");
    std::size_t arg = 0;
    for (std::size_t i = 1; i < post.size(); ++i) {
        if (post.mean[i] > post.mean[arg]) arg = i;
    }
    return arg;
}

AggregatedPosterior aggregate_multi_device(std::span<const Posterior> posteriors) {
    if (posteriors.empty()) throw std::invalid_argument("aggregate_multi_device: no devices");
    AggregatedPosterior out = posteriors.front();
    for (std::size_t j = 1; j < posteriors.size(); ++j) {
        const Posterior& p = posteriors[j];
        if (p.candidates != out.candidates) {
            throw std::invalid_argument("aggregate_multi_device: device " + std::to_string(j) +
                                        " uses a different candidate set");
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            out.mean[i] = std::max(out.mean[i], p.mean[i]);
            out.std[i] = std::max(out.std[i], p.std[i]);
        }
    }
    return out;
}

}  // namespace uavbo
