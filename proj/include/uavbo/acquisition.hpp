#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uavbo/geometry.hpp"
#include "uavbo/gp.hpp"

namespace uavbo {

/// Best posterior mean over the locations already visited.
struct Incumbent {
    double mu_plus = 0.0;
    Point location;
    std::size_t index = 0;  // measurement index in the dataset
};

/// Elementwise max over per-device posteriors sharing one candidate set.
using AggregatedPosterior = Posterior;

/// Closed-form expected improvement of a Gaussian N(mu, sigma^2) over mu_plus.
/// Zero when sigma == 0.
double expected_improvement(double mu, double sigma, double mu_plus);

/// `n` points drawn uniformly from `region`.
std::vector<Point> sample_candidates(const Rect& region, int n, Rng& rng);

/// Throws std::invalid_argument when the dataset is empty.
Incumbent incumbent(const Dataset& data, const Hyperparams& theta);
/// Same, reusing a model already conditioned on `data`.
Incumbent incumbent(const GpModel& model, const Dataset& data);

/// Candidate index with the largest EI; ties go to the lowest index.
std::size_t select_next_waypoint(const Posterior& post, double mu_plus);
inline std::size_t select_next_waypoint(const Posterior& post, const Incumbent& inc) {
    return select_next_waypoint(post, inc.mu_plus);
}

/// Candidate index with the largest posterior mean; ties go to the lowest index.
std::size_t estimate_location(const Posterior& post);

/// Throws std::invalid_argument on an empty list or mismatched candidate sets.
AggregatedPosterior aggregate_multi_device(std::span<const Posterior> posteriors);

}  // namespace uavbo
