#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "uavbo/errors.hpp"
#include "uavbo/fitting.hpp"
#include "uavbo/gp.hpp"

using namespace uavbo;

namespace {

struct Instance {
    Dataset data;
    std::vector<Point> x;
    std::vector<double> y;
};

Instance random_instance(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Instance in;
    for (int i = 0; i < n; ++i) {
        in.x.push_back({u(rng), u(rng)});
        in.data.append(i + 1.0, in.x.back(), 20.0 * u(rng) - 10.0);
        in.y.push_back(in.data[i].rssi);
    }
    return in;
}

std::vector<Point> random_points(std::mt19937_64& rng, int m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> p;
    for (int j = 0; j < m; ++j) p.push_back({u(rng), u(rng)});
    return p;
}

Hyperparams random_theta(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return {0.2 + 5.0 * u(rng), 0.5 + 5.0 * u(rng), 0.05 + 0.6 * u(rng)};
}

}  // namespace

TEST_CASE("kernel values") {
    const Hyperparams th{4.47, 3.32, 0.2};
    CHECK(kernel({0.3, 0.4}, {0.3, 0.4}, th) == doctest::Approx(11.0224).epsilon(1e-12));

    const Hyperparams unit{1.0, 1.0, 0.2};
    CHECK(kernel({0.0, 0.0}, {0.12, 0.16}, unit) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    const double far = kernel({0.0, 0.0}, {2.0, 0.0}, th);
    CHECK(far == doctest::Approx(11.0224 * std::exp(-100.0)).epsilon(1e-9));
    CHECK(far > 0.0);
    CHECK(far < 1e-42);
}

TEST_CASE("kernel is symmetric and its Gram matrices are PSD") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const Hyperparams th = random_theta(rng);
        const auto pts = random_points(rng, 1 + trial % 8);
        Eigen::MatrixXd g(pts.size(), pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = 0; j < pts.size(); ++j) {
                g(i, j) = kernel(pts[i], pts[j], th);
                CHECK(g(i, j) == kernel(pts[j], pts[i], th));
                CHECK(g(i, j) <= th.signal_std * th.signal_std);
            }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8 * th.signal_std * th.signal_std);
    }
}

TEST_CASE("hyperparameter validation") {
    CHECK_NOTHROW(Hyperparams{}.validate());
    CHECK_THROWS_AS((Hyperparams{4.0, 3.0, 0.0}.validate()), ValidationError);
    CHECK_THROWS_AS((Hyperparams{4.0, -1.0, 0.2}.validate()), ValidationError);
    CHECK_THROWS_AS((Hyperparams{-1.0, 3.0, 0.2}.validate()), ValidationError);
}

TEST_CASE("dataset ordering and centering") {
    Dataset d(-50.0);
    d.append(1.0, {0.1, 0.1}, -60.0);
    d.append(2.0, {0.2, 0.2}, -40.0);
    CHECK(d[0].rssi == -10.0);
    CHECK(d.raw_rssi(1) == -40.0);
    CHECK(d.mean_raw_rssi() == -50.0);
    CHECK_THROWS_AS(d.append(2.0, {0.3, 0.3}, -50.0), std::invalid_argument);
    CHECK_THROWS_AS(d.append(1.5, {0.3, 0.3}, -50.0), std::invalid_argument);
    CHECK_THROWS_AS(d.append(3.0, {0.3, 0.3}, NAN), std::invalid_argument);
    d.recenter(-40.0);
    CHECK(d[0].rssi == -20.0);
    CHECK(d[1].rssi == 0.0);
    CHECK(d.raw_rssi(0) == -60.0);
}

TEST_CASE("posterior of an empty dataset is the prior") {
    const Hyperparams th{4.47, 3.32, 0.2};
    const std::vector<Point> c{{0.1, 0.2}, {0.5, 0.5}, {1.0, 0.0}};
    const Posterior p = posterior(Dataset{}, c, th);
    REQUIRE(p.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(p.mean[j] == 0.0);
        CHECK(p.std[j] == doctest::Approx(3.32).epsilon(1e-12));
    }
    const Posterior py = posterior(Dataset{}, c, th, {true});
    CHECK(py.std[0] == doctest::Approx(std::hypot(3.32, 4.47)).epsilon(1e-12));
}

TEST_CASE("posterior interpolates a single observation as noise vanishes") {
    Dataset d;
    d.append(1.0, {0.4, 0.6}, 5.0);
    const std::vector<Point> c{{0.4, 0.6}};
    double prev = 0.0;
    for (double sn : {1.0, 0.1, 0.01, 0.001}) {
        const Posterior p = posterior(d, c, {sn, 3.0, 0.2});
        CHECK(p.mean[0] > prev);
        prev = p.mean[0];
    }
    CHECK(prev == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("posterior matches dense joint-Gaussian conditioning") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = trial == 0 ? 3 : 1 + trial % 12;
        const int m = trial == 0 ? 4 : 1 + trial % 8;
        const Hyperparams th = random_theta(rng);
        auto in = random_instance(rng, n);
        const auto xs = random_points(rng, m);
        const auto ref = oracle::condition(in.x, in.y, xs, th);
        const Posterior p = posterior(in.data, xs, th);
        const Posterior py = posterior(in.data, xs, th, {true});
        for (int j = 0; j < m; ++j) {
            CHECK(std::abs(p.mean[j] - ref.mean[j]) <= 1e-8);
            CHECK(std::abs(p.std[j] - std::sqrt(std::max(0.0, ref.var[j]))) <= 1e-8);
            CHECK(std::abs(py.std[j] * py.std[j] - ref.var[j] - th.noise_std * th.noise_std) <= 1e-8);
            CHECK(p.std[j] >= 0.0);
        }
    }
}

TEST_CASE("posterior variance never exceeds the prior and never grows with data") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Hyperparams th = random_theta(rng);
        const auto in = random_instance(rng, 15);
        const auto xs = random_points(rng, 10);
        Dataset grow;
        std::vector<double> prev(xs.size(), th.signal_std);
        for (std::size_t i = 0; i < in.x.size(); ++i) {
            grow.append(i + 1.0, in.x[i], in.y[i]);
            const Posterior p = posterior(grow, xs, th);
            for (std::size_t j = 0; j < xs.size(); ++j) {
                CHECK(p.std[j] * p.std[j] <= th.signal_std * th.signal_std + 1e-9);
                CHECK(p.std[j] <= prev[j] + 1e-7);
                prev[j] = p.std[j];
            }
        }
    }
}

TEST_CASE("GpModel reuse agrees with one-shot posterior") {
    std::mt19937_64 rng(4);
    const Hyperparams th = random_theta(rng);
    const auto in = random_instance(rng, 9);
    const auto xs = random_points(rng, 6);
    const GpModel model(in.data, th);
    const Posterior a = model.predict(xs);
    const Posterior b = posterior(in.data, xs, th);
    CHECK(a.mean == b.mean);
    CHECK(a.std == b.std);
    const auto m = model.mean_at(xs);
    for (std::size_t j = 0; j < xs.size(); ++j) CHECK(m[j] == doctest::Approx(a.mean[j]).epsilon(1e-12));
}

TEST_CASE("conditioning failure is diagnosable") {
    Dataset d;
    d.append(1.0, {0.5, 0.5}, 1.0);
    d.append(2.0, {0.6, 0.5}, 2.0);
    // Valid but overflowing signal variance: the system matrix is not finite.
    const Hyperparams huge{1.0, 1e200, 0.2};
    CHECK_THROWS_AS(posterior(d, std::vector<Point>{{0.1, 0.1}}, huge), ConditioningError);
    CHECK_THROWS_AS(log_marginal_likelihood(d, huge), ConditioningError);
    CHECK_THROWS_AS((Hyperparams{0.0, 1.0, 0.2}.validate()), ValidationError);

    // The grid search records the failing node as -inf and keeps going.
    const FitGrid grid{{0.2, 0.2, 1}, {1.0, 1e200, 2}, {1.0, 1.0, 1}};
    const FitResult r = fit_hyperparameters(d, grid);
    CHECK(r.surface.values[1] == -std::numeric_limits<double>::infinity());
    CHECK(std::isfinite(r.surface.values[0]));
    CHECK(r.best_index.signal_std == 0);
}

TEST_CASE("log marginal likelihood") {
    const Hyperparams th{4.47, 3.32, 0.2};
    CHECK(log_marginal_likelihood(Dataset{}, th) == 0.0);

    Dataset one;
    one.append(1.0, {0.2, 0.2}, 0.0);
    const double var = 3.32 * 3.32 * (1.0 + kJitter) + 4.47 * 4.47;
    CHECK(log_marginal_likelihood(one, th) ==
          doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * var)).epsilon(1e-12));

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const Hyperparams t = random_theta(rng);
        const auto in = random_instance(rng, trial == 0 ? 5 : 1 + trial % 12);
        CHECK(std::abs(log_marginal_likelihood(in.data, t) - oracle::log_density(in.x, in.y, t)) <= 1e-8);
    }
}

TEST_CASE("grid axis helpers") {
    const GridAxis a{0.05, 1.0, 20};
    CHECK(a.at(0) == 0.05);
    CHECK(a.at(19) == doctest::Approx(1.0));
    CHECK(a.step() == doctest::Approx(0.05));
    CHECK(a.nearest(0.2) == 3);
    CHECK(a.nearest(-5.0) == 0);
    CHECK(a.nearest(50.0) == 19);
    const GridAxis single{2.0, 2.0, 1};
    CHECK(single.at(0) == 2.0);
    CHECK(single.nearest(7.0) == 0);
    CHECK_THROWS_AS((FitGrid{{1.0, 0.5, 3}, {}, {}}.validate()), ValidationError);
    CHECK_THROWS_AS((FitGrid{{0.1, 0.5, 0}, {}, {}}.validate()), ValidationError);
}

TEST_CASE("grid fit: surface matches per-node likelihood and argmax is exhaustive") {
    std::mt19937_64 rng(6);
    const auto in = random_instance(rng, 25);
    const FitGrid grid{{0.05, 0.6, 6}, {0.5, 6.0, 5}, {1.0, 8.0, 4}};
    const FitResult r = fit_hyperparameters(in.data, grid);
    REQUIRE(r.surface.values.size() == grid.size());

    double best = -std::numeric_limits<double>::infinity();
    GridIndex arg;
    for (int il = 0; il < 6; ++il)
        for (int is = 0; is < 5; ++is)
            for (int in_ = 0; in_ < 4; ++in_) {
                const GridIndex g{il, is, in_};
                const Hyperparams th = r.surface.params(g);
                const double ref = oracle::log_density(in.x, in.y, th);
                CHECK(r.surface.at(g) == doctest::Approx(ref).epsilon(1e-9));
                if (ref > best) {
                    best = ref;
                    arg = g;
                }
            }
    CHECK(r.best_index == arg);
    CHECK(r.best == r.surface.params(arg));
}

TEST_CASE("grid fit: all-zero data prefers the smallest signal std") {
    Dataset d;
    std::mt19937_64 rng(7);
    for (const auto& p : random_points(rng, 30)) d.append(d.size() + 1.0, p, 0.0);
    const FitGrid grid;
    const FitResult r = fit_hyperparameters(d, grid);
    CHECK(r.best_index.signal_std == 0);
    CHECK(r.best.signal_std == grid.signal_std.lo);
    for (double v : r.surface.values) CHECK(v <= r.surface.at(r.best_index));
}

TEST_CASE("grid fit: degenerate grid and tie-break") {
    std::mt19937_64 rng(8);
    const auto in = random_instance(rng, 5);
    const FitGrid one{{0.3, 0.3, 1}, {2.0, 2.0, 1}, {1.5, 1.5, 1}};
    const FitResult r = fit_hyperparameters(in.data, one);
    CHECK(r.best == Hyperparams{1.5, 2.0, 0.3});
    CHECK(r.surface.values.size() == 1);

    // Opposite corners with tiny length scales: the cross covariance underflows to
    // zero, the likelihood no longer depends on l, and the smallest l must win.
    Dataset corners;
    corners.append(1.0, {0.0, 0.0}, 2.0);
    corners.append(2.0, {1.0, 1.0}, -2.0);
    const FitGrid ties{{0.01, 0.03, 3}, {0.5, 4.0, 8}, {1.0, 4.0, 4}};
    const FitResult rt = fit_hyperparameters(corners, ties);
    CHECK(rt.best_index.length_scale == 0);
    CHECK(rt.surface.at({0, rt.best_index.signal_std, rt.best_index.noise_std}) ==
          rt.surface.at({2, rt.best_index.signal_std, rt.best_index.noise_std}));

    Dataset small;
    small.append(1.0, {0.1, 0.1}, 1.0);
    CHECK_THROWS_AS(fit_hyperparameters(small, one), std::invalid_argument);
}

TEST_CASE("grid fit is invariant to dataset permutation") {
    std::mt19937_64 rng(9);
    const auto in = random_instance(rng, 40);
    std::vector<std::size_t> order(in.x.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Dataset shuffled;
    for (std::size_t i = 0; i < order.size(); ++i)
        shuffled.append(i + 1.0, in.x[order[i]], in.y[order[i]]);
    const FitGrid grid{{0.05, 1.0, 10}, {0.5, 10.0, 10}, {1.0, 10.0, 5}};
    const FitResult a = fit_hyperparameters(in.data, grid);
    const FitResult b = fit_hyperparameters(shuffled, grid);
    CHECK(a.best_index == b.best_index);
}

TEST_CASE("grid fit recovers generating hyperparameters in the typical case") {
    // Single draws identify signal_std only loosely, so this checks the bulk of
    // trials rather than every one.
    const Hyperparams truth{4.47, 3.32, 0.2};
    const FitGrid grid;
    int near_l = 0, near_sn = 0;
    const int trials = 10;
    for (int t = 0; t < trials; ++t) {
        const Dataset d = make_dataset(synthesize_scan(Rect::unit(), truth, 200, 0.0, 500 + t), Rect::unit());
        const FitResult r = fit_hyperparameters(d, grid);
        near_l += std::abs(r.best_index.length_scale - grid.length_scale.nearest(0.2)) <= 1;
        near_sn += std::abs(r.best_index.noise_std - grid.noise_std.nearest(4.47)) <= 1;
    }
    CHECK(near_l >= 7);
    CHECK(near_sn >= 8);
}

TEST_CASE("holdout mse") {
    std::mt19937_64 rng(10);
    const auto in = random_instance(rng, 8);

    // Interpolation limit: tiny noise, test == train.
    const double mse0 = holdout_mse(in.data, in.data, {1e-4, 5.0, 0.2});
    CHECK(mse0 < 1e-6);

    // Empty train: the predictor is the prior mean (zero after re-centering).
    Dataset empty(in.data.offset());
    double ref = 0.0;
    for (double y : in.y) ref += y * y;
    CHECK(holdout_mse(empty, in.data, Hyperparams{}) == doctest::Approx(ref / in.y.size()));

    // Per-point conditioning oracle on a random split with different offsets.
    const Hyperparams th = random_theta(rng);
    Dataset train(-55.0), test(-48.0);
    std::vector<Point> tx;
    std::vector<double> ty;
    for (int i = 0; i < 20; ++i) {
        const auto p = random_points(rng, 1)[0];
        const double raw = -70.0 + 30.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (i % 4 == 0) {
            test.append(i + 1.0, p, raw);
        } else {
            train.append(i + 1.0, p, raw);
            tx.push_back(p);
            ty.push_back(raw + 55.0);
        }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto m = oracle::condition(tx, ty, {test[i].location}, th);
        const double resid = test.raw_rssi(i) - (-55.0) - m.mean[0];
        sum += resid * resid;
    }
    CHECK(holdout_mse(train, test, th) == doctest::Approx(sum / test.size()).epsilon(1e-10));
    CHECK_THROWS(holdout_mse(train, Dataset{}, th));
}
