// Python bindings for the core operations. Points cross the boundary as
// uavbo.Point or plain (x, y) tuples.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uavbo/acquisition.hpp"
#include "uavbo/batch.hpp"
#include "uavbo/channel.hpp"
#include "uavbo/errors.hpp"
#include "uavbo/fitting.hpp"
#include "uavbo/gp.hpp"
#include "uavbo/kinematics.hpp"
#include "uavbo/localizer.hpp"
#include "uavbo/scenario.hpp"
#include "uavbo/trace_io.hpp"

namespace py = pybind11;
using namespace uavbo;

namespace {

std::vector<std::string> run_jsonl(const std::string& config_json) {
    const ScenarioConfig c = parse_config(config_json);
    const World world = build_world(c);
    std::vector<std::string> out;
    for (const auto& t : run_strategy(c.strategy, world, c.gp, c.stop, c.seed))
        out.push_back(format_trace_jsonl(t));
    return out;
}

py::dict montecarlo(const std::string& config_json, int runs, int parallelism) {
    const ScenarioConfig c = parse_config(config_json);
    const World world = build_world(c);
    const BatchResult r = run_batch(world, c, runs, parallelism);
    py::dict d;
    d["t_s"] = r.stats.time_s;
    d["mean_err_m"] = r.stats.mean_err_m;
    d["std_err_m"] = r.stats.std_err_m;
    d["stats_csv"] = format_stats_csv(r.stats);
    d["runs_summary_csv"] = format_runs_summary_csv(r.stats);
    d["failures"] = r.stats.failures();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "GP / expected-improvement localization of a radio source from a simulated UAV";

    py::register_exception<ConditioningError>(m, "ConditioningError");
    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    py::class_<Point>(m, "Point")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return Point{x, y}; }))
        .def(py::init([](py::tuple t) { return Point{t[0].cast<double>(), t[1].cast<double>()}; }))
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y)
        .def("__iter__", [](const Point& p) { return py::iter(py::make_tuple(p.x, p.y)); })
        .def("__eq__", [](const Point& a, const Point& b) { return a == b; })
        .def("__repr__", [](const Point& p) {
            return "Point(" + format_number(p.x) + ", " + format_number(p.y) + ")";
        });
    py::implicitly_convertible<py::tuple, Point>();

    py::class_<Rect>(m, "Rect")
        .def(py::init([](double x0, double y0, double x1, double y1) { return Rect{x0, y0, x1, y1}; }),
             py::arg("x_min") = 0.0, py::arg("y_min") = 0.0, py::arg("x_max") = 1.0, py::arg("y_max") = 1.0)
        .def_readwrite("x_min", &Rect::x_min)
        .def_readwrite("y_min", &Rect::y_min)
        .def_readwrite("x_max", &Rect::x_max)
        .def_readwrite("y_max", &Rect::y_max);

    py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>(), py::arg("seed"));

    // gp_core
    py::class_<Hyperparams>(m, "Hyperparams")
        .def(py::init([](double sn, double sf, double l) { return Hyperparams{sn, sf, l}; }),
             py::arg("noise_std") = 4.47, py::arg("signal_std") = 3.32, py::arg("length_scale") = 0.2)
        .def_readwrite("noise_std", &Hyperparams::noise_std)
        .def_readwrite("signal_std", &Hyperparams::signal_std)
        .def_readwrite("length_scale", &Hyperparams::length_scale)
        .def("__eq__", [](const Hyperparams& a, const Hyperparams& b) { return a == b; })
        .def("__repr__", [](const Hyperparams& h) {
            return "Hyperparams(noise_std=" + format_number(h.noise_std) +
                   ", signal_std=" + format_number(h.signal_std) +
                   ", length_scale=" + format_number(h.length_scale) + ")";
        });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<double>(), py::arg("offset") = 0.0)
        .def("append", &Dataset::append, py::arg("time"), py::arg("location"), py::arg("raw_rssi"))
        .def("recenter", &Dataset::recenter)
        .def_property_readonly("offset", &Dataset::offset)
        .def("__len__", &Dataset::size)
        .def("rssi", [](const Dataset& d) {
            std::vector<double> v;
            for (const auto& x : d.measurements()) v.push_back(x.rssi);
            return v;
        });

    py::class_<Posterior>(m, "Posterior")
        .def(py::init<>())
        .def_readwrite("candidates", &Posterior::candidates)
        .def_readwrite("mean", &Posterior::mean)
        .def_readwrite("std", &Posterior::std);

    m.def("kernel", &kernel, py::arg("a"), py::arg("b"), py::arg("theta"));
    m.def(
        "posterior",
        [](const Dataset& d, const std::vector<Point>& c, const Hyperparams& t, bool include_noise) {
            return posterior(d, c, t, {include_noise});
        },
        py::arg("data"), py::arg("candidates"), py::arg("theta"), py::arg("include_noise") = false);
    m.def("log_marginal_likelihood", &log_marginal_likelihood, py::arg("data"), py::arg("theta"));
    m.def(
        "fit_hyperparameters",
        [](const Dataset& d, std::tuple<double, double, int> l, std::tuple<double, double, int> sf,
           std::tuple<double, double, int> sn) {
            FitGrid g{{std::get<0>(l), std::get<1>(l), std::get<2>(l)},
                      {std::get<0>(sf), std::get<1>(sf), std::get<2>(sf)},
                      {std::get<0>(sn), std::get<1>(sn), std::get<2>(sn)}};
            FitResult r = fit_hyperparameters(d, g);
            return py::make_tuple(r.best, r.surface.values);
        },
        py::arg("data"), py::arg("length_scale") = std::make_tuple(0.05, 1.0, 20),
        py::arg("signal_std") = std::make_tuple(0.5, 10.0, 20),
        py::arg("noise_std") = std::make_tuple(1.0, 10.0, 10),
        "Returns (best Hyperparams, flat log-likelihood surface indexed [l][sf][sn]).");
    m.def("holdout_mse", &holdout_mse, py::arg("train"), py::arg("test"), py::arg("theta"));

    // acquisition
    py::class_<Incumbent>(m, "Incumbent")
        .def_readonly("mu_plus", &Incumbent::mu_plus)
        .def_readonly("location", &Incumbent::location)
        .def_readonly("index", &Incumbent::index);
    m.def("expected_improvement", &expected_improvement, py::arg("mu"), py::arg("sigma"), py::arg("mu_plus"));
    m.def("sample_candidates", &sample_candidates, py::arg("region"), py::arg("n"), py::arg("rng"));
    m.def("incumbent", py::overload_cast<const Dataset&, const Hyperparams&>(&incumbent));
    m.def("select_next_waypoint",
          py::overload_cast<const Posterior&, double>(&select_next_waypoint), py::arg("post"),
          py::arg("mu_plus"));
    m.def("estimate_location", &estimate_location);
    m.def("aggregate_multi_device",
          [](const std::vector<Posterior>& ps) { return aggregate_multi_device(ps); });

    // channel
    py::class_<ProfileGenerator>(m, "ProfileGenerator")
        .def(py::init<>())
        .def_readwrite("p0", &ProfileGenerator::p0)
        .def_readwrite("path_loss_exponent", &ProfileGenerator::path_loss_exponent)
        .def_readwrite("noise_std", &ProfileGenerator::noise_std)
        .def_readwrite("max_range_m", &ProfileGenerator::max_range_m)
        .def_readwrite("bins", &ProfileGenerator::bins)
        .def_readwrite("min_reception", &ProfileGenerator::min_reception)
        .def_readwrite("rssi_step", &ProfileGenerator::rssi_step);
    py::class_<ChannelProfile>(m, "ChannelProfile")
        .def("edges", &ChannelProfile::edges)
        .def("bin_index", &ChannelProfile::bin_index)
        .def("reception_probs", [](const ChannelProfile& p) {
            std::vector<double> v;
            for (const auto& b : p.bins()) v.push_back(b.reception_prob);
            return v;
        })
        .def("to_text", [](const ChannelProfile& p) { return format_profile(p, ProfileFormat::text); })
        .def("to_json", [](const ChannelProfile& p) { return format_profile(p, ProfileFormat::json); });
    m.def("generate_profile", &generate_profile, py::arg("generator") = ProfileGenerator{});
    m.def("load_profile", [](const std::string& path) { return load_profile(path); });
    py::class_<ArrivalParams>(m, "ArrivalParams")
        .def(py::init([](double dt, double eps) { return ArrivalParams{dt, eps}; }),
             py::arg("delta_t") = 10.0, py::arg("eps_max") = 5.0)
        .def_readwrite("delta_t", &ArrivalParams::delta_t)
        .def_readwrite("eps_max", &ArrivalParams::eps_max);
    m.def("sample_rssi", &sample_rssi, py::arg("distance_m"), py::arg("profile"), py::arg("rng"));
    m.def("transmission_times", &transmission_times, py::arg("params"), py::arg("horizon"), py::arg("rng"));
    m.def("try_receive", &try_receive, py::arg("distance_m"), py::arg("profile"), py::arg("rng"));

    // kinematics
    py::enum_<FlightMode>(m, "FlightMode")
        .value("transit", FlightMode::transit)
        .value("loiter", FlightMode::loiter);
    py::class_<UavState>(m, "UavState")
        .def(py::init<>())
        .def_readwrite("position", &UavState::position)
        .def_readwrite("heading", &UavState::heading)
        .def_readwrite("speed", &UavState::speed)
        .def_readwrite("waypoint", &UavState::waypoint)
        .def_readwrite("mode", &UavState::mode)
        .def_readwrite("loiter_radius", &UavState::loiter_radius);
    m.def("step", &step, py::arg("state"), py::arg("dt"));
    m.def("set_waypoint", &set_waypoint, py::arg("state"), py::arg("target"), py::arg("region"));
    m.def("initial_scan_waypoints",
          [](const Rect& r, int n) { return initial_scan_waypoints(r, n); }, py::arg("region"),
          py::arg("n_init"));

    // localizer / harness
    py::class_<StopParams>(m, "StopParams")
        .def(py::init([](double r, int k, double t) { return StopParams{r, k, t}; }),
             py::arg("radius_m") = 20.0, py::arg("streak") = 4, py::arg("max_time_s") = 1800.0);
    m.def("should_stop",
          [](const std::vector<Point>& e, const StopParams& s) { return should_stop(e, s); });
    m.def("default_config", [] { return format_config(ScenarioConfig{}); });
    m.def("run_scenario_jsonl", &run_jsonl, py::arg("config_json"),
          "One JSON-lines trace per device for the configured strategy and seed.");
    m.def("montecarlo", &montecarlo, py::arg("config_json"), py::arg("runs"), py::arg("parallelism") = 1);
}
