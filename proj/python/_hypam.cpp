// Thin bindings over the C++ library. Points cross the boundary as HPoint objects;
// paths and field values come back as NumPy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hypam/fkmc.hpp"
#include "hypam/gaussfield.hpp"
#include "hypam/heatkernel.hpp"
#include "hypam/hypbm.hpp"
#include "hypam/parallel.hpp"
#include "hypam/varopt.hpp"

namespace py = pybind11;
using namespace hypam;

namespace {

py::dict fk_dict(const FKEstimate& e) {
    py::dict d;
    d["mean"] = e.mean;
    d["se"] = e.se;
    d["variance"] = e.variance;
    d["log_mean"] = e.log_mean;
    d["n_paths"] = e.n_paths;
    d["n_accepted"] = e.n_accepted;
    d["log_weights"] = e.log_weights;
    return d;
}

}  // namespace

PYBIND11_MODULE(_hypam, m) {
    m.doc() = "Brownian motion, Gaussian fields and Feynman-Kac estimates on hyperbolic space";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> exc;
    exc.call_once_and_store_result([&]() { return py::exception<Error>(m, "Error"); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(exc.get_stored(), (std::string(error_kind_name(e.kind())) + ": " + e.what()).c_str());
        }
    });

    m.def("set_threads", &set_threads, py::arg("n"));

    py::class_<HPoint>(m, "HPoint")
        .def_static("origin", &HPoint::origin, py::arg("d"))
        .def_static("polar", &HPoint::polar, py::arg("r"), py::arg("direction"))
        .def_static("from_coords", &HPoint::from_coords, py::arg("x"))
        .def_property_readonly("dim", &HPoint::dim)
        .def_property_readonly("radius", &HPoint::radius)
        .def_property_readonly("direction", &HPoint::direction)
        .def("coords", &HPoint::coords)
        .def("poincare", &HPoint::poincare)
        .def("__repr__", [](const HPoint& x) {
            return "HPoint(r=" + std::to_string(x.radius()) + ", d=" + std::to_string(x.dim()) + ")";
        });
    m.def("distance", &distance, py::arg("x"), py::arg("y"));
    m.def("geodesic_point", &geodesic_point, py::arg("x"), py::arg("y"), py::arg("s"));

    m.def(
        "optimize",
        [](int d, double sigma2) {
            auto s = optimize_f(ModelParams(d, sigma2));
            py::dict r;
            r["eps_star"] = s.eps_star;
            r["K_star"] = s.K_star;
            r["L_star"] = s.L_star;
            r["grid_gap"] = s.grid_gap;
            r["gradient_norm"] = s.gradient_norm;
            return r;
        },
        py::arg("d") = 2, py::arg("sigma2") = 1.0);
    m.def(
        "f_eval", [](double eps, double K, int d, double sigma2) { return f_eval(eps, K, ModelParams(d, sigma2)); },
        py::arg("eps"), py::arg("K"), py::arg("d") = 2, py::arg("sigma2") = 1.0);
    m.def("reduce_word", py::overload_cast<const std::string&>(&reduce_word), py::arg("word"));

    m.def("exact_h3", &exact_h3, py::arg("t"), py::arg("rho"));
    m.def("comparison_fn", &comparison_fn, py::arg("t"), py::arg("rho"), py::arg("d"));
    m.def("first_passage_density", &first_passage_density, py::arg("a"), py::arg("s"));
    m.def("first_passage_cdf", &first_passage_cdf, py::arg("a"), py::arg("s"));

    m.def(
        "simulate_bm",
        [](int d, double t, double dt, std::uint64_t seed, std::uint64_t path) {
            Trajectory tr = simulate_bm(d, t, dt, seed, path);
            Mat X(tr.size(), d + 1);
            for (std::size_t i = 0; i < tr.size(); ++i) X.row(i) = tr.points[i].coords().transpose();
            return py::make_tuple(tr.times, X);
        },
        py::arg("d"), py::arg("t"), py::arg("dt"), py::arg("seed"), py::arg("path") = 0,
        "times and hyperboloid coordinates (one row per time) of a Brownian path from o");
    m.def("radial_final", py::overload_cast<int, double, double, double, std::uint64_t, std::uint64_t>(&radial_final),
          py::arg("d"), py::arg("t"), py::arg("dt"), py::arg("r0"), py::arg("seed"), py::arg("path"));

    py::class_<CovarianceSpec, std::shared_ptr<CovarianceSpec>>(m, "CovarianceSpec")
        .def_static(
            "make",
            [](double sigma2, double R0, const std::string& shape, int d) {
                return std::const_pointer_cast<CovarianceSpec>(CovarianceSpec::make(sigma2, R0, shape, d));
            },
            py::arg("sigma2"), py::arg("R0"), py::arg("shape") = "poly3", py::arg("d") = 2)
        .def_property_readonly("sigma2", &CovarianceSpec::sigma2)
        .def_property_readonly("R0", &CovarianceSpec::R0)
        .def("__call__", &CovarianceSpec::operator(), py::arg("rho"));

    m.def(
        "sample_field",
        [](std::shared_ptr<CovarianceSpec> spec, const std::vector<HPoint>& sites, std::uint64_t seed) {
            return Vec(sample_field(spec, sites, seed).values);
        },
        py::arg("spec"), py::arg("sites"), py::arg("seed"));
    m.def(
        "cluster_constants",
        [](double delta, int d, double K0, double C) {
            auto c = cluster_constants(delta, d, K0, C);
            return py::make_tuple(c.L_delta, c.eta_delta);
        },
        py::arg("delta"), py::arg("d"), py::arg("K0"), py::arg("C_R0_hat"));

    m.def(
        "fk_constant",
        [](double c, int d, double t, double dt, std::size_t n, std::uint64_t seed) {
            ConstantPotential V(c);
            return fk_dict(fk_estimate(V, d, t, dt, n, seed));
        },
        py::arg("c"), py::arg("d"), py::arg("t"), py::arg("dt"), py::arg("n_paths"), py::arg("seed"));
    m.def(
        "fk_peak",
        [](std::shared_ptr<CovarianceSpec> spec, const HPoint& center, double h, double t, double dt, std::size_t n,
           std::uint64_t seed) {
            PlantedPeak V(spec, center, h);
            return fk_dict(fk_estimate(V, spec->dim(), t, dt, n, seed));
        },
        py::arg("spec"), py::arg("center"), py::arg("h"), py::arg("t"), py::arg("dt"), py::arg("n_paths"),
        py::arg("seed"));
    m.def(
        "fk_quenched",
        [](std::shared_ptr<CovarianceSpec> spec, double t, double dt, std::size_t n, std::uint64_t seed) {
            LatticePotential V(spec, seed);
            return fk_dict(fk_estimate(V, spec->dim(), t, dt, n, seed));
        },
        py::arg("spec"), py::arg("t"), py::arg("dt"), py::arg("n_paths"), py::arg("seed"));
    m.def(
        "long_route_tail",
        [](double eta, int N, double t, int d, double sigma2, double K0) {
            auto r = long_route_tail(eta, N, t, ModelParams(d, sigma2), K0);
            return py::make_tuple(r.log_F, r.exponent, r.log_bound);
        },
        py::arg("eta"), py::arg("N"), py::arg("t"), py::arg("d"), py::arg("sigma2"), py::arg("K0"));
}
