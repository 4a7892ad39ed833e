#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nsm/diagnostics.hpp"
#include "nsm/experiments.hpp"

namespace py = pybind11;
using namespace nsm;

namespace {

py::array_t<std::complex<double>> field_to_numpy(const SpectralField& f) {
    const auto modes = static_cast<py::ssize_t>(f.box().modes());
    py::array_t<std::complex<double>> out({py::ssize_t(3), modes});
    auto buf = out.mutable_unchecked<2>();
    for (int c = 0; c < 3; ++c)
        for (py::ssize_t i = 0; i < modes; ++i)
            buf(c, i) = f.at(c, static_cast<std::int64_t>(i));
    return out;
}

SpectralField field_from_numpy(const Box& box, const py::array_t<std::complex<double>>& arr) {
    const auto modes = static_cast<py::ssize_t>(box.modes());
    if (arr.ndim() != 2 || arr.shape(0) != 3 || arr.shape(1) != modes)
        throw std::invalid_argument("expected a complex array of shape (3, n^d)");
    SpectralField f(box);
    auto buf = arr.unchecked<2>();
    for (int c = 0; c < 3; ++c)
        for (py::ssize_t i = 0; i < modes; ++i)
            f.at(c, static_cast<std::int64_t>(i)) = buf(c, i);
    return f;
}

py::dict record_to_dict(const DiagnosticsRecord& r) {
    py::dict d;
    d["t"] = r.t;
    d["energy"] = r.energy;
    d["dissipation_v"] = r.dissipation_v;
    d["dissipation_j"] = r.dissipation_j;
    d["diss_v_integral"] = r.diss_v_integral;
    d["diss_j_integral"] = r.diss_j_integral;
    d["helicity"] = r.helicity;
    d["cross_helicity"] = r.cross_helicity;
    d["helicity_rate"] = r.helicity_rate;
    d["div_v"] = r.div_v;
    d["div_E"] = r.div_E;
    d["div_B"] = r.div_B;
    d["div_j"] = r.div_j;
    d["ohm_iterations"] = r.ohm_iterations;
    py::dict norms;
    for (const auto& kv : r.norms) norms[py::str(kv.first)] = kv.second;
    d["norms"] = norms;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pseudo-spectral simulator for magnetofluid systems with generalized Ohm laws";

    py::class_<Box>(m, "Box")
        .def(py::init<int, int, double>(), py::arg("dim"), py::arg("n"),
             py::arg("length") = kTwoPi)
        .def_readonly("dim", &Box::dim)
        .def_readonly("n", &Box::n)
        .def_readonly("length", &Box::length)
        .def("modes", &Box::modes)
        .def("dealias_radius", &Box::dealias_radius)
        .def("__repr__", [](const Box& b) {
            std::ostringstream os;
            os << "Box(dim=" << b.dim << ", n=" << b.n << ", length=" << b.length << ")";
            return os.str();
        });

    py::class_<SpectralField>(m, "Field")
        .def_static(
            "random_band",
            [](const Box& box, std::uint64_t seed, int k_lo, int k_hi, double decay) {
                return random_band_field(box, seed, k_lo, k_hi, decay);
            },
            py::arg("box"), py::arg("seed"), py::arg("k_lo") = 1, py::arg("k_hi") = 0,
            py::arg("decay") = 2.0)
        .def_static("from_numpy", &field_from_numpy, py::arg("box"), py::arg("coefficients"))
        .def("to_numpy", &field_to_numpy)
        .def_property_readonly("box", &SpectralField::box)
        .def("l2", [](const SpectralField& f) { return l2_norm(f); })
        .def(
            "sobolev",
            [](const SpectralField& f, double s, bool homogeneous) {
                return sobolev_norm(f, s, homogeneous);
            },
            py::arg("s"), py::arg("homogeneous") = false)
        .def("sup", [](const SpectralField& f) { return sup_magnitude(f); })
        .def("divergence_l2", [](const SpectralField& f) { return divergence_l2(f); });

    m.def("leray_project", &leray_project, py::arg("f"));
    m.def("curl", &curl, py::arg("f"));
    m.def(
        "truncate",
        [](const SpectralField& f, double radius) { return nsm::truncate(f, radius); },
        py::arg("f"), py::arg("radius"));
    m.def("cross", &cross, py::arg("f"), py::arg("g"));
    m.def("hadamard", &hadamard, py::arg("f"), py::arg("g"));
    m.def("inner_l2", &inner_l2, py::arg("f"), py::arg("g"));
    m.def("vector_potential", &vector_potential, py::arg("B"));
    m.def("magnetic_helicity", &magnetic_helicity, py::arg("B"));

    m.def(
        "solve_ohm",
        [](const SpectralField& v, const SpectralField& E, const SpectralField& B, double kappa,
           double sigma, double c, double radius, double tol) {
            PhysicalParams p;
            p.kappa = kappa;
            p.sigma = sigma;
            p.c = c;
            OhmSolveOptions opts;
            opts.tol = tol;
            const double m = radius > 0.0 ? radius : v.box().dealias_radius();
            auto res = solve_ohm_implicit(v, E, B, p, m, opts);
            return py::make_tuple(res.j, res.iterations, res.residual);
        },
        py::arg("v"), py::arg("E"), py::arg("B"), py::arg("kappa") = 0.0, py::arg("sigma") = 1.0,
        py::arg("c") = 1.0, py::arg("radius") = -1.0, py::arg("tol") = 1e-12,
        "Solve the implicit generalized Ohm law; returns (j, iterations, residual)");

    py::class_<SimState>(m, "State")
        .def_readonly("t", &SimState::t)
        .def_property_readonly("v", [](const SimState& s) { return s.v; })
        .def_property_readonly("E", [](const SimState& s) { return s.E; })
        .def_property_readonly("B", [](const SimState& s) { return s.B; })
        .def_property_readonly("j", [](const SimState& s) { return s.j; })
        .def("energy", [](const SimState& s) { return total_energy(s); })
        .def("xs_norm", &xs_norm, py::arg("smoothness"));

    m.def(
        "initial_state",
        [](const std::string& run_json) {
            const RunSetup run = run_setup_from_json(run_json);
            return make_initial(run.initial, make_box(run), run.variant, run.params);
        },
        py::arg("run_json"),
        "Deterministic initial data from a JSON run description");

    m.def(
        "simulate_json",
        [](const std::string& run_json) {
            const RunSetup run = run_setup_from_json(run_json);
            SimState state = make_initial(run.initial, make_box(run), run.variant, run.params);
            const SimState start = state;
            std::vector<DiagnosticsRecord> series;
            state = simulate(state, run.params, run.stepper, run.t_final, run.observe_every,
                             [&](const SimState& s) { series.push_back(record(s, run.params)); });
            py::list records;
            for (const auto& r : series) records.append(record_to_dict(r));
            py::dict out;
            out["records"] = records;
            out["final_t"] = state.t;
            out["energy_residual"] = energy_balance_residual(start, state);
            return out;
        },
        py::arg("run_json"),
        "Run a simulation described by a JSON run section; returns sampled diagnostics");
}
