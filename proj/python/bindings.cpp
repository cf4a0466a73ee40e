#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vsl/error.hpp"
#include "vsl/gap.hpp"
#include "vsl/harness.hpp"
#include "vsl/io.hpp"
#include "vsl/velgrad.hpp"

namespace py = pybind11;
using namespace vsl;

namespace {

py::array_t<double> to_array(const ScalarField& f) {
    const auto n = static_cast<py::ssize_t>(f.grid().N());
    py::array_t<double> a({n, n});
    std::copy(f.values().begin(), f.values().end(), a.mutable_data());
    return a;
}

ScalarField from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a, double L) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw Error(ErrorKind::InvalidGrid, "expected a square 2-d array");
    TorusGrid g(L, static_cast<int>(a.shape(0)));
    return ScalarField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict ladder_dict(const ParameterLadder& p) { return py::module_::import("json").attr("loads")(ladder_json(p).dump()); }

py::list matrix(const Matrix2& m) { return py::cast(std::vector<std::vector<double>>{{m[0][0], m[0][1]}, {m[1][0], m[1][1]}}); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings of the vortex-stretching laboratory core";

    py::register_exception<Error>(m, "VslError", PyExc_RuntimeError);

    m.def("ladder", [](int n, double delta, double a0_bar, double kappa, double c_small) {
        return ladder_dict(build_ladder(n, delta, a0_bar, kappa, c_small));
    }, py::arg("n"), py::arg("delta") = 0.1, py::arg("a0_bar") = 0.4, py::arg("kappa") = 0.5, py::arg("c_small") = 1.0);

    m.def("policy_resolution", [](int n, double delta, double a0_bar) {
        return resolution_for(build_ladder(n, delta, a0_bar), GridPolicy{});
    }, py::arg("n"), py::arg("delta") = 0.1, py::arg("a0_bar") = 0.4);

    m.def("large_scale", [](int n, int N, double delta, double a0_bar) {
        const auto lad = build_ladder(n, delta, a0_bar);
        return to_array(build_large_scale(lad, TorusGrid(lad.L, N)));
    }, py::arg("n"), py::arg("N"), py::arg("delta") = 0.1, py::arg("a0_bar") = 0.4,
       "Large-scale vorticity on the N x N grid, rows along x1.");

    m.def("small_scale", [](int n, int N, double delta, double a0_bar) {
        const auto lad = build_ladder(n, delta, a0_bar);
        return to_array(build_small_scale(lad, TorusGrid(lad.L, N)));
    }, py::arg("n"), py::arg("N"), py::arg("delta") = 0.1, py::arg("a0_bar") = 0.4);

    m.def("velocity_gradient", [](py::array_t<double> omega, double L, double x1, double x2, bool oracle) {
        const auto w = from_array(omega, L);
        return oracle ? matrix(pv_oracle(w, {x1, x2}).matrix) : matrix(grad_at(w, {x1, x2}).matrix);
    }, py::arg("omega"), py::arg("L"), py::arg("x1"), py::arg("x2"), py::arg("oracle") = false,
       "m[i][j] = d_j u_i of the velocity induced by omega.");

    m.def("sweep_point", [](int n, double delta, double a0_bar, int N) {
        SweepConfig c;
        c.delta = delta;
        c.a0_bar = a0_bar;
        c.grid.fixed_N = N;
        const auto r = [&] {
            py::gil_scoped_release release;
            return run_sweep_point(n, c);
        }();
        py::dict d;
        d["n"] = r.n;
        d["N"] = r.N;
        d["dt"] = r.dt;
        d["steps"] = r.steps;
        d["nu_n"] = r.ladder.nu_n;
        d["t_n"] = r.ladder.t_n;
        d["u0_sq"] = r.u0_sq;
        d["grad_u0_sq"] = r.grad_u0_sq;
        d["mean_grad_sq"] = r.mean_grad_sq;
        d["D_n"] = r.D_n;
        d["S_n"] = r.S_n;
        d["amplification"] = r.amplification;
        d["amplification_threshold"] = r.amplification_threshold;
        d["energy_residual"] = r.energy_residual;
        return d;
    }, py::arg("n"), py::arg("delta") = 0.1, py::arg("a0_bar") = 0.4, py::arg("N") = 0,
       "One sweep point; N = 0 uses the grid policy.");

    m.def("scaling_exponent", [](const std::vector<double>& nus, const std::vector<double>& gaps) {
        if (nus.size() != gaps.size()) throw Error(ErrorKind::Usage, "nus and gaps differ in length");
        std::vector<GapRecord> recs(nus.size());
        for (std::size_t i = 0; i < nus.size(); ++i) {
            recs[i].nu = nus[i];
            recs[i].I_L = gaps[i];
        }
        return scaling_fit(recs, GapKind::I_L);
    }, py::arg("nus"), py::arg("gaps"));

    m.def("read_field", [](const std::string& path) {
        const auto f = read_field(path);
        return py::make_tuple(to_array(f.field), f.field.grid().L(), f.time, static_cast<int>(f.id));
    }, py::arg("path"), "Returns (values, L, time, field_id).");

    m.def("write_field", [](const std::string& path, py::array_t<double> values, double L, double time, int id) {
        write_field(path, from_array(values, L), time, static_cast<FieldId>(id));
    }, py::arg("path"), py::arg("values"), py::arg("L"), py::arg("time"), py::arg("field_id") = 1);

    m.def("format_double", &format_double);

    m.def("csv_header", [](const std::string& kind) {
        std::string csv;
        if (kind == "diagnostics") csv = diagnostics_csv({});
        else if (kind == "gaps") csv = gaps_csv({});
        else if (kind == "tracers") csv = tracers_csv({});
        else if (kind == "sweep") csv = sweep_csv({});
        else throw Error(ErrorKind::Usage, "unknown csv kind '" + kind + "'");
        std::vector<std::string> cols;
        std::stringstream ss(csv.substr(0, csv.find('\n')));
        for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
        return cols;
    }, py::arg("kind"), "Column names of one of the CSV outputs.");
}
