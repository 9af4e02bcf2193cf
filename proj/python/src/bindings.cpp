// Python view of the core library. Potentials cross the boundary as
// {exponent tuple: coefficient} dicts; phase-space polynomials as lists of
// (x exponents, p exponents, complex coefficient).

#include "oscbands/audits.hpp"
#include "oscbands/averaging.hpp"
#include "oscbands/invariants.hpp"
#include "oscbands/inverse.hpp"
#include "oscbands/oscillator.hpp"
#include "oscbands/symbolcalc.hpp"

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace oscbands;

namespace {

Potential potential_from(int dim, const std::map<std::vector<int>, double>& terms)
{
    Potential V(dim);
    for (const auto& [a, c] : terms) V.add_term(a, c);
    return V;
}

py::dict report_dict(const inverse::RecoveryReport& r)
{
    py::dict d;
    d["method"] = r.method;
    d["values"] = r.values;
    d["potential"] = r.potential ? py::cast(*r.potential) : py::none();
    d["series"] = r.series;
    d["residuals"] = r.residuals;
    d["flags"] = r.flags;
    d["condition_numbers"] = r.condition_numbers;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Band invariants of perturbed harmonic oscillators";

    py::register_exception<oscillator::ClusterOverlapError>(m, "ClusterOverlapError", PyExc_RuntimeError);
    py::register_exception<inverse::RecoveryError>(m, "RecoveryError", PyExc_RuntimeError);

    py::class_<Potential>(m, "Potential")
        .def(py::init(&potential_from), py::arg("dim"), py::arg("terms") = std::map<std::vector<int>, double>{})
        .def_property_readonly("dim", &Potential::dim)
        .def_property_readonly("terms", &Potential::terms)
        .def("degree", &Potential::degree)
        .def("__call__", &Potential::evaluate)
        .def("is_odd", &Potential::is_odd)
        .def("is_even", &Potential::is_even)
        .def("__add__", [](const Potential& a, const Potential& b) { return a + b; })
        .def("__mul__", [](const Potential& a, double s) { return a * s; })
        .def("__repr__", &Potential::to_string);

    py::class_<PhasePolynomial>(m, "PhasePolynomial")
        .def_static("H0", &PhasePolynomial::H0)
        .def_static("x", &PhasePolynomial::x)
        .def_static("p", &PhasePolynomial::p)
        .def_property_readonly("dim", &PhasePolynomial::dim)
        .def("degree", &PhasePolynomial::degree)
        .def("terms",
             [](const PhasePolynomial& P) {
                 py::list out;
                 for (const auto& t : P.terms()) out.append(py::make_tuple(t.ax, t.ap, t.c));
                 return out;
             })
        .def("__call__", py::overload_cast<const std::vector<double>&, const std::vector<double>&>(
                             &PhasePolynomial::evaluate, py::const_))
        .def("__add__", [](const PhasePolynomial& a, const PhasePolynomial& b) { return a + b; })
        .def("__sub__", [](const PhasePolynomial& a, const PhasePolynomial& b) { return a - b; })
        .def("__mul__", [](const PhasePolynomial& a, const PhasePolynomial& b) { return a * b; })
        .def("max_abs", &PhasePolynomial::max_abs)
        .def("__repr__", &PhasePolynomial::to_string);
    m.def("to_phase", &Potential::to_phase);

    // symbol calculus
    m.def("poisson_bracket", &symbolcalc::poisson_bracket);
    m.def("higher_bracket", py::overload_cast<const PhasePolynomial&, const PhasePolynomial&, int>(&symbolcalc::higher_bracket));
    m.def("moyal_product", &symbolcalc::moyal_product);

    // averaging
    m.def("average_poly", &averaging::average_poly);
    m.def("average_numeric", &averaging::average_numeric, py::arg("V"), py::arg("x"), py::arg("p"),
          py::arg("nodes") = 64);
    m.def("delta_average", &averaging::delta_average);
    m.def("gamma_coeff", &averaging::gamma_coeff);
    m.def("a0_invert", &averaging::a0_invert);

    // oscillator
    py::class_<oscillator::Cluster>(m, "Cluster")
        .def_readonly("j", &oscillator::Cluster::j)
        .def_readonly("energies", &oscillator::Cluster::energies)
        .def_readonly("shifts", &oscillator::Cluster::shifts);
    m.def(
        "eigenvalues",
        [](const Potential& V, double hbar, int J, int J_trust) {
            return oscillator::compute_spectrum(V, oscillator::make_basis(V.dim(), hbar, J, J_trust)).eigenvalues;
        },
        py::arg("V"), py::arg("hbar"), py::arg("J"), py::arg("J_trust") = -1);
    m.def(
        "clusters",
        [](const Potential& V, double hbar, int J, int J_trust) {
            return oscillator::make_clusters(
                       oscillator::compute_spectrum(V, oscillator::make_basis(V.dim(), hbar, J, J_trust)))
                .clusters;
        },
        py::arg("V"), py::arg("hbar"), py::arg("J"), py::arg("J_trust") = -1);
    m.def("quadratic_exact_spectrum", &oscillator::quadratic_exact_spectrum);

    // invariants, gaussian weight exp(-mu s)
    m.def(
        "band_invariant_first",
        [](const Potential& V, double mu, const std::vector<double>& phi) {
            return invariants::band_invariant_first(V, invariants::WeightSpec::gaussian(mu), Poly1{phi});
        },
        py::arg("V"), py::arg("mu") = 1.0, py::arg("phi") = std::vector<double>{0.0, 1.0});
    m.def(
        "second_invariant",
        [](const Potential& V, double mu, int l) {
            return invariants::second_invariant(V, invariants::WeightSpec::gaussian(mu), l).total();
        },
        py::arg("V"), py::arg("mu") = 1.0, py::arg("l") = 0);
    m.def(
        "odd_invariant",
        [](const Potential& V, double mu, const std::vector<double>& phi) {
            return invariants::odd_invariant(V, invariants::WeightSpec::gaussian(mu), Poly1{phi});
        },
        py::arg("V"), py::arg("mu") = 1.0, py::arg("phi") = std::vector<double>{0.0, 1.0});
    m.def(
        "sphere_invariant",
        [](const Potential& V, double E, const std::vector<double>& phi) {
            return invariants::sphere_invariant(V, E, Poly1{phi});
        },
        py::arg("V"), py::arg("E") = 1.0, py::arg("phi") = std::vector<double>{0.0, 1.0});
    m.def("geometric_grid", &invariants::geometric_grid);

    // inverse problems against the classical oracle
    m.def("recover_hessian", [](const Potential& V) {
        return report_dict(inverse::recover_hessian(inverse::classical_oracle(V)));
    });
    m.def(
        "recover_odd_1d",
        [](const Potential& V, int D) { return report_dict(inverse::recover_odd_1d(inverse::classical_oracle(V), D)); },
        py::arg("V"), py::arg("D"));
    m.def(
        "recover_even_1d",
        [](const Potential& V, double R, int count) {
            return report_dict(inverse::recover_even_1d(inverse::classical_even1d_samples(V, R, count)));
        },
        py::arg("V"), py::arg("R") = 2.0, py::arg("count") = 40);
    m.def("rigidity_sigma_min", [](double a, double b, int D) { return inverse::rigidity_svd(a, b, D).sigma_min; });

    // audits
    m.def("audit_names", &audits::audit_names);
    m.def("run_audit", [](const std::string& name) {
        auto r = audits::run_named(name);
        py::list checks;
        for (const auto& c : r.checks) checks.append(py::make_tuple(c.name, c.pass, c.value, c.threshold));
        return py::make_tuple(r.pass(), checks);
    });
}
