// Python bindings for the core library: models, bounds, experiments, and
// sweeps. Mirrors the C++ API one to one; optionals map to None.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qsearch/bounds.hpp"
#include "qsearch/models.hpp"
#include "qsearch/montecarlo.hpp"
#include "qsearch/procedures.hpp"

namespace py = pybind11;
using namespace qsearch;

PYBIND11_MODULE(qsearch, m) {
    m.doc() = "Quickest search over multiple populations: procedures, bounds, "
              "and Monte Carlo experiments.";

    py::class_<PopulationModel>(m, "PopulationModel",
                                "Two-hypothesis population model (P0 typical, P1 atypical).")
        .def_static("gaussian", &PopulationModel::gaussian, py::arg("mu"),
                    "P0 = Normal(-mu, 1), P1 = Normal(+mu, 1).")
        .def_static("coin", &PopulationModel::coin, py::arg("b"),
                    "P0 = heads prob 1/2 - b, P1 = heads prob 1/2 + b.")
        .def_static("generic", &PopulationModel::generic, py::arg("p0"), py::arg("p1"),
                    "Two probability tables over a shared finite alphabet.")
        .def("log_lr", &PopulationModel::log_lr, py::arg("y"))
        .def("kl_divergences", &PopulationModel::kl_divergences,
             "(D(P0||P1), D(P1||P0)) as a pair.")
        .def("round_threshold", &PopulationModel::round_threshold, py::arg("k"))
        .def("describe", &PopulationModel::describe)
        .def("__repr__",
             [](const PopulationModel& p) { return "PopulationModel(" + p.describe() + ")"; });

    py::enum_<GammaLPolicy>(m, "GammaLPolicy")
        .value("paper", GammaLPolicy::paper)
        .value("cusum", GammaLPolicy::cusum)
        .value("value", GammaLPolicy::value);

    py::class_<SsprtSettings>(m, "SsprtSettings")
        .def(py::init([](GammaLPolicy policy, double gamma_l_value, bool exact_overshoot) {
                 return SsprtSettings{policy, gamma_l_value, exact_overshoot};
             }),
             py::arg("policy") = GammaLPolicy::paper, py::arg("gamma_l_value") = 0.0,
             py::arg("exact_overshoot") = false)
        .def_readwrite("policy", &SsprtSettings::policy)
        .def_readwrite("gamma_l_value", &SsprtSettings::gamma_l_value)
        .def_readwrite("exact_overshoot", &SsprtSettings::exact_overshoot);

    py::class_<SeqThreshSettings>(m, "SeqThreshSettings")
        .def(py::init([](std::optional<int> k_max) { return SeqThreshSettings{k_max}; }),
             py::arg("k_max") = std::nullopt)
        .def_readwrite("k_max", &SeqThreshSettings::k_max_override);

    py::class_<NonAdaptiveSettings>(m, "NonAdaptiveSettings")
        .def(py::init([](std::int64_t n0, double tau) { return NonAdaptiveSettings{n0, tau}; }),
             py::arg("n0"), py::arg("tau") = 0.0)
        .def_readwrite("n0", &NonAdaptiveSettings::n0)
        .def_readwrite("tau", &NonAdaptiveSettings::tau);

    py::class_<ExperimentSpec>(m, "ExperimentSpec")
        .def(py::init([](PopulationModel model, ProcedureSettings procedure, double pi,
                         double delta, std::uint64_t trials, std::uint64_t seed,
                         bool collect_per_population, int threads) {
                 return ExperimentSpec{std::move(model),        std::move(procedure), pi, delta,
                                       trials,                  seed,
                                       collect_per_population,  threads};
             }),
             py::arg("model"), py::arg("procedure"), py::arg("pi") = 1e-3,
             py::arg("delta") = 1e-2, py::arg("trials") = 1000, py::arg("seed") = 1,
             py::arg("collect_per_population") = true, py::arg("threads") = 1)
        .def_readwrite("model", &ExperimentSpec::model)
        .def_readwrite("procedure", &ExperimentSpec::procedure)
        .def_readwrite("pi", &ExperimentSpec::pi)
        .def_readwrite("delta", &ExperimentSpec::delta)
        .def_readwrite("trials", &ExperimentSpec::trials)
        .def_readwrite("seed", &ExperimentSpec::master_seed)
        .def_readwrite("collect_per_population", &ExperimentSpec::collect_per_population)
        .def_readwrite("threads", &ExperimentSpec::threads);

    py::class_<MonteCarloSummary>(m, "MonteCarloSummary")
        .def_readonly("trials", &MonteCarloSummary::trials)
        .def_readonly("mean_N", &MonteCarloSummary::mean_n)
        .def_readonly("stderr_N", &MonteCarloSummary::stderr_n)
        .def_readonly("pi_mean_N", &MonteCarloSummary::pi_mean_n)
        .def_readonly("pe_hat", &MonteCarloSummary::pe_hat)
        .def_property_readonly(
            "pe_ci95",
            [](const MonteCarloSummary& s) { return std::make_pair(s.pe_ci95.lo, s.pe_ci95.hi); })
        .def_readonly("alpha_hat", &MonteCarloSummary::alpha_hat)
        .def_readonly("beta_hat", &MonteCarloSummary::beta_hat)
        .def_readonly("mean_N1", &MonteCarloSummary::mean_n1)
        .def_readonly("error_count", &MonteCarloSummary::error_count)
        .def_readonly("visits0", &MonteCarloSummary::visits0)
        .def_readonly("visits1", &MonteCarloSummary::visits1)
        .def_readonly("elapsed_seconds", &MonteCarloSummary::elapsed_seconds)
        .def("__repr__", [](const MonteCarloSummary& s) {
            return "MonteCarloSummary(trials=" + std::to_string(s.trials) +
                   ", mean_N=" + std::to_string(s.mean_n) +
                   ", pe_hat=" + std::to_string(s.pe_hat) + ")";
        });

    m.def("run_experiment", &run_experiment, py::arg("spec"),
          "Monte Carlo estimate of E[N] and the error rate for one experiment.",
          py::call_guard<py::gil_scoped_release>());

    py::class_<IdentityReport> identity(m, "IdentityReport");
    py::enum_<IdentityReport::Status>(identity, "Status")
        .value("passed", IdentityReport::Status::pass)
        .value("failed", IdentityReport::Status::fail)
        .value("inconclusive", IdentityReport::Status::inconclusive);
    identity.def_readonly("status", &IdentityReport::status)
        .def_readonly("renewal_lhs", &IdentityReport::renewal_lhs)
        .def_readonly("renewal_rhs", &IdentityReport::renewal_rhs)
        .def_readonly("renewal_residual", &IdentityReport::renewal_residual)
        .def_readonly("renewal_stderr", &IdentityReport::renewal_stderr)
        .def_readonly("error_lhs", &IdentityReport::error_lhs)
        .def_readonly("error_rhs", &IdentityReport::error_rhs)
        .def_readonly("error_residual", &IdentityReport::error_residual)
        .def_readonly("error_stderr", &IdentityReport::error_stderr);

    m.def("verify_identities", &verify_identities, py::arg("summary"), py::arg("pi"),
          "Check the renewal and error identities at 4 combined standard errors.");

    m.def("binomial_ci95",
          [](std::uint64_t successes, std::uint64_t n) {
              const Interval ci = binomial_ci95(successes, n);
              return std::make_pair(ci.lo, ci.hi);
          },
          py::arg("successes"), py::arg("n"),
          "95% binomial interval (normal approximation, exact tails for small counts).");

    // Bounds.
    m.def("lb_any", &lb_any, py::arg("pi"), py::arg("delta"), py::arg("d01"), py::arg("d10"),
          "Lower bound on E[N] for any procedure with P_e <= delta/(1+delta).");
    m.def("lb_any_simplified", &lb_any_simplified, py::arg("pi"), py::arg("delta"), py::arg("d"));
    m.def("lb_rare_coeff", &lb_rare_coeff, py::arg("delta"), py::arg("d01"),
          "Small-pi coefficient: lim inf pi E[N] >= this.");
    m.def("lb_nonadaptive", &lb_nonadaptive, py::arg("pi"), py::arg("delta"), py::arg("d10"));

    py::class_<SsprtBound>(m, "SsprtBound")
        .def_readonly("bound", &SsprtBound::bound)
        .def_readonly("C1", &SsprtBound::c1)
        .def_readonly("C2", &SsprtBound::c2)
        .def_readonly("C1prime", &SsprtBound::c1prime)
        .def_readonly("C2prime", &SsprtBound::c2prime);
    m.def("ub_ssprt", &ub_ssprt, py::arg("pi"), py::arg("delta"), py::arg("model"),
          py::arg("gamma_l"), py::arg("exact_overshoot") = false,
          "Expected-sample upper bound for the series-of-SPRTs procedure.");

    py::class_<CoinBound>(m, "CoinBound")
        .def_readonly("ub", &CoinBound::ub)
        .def_readonly("C1_refined", &CoinBound::c1_refined);
    m.def("coin_bounds", &coin_bounds, py::arg("pi"), py::arg("delta"), py::arg("b"));

    py::class_<SeqThreshParams>(m, "SeqThreshParams")
        .def_readonly("k_max", &SeqThreshParams::k_max)
        .def_readonly("alpha", &SeqThreshParams::alpha)
        .def_readonly("clamped", &SeqThreshParams::clamped);
    m.def("seq_thresh_params", &seq_thresh_params, py::arg("pi"));
    m.def("default_k_max", &default_k_max, py::arg("pi"));
    m.def("paper_gamma_l", &paper_gamma_l, py::arg("model"));

    py::class_<BoundsReport>(m, "BoundsReport")
        .def_readonly("pi", &BoundsReport::pi)
        .def_readonly("delta", &BoundsReport::delta)
        .def_readonly("d01", &BoundsReport::d01)
        .def_readonly("d10", &BoundsReport::d10)
        .def_readonly("gamma_l", &BoundsReport::gamma_l)
        .def_readonly("lb_any", &BoundsReport::lb_any)
        .def_readonly("lb_any_simplified", &BoundsReport::lb_any_simplified)
        .def_readonly("lb_rare_coeff", &BoundsReport::lb_rare_coeff)
        .def_readonly("ub_ssprt", &BoundsReport::ub_ssprt)
        .def_readonly("C1", &BoundsReport::c1)
        .def_readonly("C1prime", &BoundsReport::c1prime)
        .def_readonly("C2", &BoundsReport::c2)
        .def_readonly("C2prime", &BoundsReport::c2prime)
        .def_readonly("lb_nonadaptive", &BoundsReport::lb_nonadaptive)
        .def_readonly("coin_ub", &BoundsReport::coin_ub)
        .def_readonly("coin_C1_refined", &BoundsReport::coin_c1_refined)
        .def_readonly("vacuous_lower_bound", &BoundsReport::vacuous_lower_bound);
    m.def("evaluate_bounds", &evaluate_bounds, py::arg("pi"), py::arg("delta"), py::arg("model"),
          py::arg("gamma_l") = std::nullopt, py::arg("exact_overshoot") = false,
          "Every applicable bound at one operating point.");

    // Sweeps.
    py::enum_<SweepAxis>(m, "SweepAxis")
        .value("mu", SweepAxis::mu)
        .value("b", SweepAxis::b)
        .value("pi", SweepAxis::pi)
        .value("delta", SweepAxis::delta);

    py::class_<SweepPoint>(m, "SweepPoint")
        .def_readonly("value", &SweepPoint::value)
        .def_readonly("summary", &SweepPoint::summary)
        .def_readonly("bounds", &SweepPoint::bounds)
        .def_readonly("error", &SweepPoint::error);
    m.def("sweep", &sweep, py::arg("axis"), py::arg("grid"), py::arg("base"),
          "One experiment per grid point, paired with the bounds at the same parameters.",
          py::call_guard<py::gil_scoped_release>());
}
