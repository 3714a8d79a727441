#include "qsearch/cli.hpp"

#include <cstddef>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qsearch/bounds.hpp"
#include "qsearch/csv.hpp"
#include "qsearch/montecarlo.hpp"

namespace qsearch {

namespace {

double parse_assignment(const std::string& text, const char* key, const std::string& spec) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || text.substr(0, eq) != key)
        throw std::invalid_argument("bad model spec '" + spec + "': expected " + key +
                                    "=<value> after the colon");
    const std::string num = text.substr(eq + 1);
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(num, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != num.size())
        throw std::invalid_argument("bad model spec '" + spec + "': cannot parse '" + num + "'");
    return v;
}

std::vector<double> parse_probability_line(const std::string& line, const std::string& path) {
    std::istringstream in(line);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof())
        throw std::invalid_argument("model table file " + path + ": non-numeric entry in '" +
                                    line + "'");
    return out;
}

struct GammaChoice {
    GammaLPolicy policy = GammaLPolicy::paper;
    double value = 0;
};

GammaChoice parse_gamma_choice(const std::string& s) {
    if (s == "paper") return {GammaLPolicy::paper, 0};
    if (s == "cusum") return {GammaLPolicy::cusum, 0};
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw std::invalid_argument("--gamma-l must be 'paper', 'cusum', or a number in (0,1)");
    if (!(v > 0) || !(v < 1)) throw std::invalid_argument("--gamma-l value must lie in (0,1)");
    return {GammaLPolicy::value, v};
}

// The gamma_L the bound constants are evaluated at; absent when no value in
// [0,1) applies (cusum runs at gamma_L = 1, generic pairs have no policy).
std::optional<double> bound_gamma_l(const GammaChoice& g, const PopulationModel& model) {
    switch (g.policy) {
        case GammaLPolicy::value:
            return g.value;
        case GammaLPolicy::cusum:
            return std::nullopt;
        case GammaLPolicy::paper:
            if (model.kind() == ModelKind::generic_pair) return std::nullopt;
            return paper_gamma_l(model);
    }
    return std::nullopt;
}

// Everything the subcommands read; one instance shared by all of them, since
// only one subcommand parses per invocation.
struct Flags {
    std::string model;
    double pi = 1e-3;
    double delta = 1e-2;
    std::string procedure = "ssprt";
    std::string gamma_l = "paper";
    bool exact_overshoot = false;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    int k_max = 1;
    std::int64_t n0 = 1;
    double tau = 0;
    std::string axis;
    std::vector<double> grid;
    std::string output;
};

struct ProcOptions {
    CLI::Option* gamma = nullptr;
    CLI::Option* exact = nullptr;
    CLI::Option* k_max = nullptr;
    CLI::Option* n0 = nullptr;
    CLI::Option* tau = nullptr;
};

void check_procedure_flags(const Flags& f, const ProcOptions& o) {
    if (f.procedure != "ssprt" && (o.gamma->count() || o.exact->count()))
        throw std::invalid_argument("--gamma-l and --exact-overshoot apply to --procedure ssprt");
    if (f.procedure != "seqthresh" && o.k_max->count())
        throw std::invalid_argument("--k-max applies to --procedure seqthresh");
    if (f.procedure != "nonadaptive" && (o.n0->count() || o.tau->count()))
        throw std::invalid_argument("--n0 and --tau apply to --procedure nonadaptive");
}

ProcedureSettings make_settings(const Flags& f, const ProcOptions& o) {
    check_procedure_flags(f, o);
    if (f.procedure == "ssprt") {
        const GammaChoice g = parse_gamma_choice(f.gamma_l);
        return SsprtSettings{g.policy, g.value, f.exact_overshoot};
    }
    if (f.procedure == "seqthresh")
        return SeqThreshSettings{o.k_max->count() ? std::optional<int>(f.k_max) : std::nullopt};
    return NonAdaptiveSettings{f.n0, f.tau};
}

ExperimentSpec make_spec(const Flags& f, const ProcOptions& o, PopulationModel model) {
    return ExperimentSpec{std::move(model), make_settings(f, o), f.pi,  f.delta,
                          f.trials,         f.seed,              true,  f.threads};
}

int with_output(const std::string& path, std::ostream& out, std::ostream& err,
                const std::function<int(std::ostream&)>& body) {
    if (path.empty()) return body(out);
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        err << "cannot open output file: " << path << "\n";
        return 2;
    }
    const int rc = body(file);
    file.flush();
    if (!file) {
        err << "write failed: " << path << "\n";
        return 2;
    }
    return rc;
}

std::string sanitize_cell(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void print_field(std::ostream& out, std::string name, const std::string& value) {
    name.resize(18, ' ');
    out << name << value << '\n';
}

std::string cell_or_dash(const std::optional<double>& v) {
    return v ? format_number(*v) : std::string("-");
}

const std::vector<std::string> kBoundsHeader = {
    "model",   "pi",      "delta",   "D01",     "D10",
    "gamma_L", "lb_any",  "lb_any_simplified",  "lb_rare_coeff",
    "ub_ssprt", "C1",     "C2",      "C1prime", "C2prime",
    "lb_nonadaptive",     "coin_ub", "coin_C1_refined",  "vacuous"};

int cmd_bounds(const Flags& f, std::ostream& out, std::ostream& err) {
    const PopulationModel model = parse_model_spec(f.model);
    const GammaChoice g = parse_gamma_choice(f.gamma_l);
    if (f.exact_overshoot && model.kind() != ModelKind::coin_pair)
        throw std::invalid_argument("--exact-overshoot applies to coin models only");
    const BoundsReport rep =
        evaluate_bounds(f.pi, f.delta, model, bound_gamma_l(g, model), f.exact_overshoot);

    print_field(out, "model", model.describe());
    print_field(out, "pi", format_number(rep.pi));
    print_field(out, "delta", format_number(rep.delta));
    print_field(out, "D(P0||P1)", format_number(rep.d01));
    print_field(out, "D(P1||P0)", format_number(rep.d10));
    print_field(out, "gamma_L", cell_or_dash(rep.gamma_l));
    print_field(out, "lb_any", format_number(rep.lb_any));
    print_field(out, "lb_any_simplified", cell_or_dash(rep.lb_any_simplified));
    print_field(out, "lb_rare_coeff", format_number(rep.lb_rare_coeff));
    print_field(out, "ub_ssprt", cell_or_dash(rep.ub_ssprt));
    print_field(out, "C1", cell_or_dash(rep.c1));
    print_field(out, "C2", cell_or_dash(rep.c2));
    print_field(out, "C1prime", cell_or_dash(rep.c1prime));
    print_field(out, "C2prime", cell_or_dash(rep.c2prime));
    print_field(out, "lb_nonadaptive", format_number(rep.lb_nonadaptive));
    print_field(out, "coin_ub", cell_or_dash(rep.coin_ub));
    print_field(out, "coin_C1_refined", cell_or_dash(rep.coin_c1_refined));
    if (rep.vacuous_lower_bound)
        out << "note: a lower bound is negative at this operating point (vacuous)\n";

    if (f.output.empty()) return 0;
    return with_output(f.output, out, err, [&](std::ostream& os) {
        os << csv_row(kBoundsHeader);
        os << csv_row({model.describe(), format_number(rep.pi), format_number(rep.delta),
                       format_number(rep.d01), format_number(rep.d10), format_cell(rep.gamma_l),
                       format_number(rep.lb_any), format_cell(rep.lb_any_simplified),
                       format_number(rep.lb_rare_coeff), format_cell(rep.ub_ssprt),
                       format_cell(rep.c1), format_cell(rep.c2), format_cell(rep.c1prime),
                       format_cell(rep.c2prime), format_number(rep.lb_nonadaptive),
                       format_cell(rep.coin_ub), format_cell(rep.coin_c1_refined),
                       rep.vacuous_lower_bound ? "1" : "0"});
        return 0;
    });
}

const std::vector<std::string> kSimulateHeader = {
    "model",  "procedure", "pi",        "delta",  "trials", "seed",      "mean_N",   "stderr_N",
    "pi_mean_N", "pe_hat", "pe_lo",     "pe_hi",  "alpha_hat", "beta_hat", "mean_N1"};

int cmd_simulate(const Flags& f, const ProcOptions& o, std::ostream& out, std::ostream& err) {
    const ExperimentSpec spec = make_spec(f, o, parse_model_spec(f.model));
    return with_output(f.output, out, err, [&](std::ostream& os) {
        os << csv_row(kSimulateHeader);
        os.flush();  // header survives a non-terminating run
        const MonteCarloSummary s = run_experiment(spec);
        os << csv_row({spec.model.describe(), procedure_name(spec.procedure),
                       format_number(spec.pi), format_number(spec.delta),
                       format_number(spec.trials), format_number(spec.master_seed),
                       format_number(s.mean_n), format_number(s.stderr_n),
                       format_number(s.pi_mean_n), format_number(s.pe_hat),
                       format_number(s.pe_ci95.lo), format_number(s.pe_ci95.hi),
                       format_cell(s.alpha_hat), format_cell(s.beta_hat),
                       format_cell(s.mean_n1)});
        err << "elapsed " << format_number(s.elapsed_seconds) << " s\n";
        return 0;
    });
}

const std::vector<std::string> kSweepHeader = {
    "axis",     "value",    "pi",       "delta",     "procedure", "trials",   "seed",
    "mean_N",   "stderr_N", "pi_mean_N", "pe_hat",   "pe_lo",     "pe_hi",    "alpha_hat",
    "beta_hat", "mean_N1",  "lb_any",   "lb_rare_coeff", "ub_ssprt", "C1",    "lb_nonadaptive",
    "error"};

SweepAxis axis_from(const std::string& s) {
    if (s == "mu") return SweepAxis::mu;
    if (s == "b") return SweepAxis::b;
    if (s == "pi") return SweepAxis::pi;
    if (s == "delta") return SweepAxis::delta;
    throw std::invalid_argument("--axis must be one of mu, b, pi, delta");
}

int cmd_sweep(const Flags& f, const ProcOptions& o, std::ostream& out, std::ostream& err) {
    const SweepAxis axis = axis_from(f.axis);
    const bool model_axis = axis == SweepAxis::mu || axis == SweepAxis::b;
    if (!model_axis && f.model.empty())
        throw std::invalid_argument("sweeps over pi or delta require --model");
    if (f.exact_overshoot && axis == SweepAxis::mu)
        throw std::invalid_argument("--exact-overshoot applies to coin models only");
    // For mu and b sweeps each grid point builds its own model; the base
    // model only matters for pi and delta sweeps.
    PopulationModel base_model =
        f.model.empty() ? PopulationModel::gaussian(1.0) : parse_model_spec(f.model);
    if (f.exact_overshoot && !model_axis && base_model.kind() != ModelKind::coin_pair)
        throw std::invalid_argument("--exact-overshoot applies to coin models only");
    const ExperimentSpec base = make_spec(f, o, std::move(base_model));

    const std::vector<SweepPoint> points = sweep(axis, f.grid, base);
    return with_output(f.output, out, err, [&](std::ostream& os) {
        os << csv_row(kSweepHeader);
        double elapsed = 0;
        for (std::size_t j = 0; j < points.size(); ++j) {
            const SweepPoint& pt = points[j];
            std::vector<std::string> row;
            row.reserve(kSweepHeader.size());
            row.push_back(f.axis);
            row.push_back(format_number(pt.value));
            row.push_back(format_number(axis == SweepAxis::pi ? pt.value : base.pi));
            row.push_back(format_number(axis == SweepAxis::delta ? pt.value : base.delta));
            row.push_back(procedure_name(base.procedure));
            row.push_back(format_number(base.trials));
            row.push_back(format_number(mix_seed(base.master_seed, j)));
            if (pt.summary) {
                const MonteCarloSummary& s = *pt.summary;
                row.push_back(format_number(s.mean_n));
                row.push_back(format_number(s.stderr_n));
                row.push_back(format_number(s.pi_mean_n));
                row.push_back(format_number(s.pe_hat));
                row.push_back(format_number(s.pe_ci95.lo));
                row.push_back(format_number(s.pe_ci95.hi));
                row.push_back(format_cell(s.alpha_hat));
                row.push_back(format_cell(s.beta_hat));
                row.push_back(format_cell(s.mean_n1));
                elapsed += s.elapsed_seconds;
            } else {
                row.insert(row.end(), 9, std::string());
            }
            if (pt.bounds) {
                row.push_back(format_number(pt.bounds->lb_any));
                row.push_back(format_number(pt.bounds->lb_rare_coeff));
                row.push_back(format_cell(pt.bounds->ub_ssprt));
                row.push_back(format_cell(pt.bounds->c1));
                row.push_back(format_number(pt.bounds->lb_nonadaptive));
            } else {
                row.insert(row.end(), 5, std::string());
            }
            row.push_back(sanitize_cell(pt.error));
            os << csv_row(row);
        }
        err << "elapsed " << format_number(elapsed) << " s\n";
        return 0;
    });
}

int cmd_verify(const Flags& f, const ProcOptions& o, std::ostream& out, std::ostream& err) {
    const ExperimentSpec spec = make_spec(f, o, parse_model_spec(f.model));
    const MonteCarloSummary s = run_experiment(spec);
    const IdentityReport rep = verify_identities(s, spec.pi);
    err << "elapsed " << format_number(s.elapsed_seconds) << " s\n";

    if (rep.status == IdentityReport::Status::inconclusive) {
        out << "verdict: inconclusive (no per-population error estimates at this "
               "configuration)\n";
        return 2;
    }
    out << "renewal identity  E[N] = E[N1] / (alpha (1-pi) + pi (1-beta))\n";
    out << "  lhs " << format_number(rep.renewal_lhs) << "  rhs "
        << format_number(rep.renewal_rhs) << "  |residual| "
        << format_number(rep.renewal_residual) << "  stderr "
        << format_number(rep.renewal_stderr) << "\n";
    out << "error identity    Pe = alpha (1-pi) / (alpha (1-pi) + pi (1-beta))\n";
    out << "  lhs " << format_number(rep.error_lhs) << "  rhs " << format_number(rep.error_rhs)
        << "  |residual| " << format_number(rep.error_residual) << "  stderr "
        << format_number(rep.error_stderr) << "\n";
    if (rep.status == IdentityReport::Status::pass) {
        out << "verdict: pass (both residuals within 4 stderr)\n";
        return 0;
    }
    out << "verdict: fail (a residual exceeds 4 stderr)\n";
    return 3;
}

}  // namespace

PopulationModel parse_model_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
    if (kind == "gaussian") return PopulationModel::gaussian(parse_assignment(rest, "mu", spec));
    if (kind == "coin") return PopulationModel::coin(parse_assignment(rest, "b", spec));
    if (kind == "generic") {
        if (rest.empty())
            throw std::invalid_argument("generic model spec needs a table file path");
        std::ifstream file(rest);
        if (!file) throw std::invalid_argument("cannot open model table file: " + rest);
        std::string line0, line1;
        if (!std::getline(file, line0) || !std::getline(file, line1))
            throw std::invalid_argument("model table file " + rest +
                                        " needs two lines of probabilities");
        return PopulationModel::generic(parse_probability_line(line0, rest),
                                        parse_probability_line(line1, rest));
    }
    throw std::invalid_argument("unrecognized model spec '" + spec +
                                "' (expected gaussian:mu=<f> | coin:b=<f> | generic:<path>)");
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Search for an atypical population: analytic bounds and Monte Carlo runs"};
    app.name("qsearch");
    app.require_subcommand(1);

    Flags f;
    ProcOptions opts[3];  // simulate, sweep, verify

    const auto add_point = [&](CLI::App* sub, bool required) {
        auto* model = sub->add_option("--model", f.model,
                                      "gaussian:mu=<f> | coin:b=<f> | generic:<table file>");
        auto* pi = sub->add_option("--pi", f.pi, "prior atypical probability, in (0, 1/2]");
        auto* delta = sub->add_option("--delta", f.delta, "target error parameter: Pe <= delta/(1+delta)");
        if (required) {
            model->required();
            pi->required();
            delta->required();
        } else {
            pi->capture_default_str();
            delta->capture_default_str();
        }
    };
    const auto add_procedure = [&](CLI::App* sub, ProcOptions& o) {
        sub->add_option("--procedure", f.procedure, "ssprt | seqthresh | nonadaptive")
            ->check(CLI::IsMember({"ssprt", "seqthresh", "nonadaptive"}))
            ->capture_default_str();
        o.gamma = sub->add_option("--gamma-l", f.gamma_l,
                                  "lower SPRT threshold: paper | cusum | number in (0,1)")
                      ->capture_default_str();
        o.exact = sub->add_flag("--exact-overshoot", f.exact_overshoot,
                                "coins only: snap gamma_U onto the log-LR lattice");
        o.k_max = sub->add_option("--k-max", f.k_max, "override the derived round count")
                      ->check(CLI::PositiveNumber);
        o.n0 = sub->add_option("--n0", f.n0, "samples per population")->check(CLI::PositiveNumber);
        o.tau = sub->add_option("--tau", f.tau, "declaration threshold on the summed log-LR");
        sub->add_option("--trials", f.trials, "Monte Carlo trials")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--seed", f.seed, "master seed")->capture_default_str();
        sub->add_option("--threads", f.threads, "worker threads (summary independent of count)")
            ->check(CLI::Range(1, 256))
            ->capture_default_str();
    };

    CLI::App* bounds =
        app.add_subcommand("bounds", "Evaluate every applicable bound at one operating point");
    add_point(bounds, true);
    bounds->add_option("--gamma-l", f.gamma_l, "lower SPRT threshold: paper | cusum | number in (0,1)")
        ->capture_default_str();
    bounds->add_flag("--exact-overshoot", f.exact_overshoot,
                     "coins only: report exact-overshoot constants");
    bounds->add_option("-o,--output", f.output, "also write the report as a CSV row");

    CLI::App* simulate =
        app.add_subcommand("simulate", "Run one Monte Carlo experiment, emit a CSV summary row");
    add_point(simulate, false);
    simulate->get_option("--model")->required();
    add_procedure(simulate, opts[0]);
    simulate->add_option("-o,--output", f.output, "write the CSV here instead of stdout");

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "Run experiments along a parameter grid, one CSV row per point");
    add_point(sweep_cmd, false);
    add_procedure(sweep_cmd, opts[1]);
    sweep_cmd->add_option("--axis", f.axis, "mu | b | pi | delta")->required();
    sweep_cmd->add_option("--grid", f.grid, "comma-separated grid values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("-o,--output", f.output, "write the CSV here instead of stdout");

    CLI::App* verify =
        app.add_subcommand("verify", "Check the renewal and error identities on a Monte Carlo run");
    add_point(verify, false);
    verify->get_option("--model")->required();
    add_procedure(verify, opts[2]);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help and friends
            const auto parsed = app.get_subcommands();
            out << (parsed.empty() ? app : *parsed.front()).help();
            return 0;
        }
        err << e.what() << "\n";
        return 1;
    }

    try {
        if (bounds->parsed()) return cmd_bounds(f, out, err);
        if (simulate->parsed()) return cmd_simulate(f, opts[0], out, err);
        if (sweep_cmd->parsed()) return cmd_sweep(f, opts[1], out, err);
        return cmd_verify(f, opts[2], out, err);
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        err << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace qsearch
