#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qsearch/bounds.hpp"
#include "qsearch/models.hpp"
#include "qsearch/procedures.hpp"

namespace qsearch {

// Procedure settings as given by the caller; concrete configs (gamma_U,
// k_max, round thresholds) are derived from (pi, delta, model) when the
// experiment runs, so sweeps re-derive them per grid point.
struct SsprtSettings {
    GammaLPolicy policy = GammaLPolicy::paper;
    double gamma_l_value = 0;  // used when policy == value
    bool exact_overshoot = false;
};

struct SeqThreshSettings {
    std::optional<int> k_max_override;  // default: ceil(2 log2((1-pi)/pi))
};

struct NonAdaptiveSettings {
    std::int64_t n0 = 1;
    double tau = 0;  // midpoint default, equal error rates for symmetric pairs
};

using ProcedureSettings = std::variant<SsprtSettings, SeqThreshSettings, NonAdaptiveSettings>;

const char* procedure_name(const ProcedureSettings& p);  // "ssprt" | "seqthresh" | "nonadaptive"

struct ExperimentSpec {
    PopulationModel model;
    ProcedureSettings procedure;
    double pi = 1e-3;
    double delta = 1e-2;
    std::uint64_t trials = 1000;
    std::uint64_t master_seed = 1;
    bool collect_per_population = true;  // off: skip the per-visit statistics
    int threads = 1;
};

struct Interval {
    double lo = 0;
    double hi = 0;
};

struct MonteCarloSummary {
    std::uint64_t trials = 0;
    double mean_n = 0;
    double stderr_n = 0;
    double pi_mean_n = 0;
    double pe_hat = 0;
    Interval pe_ci95;
    // Per-population-visit statistics, pooled across trials; absent when not
    // collected or when a visit count is zero.
    std::optional<double> alpha_hat;  // false terminations / typical populations visited
    std::optional<double> beta_hat;   // abandoned atypical / atypical populations visited
    std::optional<double> mean_n1;    // samples per population visit
    double elapsed_seconds = 0;       // wall clock; never serialized (outputs stay byte-stable)
    // Backing counts for the identity checks.
    std::uint64_t error_count = 0;
    std::uint64_t visits0 = 0;
    std::uint64_t visits1 = 0;
    std::uint64_t abandoned1 = 0;
    double var_n1 = 0;  // per-visit sample variance
};

MonteCarloSummary run_experiment(const ExperimentSpec& spec);

// Empirical check of the renewal identity E[N] = E[N1]/(alpha(1-pi)+pi(1-beta))
// and the error identity P_e = alpha(1-pi)/(alpha(1-pi)+pi(1-beta)) against
// the pooled per-visit estimates, at 4 combined (delta-method) standard errors.
struct IdentityReport {
    enum class Status { pass, fail, inconclusive };
    Status status = Status::inconclusive;
    double renewal_lhs = 0, renewal_rhs = 0, renewal_residual = 0, renewal_stderr = 0;
    double error_lhs = 0, error_rhs = 0, error_residual = 0, error_stderr = 0;
};

IdentityReport verify_identities(const MonteCarloSummary& summary, double pi);

// One experiment per grid point with per-point seeds split from the master
// seed, paired with the analytic bounds at the same parameters. Points that
// fail carry the diagnostic instead of results.
enum class SweepAxis { mu, b, pi, delta };

struct SweepPoint {
    double value = 0;
    std::optional<MonteCarloSummary> summary;
    std::optional<BoundsReport> bounds;
    std::string error;
};

std::vector<SweepPoint> sweep(SweepAxis axis, const std::vector<double>& grid,
                              const ExperimentSpec& base);

// 95% binomial interval: normal approximation with a 1/(2n) continuity guard,
// switching to the exact tail-inversion interval when either count is < 5.
Interval binomial_ci95(std::uint64_t successes, std::uint64_t n);

}  // namespace qsearch
