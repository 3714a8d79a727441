#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qsearch/bounds.hpp"
#include "qsearch/models.hpp"
#include "qsearch/montecarlo.hpp"
#include "qsearch/procedures.hpp"
#include "qsearch/rng.hpp"

using namespace qsearch;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact binomial upper tail P(X >= k), direct log-pmf sum; reference for
// checking that the interval endpoints invert the 2.5% tails.
double tail_ge(std::uint64_t n, std::uint64_t k, double p) {
    if (k == 0) return 1;
    if (k > n) return 0;
    const double lp = std::log(p), lq = std::log1p(-p);
    double acc = 0;
    for (std::uint64_t j = k; j <= n; ++j)
        acc += std::exp(std::lgamma(double(n) + 1) - std::lgamma(double(j) + 1) -
                        std::lgamma(double(n - j) + 1) + double(j) * lp + double(n - j) * lq);
    return acc;
}

ExperimentSpec base_spec(PopulationModel model, ProcedureSettings proc, double pi,
                         std::uint64_t trials, std::uint64_t seed) {
    return ExperimentSpec{std::move(model), std::move(proc), pi, 1e-2, trials, seed};
}

// Everything except the wall-clock time, compared exactly.
bool same_summary(const MonteCarloSummary& a, const MonteCarloSummary& b) {
    return a.trials == b.trials && a.mean_n == b.mean_n && a.stderr_n == b.stderr_n &&
           a.pi_mean_n == b.pi_mean_n && a.pe_hat == b.pe_hat && a.pe_ci95.lo == b.pe_ci95.lo &&
           a.pe_ci95.hi == b.pe_ci95.hi && a.alpha_hat == b.alpha_hat &&
           a.beta_hat == b.beta_hat && a.mean_n1 == b.mean_n1 &&
           a.error_count == b.error_count && a.visits0 == b.visits0 &&
           a.visits1 == b.visits1 && a.abandoned1 == b.abandoned1 && a.var_n1 == b.var_n1;
}

}  // namespace

TEST_CASE("experiment specs are validated before any trial runs") {
    auto spec = base_spec(PopulationModel::gaussian(1.0), SsprtSettings{}, 0.1, 10, 1);

    spec.trials = 0;
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    spec.trials = 10;

    for (double bad_pi : {0.0, -0.1, 0.6, std::numeric_limits<double>::quiet_NaN()}) {
        spec.pi = bad_pi;
        CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    }
    spec.pi = 0.5;  // boundary value is allowed
    CHECK_NOTHROW(run_experiment(spec));

    spec.procedure = SeqThreshSettings{0};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    spec.procedure = NonAdaptiveSettings{0, 0.0};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
    spec.procedure = SsprtSettings{GammaLPolicy::value, 1.5, false};
    CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);
}

TEST_CASE("binomial interval switches branches and inverts the exact tails") {
    const Interval empty = binomial_ci95(0, 0);
    CHECK(empty.lo == 0.0);
    CHECK(empty.hi == 1.0);

    // both counts >= 5: normal approximation with the 1/(2n) guard
    const Interval mid = binomial_ci95(50, 100);
    CHECK(mid.lo == doctest::Approx(0.397001800773));
    CHECK(mid.hi == doctest::Approx(0.602998199227));
    const Interval edge = binomial_ci95(5, 100);
    const double half = 1.959963984540054 * std::sqrt(0.05 * 0.95 / 100) + 0.005;
    CHECK(edge.lo == doctest::Approx(0.05 - half));
    CHECK(edge.hi == doctest::Approx(0.05 + half));

    // zero successes: one-sided, closed form 1 - 0.025^(1/n)
    const Interval none = binomial_ci95(0, 100);
    CHECK(none.lo == 0.0);
    CHECK(none.hi == doctest::Approx(0.0362166926452));
    const Interval all = binomial_ci95(100, 100);
    CHECK(all.lo == doctest::Approx(0.9637833073548));
    CHECK(all.hi == 1.0);

    // rare-count branch: endpoints invert the exact binomial tails
    for (auto [k, n] : {std::pair<std::uint64_t, std::uint64_t>{3, 1000}, {4, 100}, {1, 30}}) {
        const Interval ci = binomial_ci95(k, n);
        CHECK(ci.lo < double(k) / double(n));
        CHECK(ci.hi > double(k) / double(n));
        CHECK(tail_ge(n, k, ci.lo) == doctest::Approx(0.025));
        CHECK(1 - tail_ge(n, k + 1, ci.hi) == doctest::Approx(0.025));
    }
}

TEST_CASE("summaries are identical for any thread count and across reruns") {
    auto spec = base_spec(PopulationModel::gaussian(2.0), SsprtSettings{}, 1e-2, 400, 42);

    spec.threads = 1;
    const auto s1 = run_experiment(spec);
    spec.threads = 2;
    const auto s2 = run_experiment(spec);
    spec.threads = 8;
    const auto s8 = run_experiment(spec);
    const auto s8b = run_experiment(spec);
    CHECK(same_summary(s1, s2));
    CHECK(same_summary(s1, s8));
    CHECK(same_summary(s8, s8b));

    // more threads than trials: the pool is clamped, results unchanged
    spec.trials = 7;
    spec.threads = 64;
    const auto tiny_many = run_experiment(spec);
    spec.threads = 1;
    const auto tiny_one = run_experiment(spec);
    CHECK(same_summary(tiny_many, tiny_one));
}

TEST_CASE("per-population bookkeeping stays coherent") {
    auto spec = base_spec(PopulationModel::coin(0.25), SsprtSettings{}, 0.05, 2000, 9);
    spec.threads = 4;
    const auto s = run_experiment(spec);

    const std::uint64_t visits = s.visits0 + s.visits1;
    CHECK(visits >= s.trials);  // every trial visits at least one population
    CHECK(s.error_count <= s.visits0);
    CHECK(s.abandoned1 <= s.visits1);
    REQUIRE(s.alpha_hat.has_value());
    REQUIRE(s.beta_hat.has_value());
    REQUIRE(s.mean_n1.has_value());
    CHECK(*s.alpha_hat == double(s.error_count) / double(s.visits0));
    CHECK(*s.beta_hat == double(s.abandoned1) / double(s.visits1));
    CHECK(s.pe_hat == double(s.error_count) / double(s.trials));
    CHECK(s.pe_ci95.lo <= s.pe_hat);
    CHECK(s.pe_hat <= s.pe_ci95.hi);
    CHECK(s.pi_mean_n == spec.pi * s.mean_n);
    CHECK(s.stderr_n >= 0);
    CHECK(s.var_n1 >= 0);
    // total samples conserved between the per-trial and per-visit views
    CHECK(*s.mean_n1 * double(visits) ==
          doctest::Approx(s.mean_n * double(s.trials)).epsilon(1e-12));

    spec.collect_per_population = false;
    const auto bare = run_experiment(spec);
    CHECK(!bare.alpha_hat.has_value());
    CHECK(!bare.beta_hat.has_value());
    CHECK(!bare.mean_n1.has_value());
    CHECK(bare.mean_n == s.mean_n);  // collection does not perturb the trials
}

TEST_CASE("degenerate coin search flips once per population") {
    // b = 1/2: a tails abandons instantly, a heads only ever comes from the
    // target, so the search is a geometric scan with one sample per visit.
    auto spec = base_spec(PopulationModel::coin(0.5), SsprtSettings{}, 1e-3, 1000, 3);
    const auto s = run_experiment(spec);

    CHECK(s.error_count == 0);
    CHECK(s.pe_hat == 0.0);
    CHECK(*s.alpha_hat == 0.0);
    CHECK(*s.beta_hat == 0.0);
    CHECK(*s.mean_n1 == 1.0);
    CHECK(std::abs(s.pi_mean_n - 1.0) <= 3 * spec.pi * s.stderr_n);

    const auto rep = verify_identities(s, spec.pi);
    CHECK(rep.status == IdentityReport::Status::pass);
    CHECK(rep.error_residual == 0.0);
    CHECK(rep.renewal_rhs == doctest::Approx(1000.0));
}

TEST_CASE("identity checks pass at the operating point for every procedure") {
    const double pi = 1e-3, delta = 1e-2;

    auto ssprt = base_spec(PopulationModel::gaussian(1.0), SsprtSettings{}, pi, 2000, 21);
    const auto s1 = run_experiment(ssprt);
    CHECK(verify_identities(s1, pi).status == IdentityReport::Status::pass);

    auto thresh = base_spec(PopulationModel::gaussian(1.0), SeqThreshSettings{}, pi, 2000, 22);
    const auto s2 = run_experiment(thresh);
    CHECK(verify_identities(s2, pi).status == IdentityReport::Status::pass);

    auto fixed =
        base_spec(PopulationModel::gaussian(1.0), NonAdaptiveSettings{19, 0.0}, pi, 1200, 23);
    const auto s3 = run_experiment(fixed);
    CHECK(verify_identities(s3, pi).status == IdentityReport::Status::pass);
    CHECK(s3.pe_hat <=
          delta / (1 + delta) + 3 * std::sqrt(s3.pe_hat * (1 - s3.pe_hat) / double(s3.trials)));

    // the rare-population coefficient lower-bounds all of them
    const double lb = lb_rare_coeff(delta, 2.0);  // d01 = 2 mu^2 = 2
    for (const auto* s : {&s1, &s2, &s3})
        CHECK(s->pi_mean_n >= lb * (1 - 3 * s->stderr_n / s->mean_n));

    // a stronger pair dominates the error budget with room to spare
    auto strong = base_spec(PopulationModel::gaussian(2.0), SsprtSettings{}, pi, 1000, 24);
    const auto s4 = run_experiment(strong);
    CHECK(s4.pe_hat <=
          delta / (1 + delta) + 3 * std::sqrt(s4.pe_hat * (1 - s4.pe_hat) / double(s4.trials)));
}

TEST_CASE("always-accept baseline satisfies the identities exactly") {
    auto spec =
        base_spec(PopulationModel::gaussian(1.0), NonAdaptiveSettings{1, -kInf}, 0.25, 800, 5);
    const auto s = run_experiment(spec);

    CHECK(s.mean_n == 1.0);
    CHECK(s.stderr_n == 0.0);
    CHECK(*s.alpha_hat == 1.0);  // every typical first population is declared
    CHECK(*s.beta_hat == 0.0);
    CHECK(*s.mean_n1 == 1.0);
    CHECK(s.visits0 + s.visits1 == s.trials);
    CHECK(s.pe_hat == double(s.visits0) / double(s.trials));

    const auto rep = verify_identities(s, spec.pi);
    CHECK(rep.status == IdentityReport::Status::pass);
    CHECK(rep.renewal_rhs == 1.0);  // 1 / (1*(1-pi) + pi*1)
    CHECK(rep.renewal_residual == 0.0);
    CHECK(rep.error_rhs == 0.75);
}

TEST_CASE("identity checks are inconclusive without per-population statistics") {
    MonteCarloSummary s;
    s.trials = 10;
    CHECK(verify_identities(s, 0.3).status == IdentityReport::Status::inconclusive);

    // a zero denominator cannot be scored either
    s.alpha_hat = 0.0;
    s.beta_hat = 1.0;
    s.mean_n1 = 2.0;
    s.visits0 = 5;
    s.visits1 = 5;
    CHECK(verify_identities(s, 0.3).status == IdentityReport::Status::inconclusive);

    // collection turned off produces the same verdict end to end
    auto spec = base_spec(PopulationModel::gaussian(1.0), SsprtSettings{}, 0.2, 50, 2);
    spec.collect_per_population = false;
    CHECK(verify_identities(run_experiment(spec), spec.pi).status ==
          IdentityReport::Status::inconclusive);

    // a single trial visits exactly one population, so one class is empty
    auto one = base_spec(PopulationModel::gaussian(1.0), NonAdaptiveSettings{1, -kInf}, 0.5, 1, 7);
    CHECK(verify_identities(run_experiment(one), one.pi).status ==
          IdentityReport::Status::inconclusive);
}

TEST_CASE("estimator noise shrinks like the square root of the trial count") {
    auto spec = base_spec(PopulationModel::gaussian(1.0), NonAdaptiveSettings{5, 0.0}, 0.3, 4000, 31);
    const auto small = run_experiment(spec);
    spec.trials = 8000;
    spec.master_seed = 32;
    const auto big = run_experiment(spec);

    const double ratio = small.stderr_n / big.stderr_n;
    CHECK(ratio > std::sqrt(2.0) * 0.85);
    CHECK(ratio < std::sqrt(2.0) * 1.15);

    spec.trials = 1;
    CHECK(run_experiment(spec).stderr_n == 0.0);
}

TEST_CASE("per-trial seed streams stay uncorrelated") {
    // Same (master seed, trial index) split as run_experiment; adjacent
    // trials' sample counts should show no lag-1 correlation.
    const auto model = PopulationModel::coin(0.25);
    const auto config = default_sprt_config(0.5, 1e-2, model, GammaLPolicy::paper);
    const int n = 10000;
    std::vector<double> counts(n);
    for (int t = 0; t < n; ++t) {
        Rng rng(777, std::uint64_t(t));
        BernoulliLabels labels(0.5);
        counts[t] = double(run_sprt(model, config, labels, rng).total_samples);
    }
    double mean = 0;
    for (double c : counts) mean += c;
    mean /= n;
    double cov = 0, var = 0;
    for (int t = 0; t < n; ++t) {
        var += (counts[t] - mean) * (counts[t] - mean);
        if (t + 1 < n) cov += (counts[t] - mean) * (counts[t + 1] - mean);
    }
    const double r = cov / var;
    CHECK(std::abs(r) <= 4.0 / std::sqrt(double(n - 1)));
}

TEST_CASE("sequential thresholding keeps pi times the mean sample count level") {
    // The round count grows as pi shrinks (14, 20, 27 here) yet pi E[N]
    // stays within a fixed band.
    CHECK(seq_thresh_params(1e-4).k_max == 27);

    const double grid[] = {1e-2, 1e-3, 1e-4};
    const std::uint64_t trials[] = {20000, 8000, 8000};
    double lo = kInf, hi = -kInf;
    for (int j = 0; j < 3; ++j) {
        auto spec = base_spec(PopulationModel::gaussian(1.0), SeqThreshSettings{}, grid[j],
                              trials[j], 101);
        const auto s = run_experiment(spec);
        lo = std::min(lo, s.pi_mean_n);
        hi = std::max(hi, s.pi_mean_n);
    }
    CHECK(hi / lo < 1.25);
}

TEST_CASE("sweep pairs simulation with bounds on a mu grid") {
    auto base = base_spec(PopulationModel::gaussian(1.0), SsprtSettings{}, 1e-3, 1000, 5);
    const std::vector<double> grid{0.5, 1.0, 2.0};
    const auto pts = sweep(SweepAxis::mu, grid, base);
    REQUIRE(pts.size() == 3);

    for (std::size_t j = 0; j < pts.size(); ++j) {
        const auto& pt = pts[j];
        CHECK(pt.value == grid[j]);
        CHECK(pt.error.empty());
        REQUIRE(pt.summary.has_value());
        REQUIRE(pt.bounds.has_value());
        // the rare-population lower bound holds at every grid point
        CHECK(pt.summary->pi_mean_n >=
              pt.bounds->lb_rare_coeff * (1 - 3 * pt.summary->stderr_n / pt.summary->mean_n));
    }

    // bounds are evaluated at the grid point's own parameters
    const auto model1 = PopulationModel::gaussian(1.0);
    const auto direct = evaluate_bounds(1e-3, 1e-2, model1, paper_gamma_l(model1));
    CHECK(pts[1].bounds->lb_any == direct.lb_any);
    REQUIRE(pts[1].bounds->ub_ssprt.has_value());
    CHECK(*pts[1].bounds->ub_ssprt == *direct.ub_ssprt);

    // per-point seeds split deterministically from the base seed
    auto point1 = base;
    point1.model = model1;
    point1.master_seed = mix_seed(base.master_seed, 1);
    const auto replay = run_experiment(point1);
    CHECK(replay.mean_n == pts[1].summary->mean_n);
    CHECK(replay.error_count == pts[1].summary->error_count);
}

TEST_CASE("sweep records bad points and keeps going") {
    auto base = base_spec(PopulationModel::gaussian(1.0), SsprtSettings{}, 1e-2, 300, 8);

    const auto pts = sweep(SweepAxis::b, {0.25, 0.6, 0.4}, base);
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].error.empty());
    CHECK(pts[0].summary.has_value());
    CHECK(pts[0].bounds->coin_ub.has_value());  // the model axis swaps families
    CHECK(!pts[1].error.empty());  // b = 0.6 is not a coin bias
    CHECK(!pts[1].summary.has_value());
    CHECK(!pts[1].bounds.has_value());
    CHECK(pts[1].value == 0.6);
    CHECK(pts[2].error.empty());
    CHECK(pts[2].summary.has_value());

    const auto bad_pi = sweep(SweepAxis::pi, {1e-2, 0.7}, base);
    CHECK(bad_pi[0].error.empty());
    CHECK(!bad_pi[1].error.empty());

    // exact overshoot never applies on a gaussian axis; each point reports it
    auto exact = base;
    exact.procedure = SsprtSettings{GammaLPolicy::paper, 0.0, true};
    const auto no_fit = sweep(SweepAxis::mu, {1.0}, exact);
    CHECK(!no_fit[0].error.empty());
    CHECK(!no_fit[0].summary.has_value());

    CHECK_THROWS_AS(sweep(SweepAxis::mu, {}, base), std::invalid_argument);

    // repeated grid values draw fresh per-point seeds
    const auto twice = sweep(SweepAxis::b, {0.25, 0.25}, base);
    CHECK(twice[0].summary->mean_n != twice[1].summary->mean_n);
}

TEST_CASE("sweep bound columns follow the procedure's threshold policy") {
    // cusum runs have gamma_L = 1, outside the Theorem-2 constants' domain
    auto cusum = base_spec(PopulationModel::gaussian(1.0), SsprtSettings{GammaLPolicy::cusum},
                           1e-2, 200, 12);
    const auto pts = sweep(SweepAxis::mu, {1.0}, cusum);
    REQUIRE(pts[0].bounds.has_value());
    CHECK(!pts[0].bounds->gamma_l.has_value());
    CHECK(!pts[0].bounds->ub_ssprt.has_value());
    CHECK(pts[0].bounds->lb_any > 0);
    CHECK(pts[0].summary.has_value());

    // non-sprt procedures still tabulate the stock-policy sprt bound
    auto thresh = base_spec(PopulationModel::gaussian(1.0), SeqThreshSettings{}, 1e-2, 200, 13);
    const auto tp = sweep(SweepAxis::mu, {1.0}, thresh);
    REQUIRE(tp[0].bounds.has_value());
    CHECK(tp[0].bounds->gamma_l == paper_gamma_l(PopulationModel::gaussian(1.0)));
    CHECK(tp[0].bounds->ub_ssprt.has_value());
}
