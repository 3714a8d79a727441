#include "qsearch/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace qsearch {

namespace {

// Concrete per-run configuration, derived once per experiment.
using RunConfig = std::variant<SprtConfig, SeqThreshConfig, NonAdaptiveConfig>;

RunConfig materialize(const ExperimentSpec& spec) {
    if (const auto* s = std::get_if<SsprtSettings>(&spec.procedure))
        return default_sprt_config(spec.pi, spec.delta, spec.model, s->policy, s->gamma_l_value,
                                   s->exact_overshoot);
    if (const auto* s = std::get_if<SeqThreshSettings>(&spec.procedure)) {
        SeqThreshConfig cfg{s->k_max_override ? *s->k_max_override : default_k_max(spec.pi)};
        validate(cfg);
        return cfg;
    }
    const auto& s = std::get<NonAdaptiveSettings>(spec.procedure);
    NonAdaptiveConfig cfg{s.n0, s.tau};
    validate(cfg);
    return cfg;
}

// What one trial contributes to the pooled statistics.
struct TrialStats {
    std::uint64_t total = 0;
    std::uint64_t visits = 0;
    std::uint64_t visits1 = 0;
    std::uint64_t abandoned1 = 0;
    double sum_nsq = 0;
    bool error = false;
};

TrialStats reduce_outcome(const TrialOutcome& t) {
    TrialStats s;
    s.total = t.total_samples;
    s.visits = t.per_population_samples.size();
    for (std::size_t i = 0; i < s.visits; ++i) {
        const double n = t.per_population_samples[i];
        s.sum_nsq += n * n;
        if (t.per_population_labels[i]) ++s.visits1;
    }
    s.error = t.returned_label == 0;
    // every visited atypical population except a terminal one was abandoned
    s.abandoned1 = s.visits1 - (t.returned_label == 1 ? 1 : 0);
    return s;
}

// Exact binomial tail P(X >= k) for X ~ Binomial(n, p), summed over the
// shorter side via log-pmf; used only with small k or small n-k.
double binom_tail_ge(std::uint64_t n, std::uint64_t k, double p) {
    if (k == 0) return 1;
    if (k > n) return 0;
    if (p <= 0) return 0;
    if (p >= 1) return 1;
    const double lp = std::log(p), lq = std::log1p(-p);
    auto log_pmf = [&](std::uint64_t j) {
        return std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(j) + 1) -
               std::lgamma(static_cast<double>(n - j) + 1) + static_cast<double>(j) * lp +
               static_cast<double>(n - j) * lq;
    };
    double acc = 0;
    if (k <= n - k + 1) {  // complement side is shorter or equal
        for (std::uint64_t j = 0; j < k; ++j) acc += std::exp(log_pmf(j));
        return acc > 1 ? 0 : 1 - acc;
    }
    for (std::uint64_t j = k; j <= n; ++j) acc += std::exp(log_pmf(j));
    return acc;
}

double invert_tail(std::uint64_t n, std::uint64_t k, double target, bool lower) {
    // lower: solve P(X >= k | p) = target (increasing in p);
    // upper: solve P(X <= k | p) = target (decreasing in p)
    double lo = 0, hi = 1;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f =
            lower ? binom_tail_ge(n, k, mid) : 1 - binom_tail_ge(n, k + 1, mid);
        const bool go_right = lower ? f < target : f > target;
        (go_right ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

Interval binomial_ci95(std::uint64_t successes, std::uint64_t n) {
    if (n == 0) return {0, 1};
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    if (successes >= 5 && n - successes >= 5) {
        const double half =
            1.959963984540054 * std::sqrt(p * (1 - p) / static_cast<double>(n)) +
            0.5 / static_cast<double>(n);
        return {std::max(0.0, p - half), std::min(1.0, p + half)};
    }
    Interval ci;
    ci.lo = successes == 0 ? 0.0 : invert_tail(n, successes, 0.025, true);
    ci.hi = successes == n ? 1.0 : invert_tail(n, successes, 0.025, false);
    return ci;
}

const char* procedure_name(const ProcedureSettings& p) {
    if (std::holds_alternative<SsprtSettings>(p)) return "ssprt";
    if (std::holds_alternative<SeqThreshSettings>(p)) return "seqthresh";
    return "nonadaptive";
}

MonteCarloSummary run_experiment(const ExperimentSpec& spec) {
    if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (!(spec.pi > 0) || !(spec.pi <= 0.5)) throw std::invalid_argument("pi must be in (0, 1/2]");
    const RunConfig config = materialize(spec);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TrialStats> records(spec.trials);
    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        try {
            for (;;) {
                const std::uint64_t t = next.fetch_add(1);
                if (t >= spec.trials || failed.load()) break;
                Rng rng(spec.master_seed, t);
                BernoulliLabels labels(spec.pi);
                TrialOutcome outcome;
                if (const auto* c = std::get_if<SprtConfig>(&config))
                    outcome = run_sprt(spec.model, *c, labels, rng);
                else if (const auto* c = std::get_if<SeqThreshConfig>(&config))
                    outcome = run_seq_thresh(spec.model, *c, labels, rng);
                else
                    outcome = run_nonadaptive(spec.model, std::get<NonAdaptiveConfig>(config),
                                              labels, rng);
                records[t] = reduce_outcome(outcome);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            failed.store(true);
        }
    };

    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(static_cast<unsigned>(spec.threads),
                                        static_cast<unsigned>(spec.trials)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Fixed-order reduction: the summary is identical for any thread count.
    MonteCarloSummary s;
    s.trials = spec.trials;
    double sum_n = 0, sum_n_sq = 0, sum_visit_nsq = 0;
    std::uint64_t visits = 0;
    for (const auto& r : records) {
        sum_n += static_cast<double>(r.total);
        sum_n_sq += static_cast<double>(r.total) * static_cast<double>(r.total);
        visits += r.visits;
        s.visits1 += r.visits1;
        s.abandoned1 += r.abandoned1;
        sum_visit_nsq += r.sum_nsq;
        if (r.error) ++s.error_count;
    }
    s.visits0 = visits - s.visits1;
    const double nt = static_cast<double>(spec.trials);
    s.mean_n = sum_n / nt;
    if (spec.trials > 1) {
        const double var = std::max(0.0, (sum_n_sq - nt * s.mean_n * s.mean_n) / (nt - 1));
        s.stderr_n = std::sqrt(var / nt);
    }
    s.pi_mean_n = spec.pi * s.mean_n;
    s.pe_hat = static_cast<double>(s.error_count) / nt;
    s.pe_ci95 = binomial_ci95(s.error_count, spec.trials);
    if (spec.collect_per_population && visits > 0) {
        s.mean_n1 = sum_n / static_cast<double>(visits);
        if (visits > 1)
            s.var_n1 = std::max(
                0.0, (sum_visit_nsq - static_cast<double>(visits) * *s.mean_n1 * *s.mean_n1) /
                         (static_cast<double>(visits) - 1));
        if (s.visits0 > 0)
            s.alpha_hat = static_cast<double>(s.error_count) / static_cast<double>(s.visits0);
        if (s.visits1 > 0)
            s.beta_hat = static_cast<double>(s.abandoned1) / static_cast<double>(s.visits1);
    }
    s.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

IdentityReport verify_identities(const MonteCarloSummary& s, double pi) {
    IdentityReport rep;
    if (!s.alpha_hat || !s.beta_hat || !s.mean_n1) return rep;  // inconclusive
    const double a = *s.alpha_hat, b = *s.beta_hat, m1 = *s.mean_n1;
    const double d = a * (1 - pi) + pi * (1 - b);
    if (!(d > 0)) return rep;

    const double var_a = a * (1 - a) / static_cast<double>(s.visits0);
    const double var_b = s.visits1 > 0 ? b * (1 - b) / static_cast<double>(s.visits1) : 0.0;
    const double var_m1 =
        s.var_n1 / static_cast<double>(s.visits0 + s.visits1);

    rep.renewal_lhs = s.mean_n;
    rep.renewal_rhs = m1 / d;
    rep.renewal_residual = std::abs(rep.renewal_lhs - rep.renewal_rhs);
    const double var_rhs_n =
        var_m1 / (d * d) + (m1 / (d * d)) * (m1 / (d * d)) *
                               ((1 - pi) * (1 - pi) * var_a + pi * pi * var_b);
    rep.renewal_stderr = std::sqrt(s.stderr_n * s.stderr_n + var_rhs_n);

    rep.error_lhs = s.pe_hat;
    rep.error_rhs = a * (1 - pi) / d;
    rep.error_residual = std::abs(rep.error_lhs - rep.error_rhs);
    const double var_pe = s.pe_hat * (1 - s.pe_hat) / static_cast<double>(s.trials);
    const double da = (1 - pi) * (pi * (1 - b)) / (d * d);  // dP/dalpha
    const double db = pi * (a * (1 - pi)) / (d * d);        // dP/dbeta
    rep.error_stderr = std::sqrt(var_pe + da * da * var_a + db * db * var_b);

    const bool renewal_ok = rep.renewal_residual <= 4 * rep.renewal_stderr ||
                            rep.renewal_residual == 0;
    const bool error_ok = rep.error_residual <= 4 * rep.error_stderr || rep.error_residual == 0;
    rep.status = renewal_ok && error_ok ? IdentityReport::Status::pass
                                        : IdentityReport::Status::fail;
    return rep;
}

std::vector<SweepPoint> sweep(SweepAxis axis, const std::vector<double>& grid,
                              const ExperimentSpec& base) {
    if (grid.empty()) throw std::invalid_argument("sweep grid must be nonempty");
    std::vector<SweepPoint> points;
    points.reserve(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        SweepPoint pt;
        pt.value = grid[j];
        try {
            ExperimentSpec spec = base;
            switch (axis) {
                case SweepAxis::mu:
                    spec.model = PopulationModel::gaussian(grid[j]);
                    break;
                case SweepAxis::b:
                    spec.model = PopulationModel::coin(grid[j]);
                    break;
                case SweepAxis::pi:
                    spec.pi = grid[j];
                    break;
                case SweepAxis::delta:
                    spec.delta = grid[j];
                    break;
            }
            spec.master_seed = mix_seed(base.master_seed, j);

            std::optional<double> gamma_l;
            bool exact = false;
            if (const auto* s = std::get_if<SsprtSettings>(&spec.procedure)) {
                exact = s->exact_overshoot;
                if (s->policy == GammaLPolicy::value)
                    gamma_l = s->gamma_l_value;
                else if (s->policy == GammaLPolicy::paper &&
                         spec.model.kind() != ModelKind::generic_pair)
                    gamma_l = paper_gamma_l(spec.model);
                // cusum: no Theorem-2 constant at gamma_L = 1; leave absent
            } else if (spec.model.kind() != ModelKind::generic_pair) {
                gamma_l = paper_gamma_l(spec.model);
            }
            pt.bounds = evaluate_bounds(spec.pi, spec.delta, spec.model, gamma_l, exact);
            pt.summary = run_experiment(spec);
        } catch (const std::exception& e) {
            pt.error = e.what();
            pt.summary.reset();
            pt.bounds.reset();
        }
        points.push_back(std::move(pt));
    }
    return points;
}

}  // namespace qsearch
