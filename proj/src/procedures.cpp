#include "qsearch/procedures.hpp"

#include <cmath>
#include <limits>

namespace qsearch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Saturating accumulation: an infinite running sum absorbs further terms, so
// the degenerate coin's +-inf log-LRs never produce inf - inf = NaN.
inline double sat_add(double acc, double step) { return std::isinf(acc) ? acc : acc + step; }

inline void bump(std::uint64_t& total) {
    if (++total > kTrialSampleCap)
        throw NonTerminationError("trial exceeded the 1e9 sample cap; check the configuration");
}

// Coin walks must tie their boundaries exactly, but accumulated +-step sums
// are path-dependent at the ulp level (seven added steps need not equal
// 7 * step). So coins walk on the integer net-heads lattice against integer
// boundaries; thresholds within 1e-9 steps of a lattice point snap onto it.
// Other models accumulate the log-LR directly. The degenerate coin keeps the
// direct path: its +-inf increments saturate correctly.
struct SprtDomain {
    double low, up;        // thresholds in walk units
    bool lattice = false;  // walk on integer net-heads counts
    double step = 0;       // log-LR of one heads when lattice
};

SprtDomain sprt_domain(const PopulationModel& model, const SprtConfig& c) {
    SprtDomain d{c.log_gamma_l, c.log_gamma_u};
    if (model.kind() != ModelKind::coin_pair) return d;
    const double step = model.log_lr(1.0);
    if (std::isinf(step)) return d;
    d.lattice = true;
    d.step = step;
    d.low = std::isinf(c.log_gamma_l) ? c.log_gamma_l : std::floor(c.log_gamma_l / step + 1e-9);
    d.up = std::ceil(c.log_gamma_u / step - 1e-9);
    return d;
}

inline double walk_increment(const SprtDomain& d, const PopulationModel& model, double y) {
    if (!d.lattice) return model.log_lr(y);
    return y == 1.0 ? 1.0 : -1.0;
}

inline double walk_log_lr(const SprtDomain& d, double position) {
    return d.lattice ? position * d.step : position;
}
}  // namespace

void validate(const SprtConfig& c) {
    if (std::isnan(c.log_gamma_l) || std::isnan(c.log_gamma_u))
        throw std::invalid_argument("sprt thresholds must not be NaN");
    if (!(c.log_gamma_l <= 0))
        throw std::invalid_argument("sprt lower threshold needs gamma_L <= 1");
    if (!(c.log_gamma_u > 0)) throw std::invalid_argument("sprt upper threshold needs gamma_U > 1");
}

void validate(const SeqThreshConfig& c) {
    if (c.k_max < 1) throw std::invalid_argument("k_max must be >= 1");
}

void validate(const NonAdaptiveConfig& c) {
    if (c.n0 < 1) throw std::invalid_argument("N0 must be >= 1");
    if (std::isnan(c.tau)) throw std::invalid_argument("tau must not be NaN");
}

double paper_gamma_l(const PopulationModel& model) {
    switch (model.kind()) {
        case ModelKind::gaussian_pair: {
            const double mu = model.mu();
            if (mu > 1) return 1 / mu;
            if (mu < 1) return 1 - std::sqrt(mu);
            return 0.5;  // both branches degenerate at mu = 1; stay inside (0,1)
        }
        case ModelKind::coin_pair:
            return (1 - 2 * model.b()) / (1 + 2 * model.b());
        case ModelKind::generic_pair:
            throw std::invalid_argument(
                "no stock gamma_L policy for generic models; pass an explicit value");
    }
    return 0.5;
}

SprtConfig default_sprt_config(double pi, double delta, const PopulationModel& model,
                               GammaLPolicy policy, double gamma_l_value, bool exact_overshoot) {
    if (!(pi > 0) || !(pi <= 0.5)) throw std::invalid_argument("pi must be in (0, 1/2]");
    if (!(delta > 0) || !(delta <= 0.5)) throw std::invalid_argument("delta must be in (0, 1/2]");

    double log_gamma_l = 0;
    switch (policy) {
        case GammaLPolicy::paper:
            // For coins, take -log_lr(heads) verbatim: the walk must be able
            // to tie the lower boundary exactly after one tails, which
            // log((1-2b)/(1+2b)) does not guarantee at 1-ulp accuracy.
            if (model.kind() == ModelKind::coin_pair)
                log_gamma_l = -model.log_lr(1.0);
            else
                log_gamma_l = std::log(paper_gamma_l(model));
            break;
        case GammaLPolicy::cusum:
            log_gamma_l = 0;
            break;
        case GammaLPolicy::value:
            if (!(gamma_l_value > 0) || !(gamma_l_value < 1))
                throw std::invalid_argument("explicit gamma_L must lie in (0,1)");
            log_gamma_l = std::log(gamma_l_value);
            break;
    }

    double log_gamma_u = std::log((1 - pi) / (pi * delta));
    if (exact_overshoot) {
        if (model.kind() != ModelKind::coin_pair)
            throw std::invalid_argument("exact-overshoot thresholds exist only for coin models");
        const double step = model.log_lr(1.0);  // per-heads log-LR
        if (std::isinf(step)) {
            log_gamma_u = kInf;  // degenerate coin: only Lambda = +inf terminates
        } else {
            log_gamma_u = std::ceil(log_gamma_u / step) * step;
        }
    }
    SprtConfig cfg{log_gamma_l, log_gamma_u};
    validate(cfg);
    return cfg;
}

int default_k_max(double pi) {
    if (!(pi > 0) || !(pi <= 0.5)) throw std::invalid_argument("pi must be in (0, 1/2]");
    const int k = static_cast<int>(std::ceil(2 * std::log2((1 - pi) / pi)));
    return k < 1 ? 1 : k;
}

TrialOutcome run_sprt(const PopulationModel& model, const SprtConfig& config, LabelSource& labels,
                      Rng& rng) {
    validate(config);
    const SprtDomain dom = sprt_domain(model, config);
    TrialOutcome out;
    for (;;) {
        const int label = labels.next_label(rng);
        double position = 0;
        std::uint32_t n = 0;
        bool abandoned = false;
        while (position < dom.up) {
            const double y = model.sample(label, rng);
            ++n;
            bump(out.total_samples);
            position = sat_add(position, walk_increment(dom, model, y));
            if (position <= dom.low) {
                abandoned = true;
                break;
            }
        }
        out.per_population_samples.push_back(n);
        out.per_population_labels.push_back(static_cast<std::uint8_t>(label));
        if (!abandoned) {
            out.returned_index = out.per_population_samples.size();
            out.returned_label = label;
            return out;
        }
    }
}

TrialOutcome run_seq_thresh(const PopulationModel& model, const SeqThreshConfig& config,
                            LabelSource& labels, Rng& rng) {
    validate(config);
    // Generic round statistics are fp sums whose exact value is path-order
    // dependent at the ulp level; widen ties by the threshold merge grid so
    // an intended tie always abandons. Coin statistics are integer counts
    // and gaussian ties have measure zero, so those stay exact.
    const double tie = model.kind() == ModelKind::generic_pair ? 1e-9 : 0.0;
    std::vector<double> thresholds(static_cast<std::size_t>(config.k_max));
    for (int k = 1; k <= config.k_max; ++k)
        thresholds[static_cast<std::size_t>(k - 1)] = model.round_threshold(k) + tie;

    TrialOutcome out;
    for (;;) {
        const int label = labels.next_label(rng);
        std::uint32_t n = 0;
        bool abandoned = false;
        for (int k = 1; k <= config.k_max && !abandoned; ++k) {
            double stat = 0;  // round statistic over k fresh samples
            for (int j = 0; j < k; ++j) {
                const double y = model.sample(label, rng);
                ++n;
                bump(out.total_samples);
                stat = sat_add(stat, model.statistic_increment(y));
            }
            abandoned = stat <= thresholds[static_cast<std::size_t>(k - 1)];
        }
        out.per_population_samples.push_back(n);
        out.per_population_labels.push_back(static_cast<std::uint8_t>(label));
        if (!abandoned) {
            out.returned_index = out.per_population_samples.size();
            out.returned_label = label;
            return out;
        }
    }
}

TrialOutcome run_nonadaptive(const PopulationModel& model, const NonAdaptiveConfig& config,
                             LabelSource& labels, Rng& rng) {
    validate(config);
    TrialOutcome out;
    for (;;) {
        const int label = labels.next_label(rng);
        double llr_sum = 0;
        for (std::int64_t j = 0; j < config.n0; ++j) {
            const double y = model.sample(label, rng);
            bump(out.total_samples);
            llr_sum = sat_add(llr_sum, model.log_lr(y));
        }
        out.per_population_samples.push_back(static_cast<std::uint32_t>(config.n0));
        out.per_population_labels.push_back(static_cast<std::uint8_t>(label));
        if (llr_sum >= config.tau) {
            out.returned_index = out.per_population_samples.size();
            out.returned_label = label;
            return out;
        }
    }
}

SprtSingleResult run_sprt_single(const PopulationModel& model, const SprtConfig& config, int label,
                                 Rng& rng) {
    validate(config);
    const SprtDomain dom = sprt_domain(model, config);
    SprtSingleResult r;
    double position = 0;
    std::uint64_t guard = 0;
    while (position < dom.up) {
        const double y = model.sample(label, rng);
        ++r.samples;
        bump(guard);
        position = sat_add(position, walk_increment(dom, model, y));
        if (position <= dom.low) {
            r.terminal_log_lr = walk_log_lr(dom, position);
            return r;
        }
    }
    r.terminated = true;
    r.terminal_log_lr = walk_log_lr(dom, position);
    return r;
}

}  // namespace qsearch
