#pragma once

#include <optional>

#include "qsearch/models.hpp"

namespace qsearch {

// Closed-form sample-complexity bounds and their constants, as pure
// functions. Divergence arguments follow the convention d01 = D(P0||P1)
// (cost of dismissing a typical population) and d10 = D(P1||P0) (cost of
// confirming the atypical one). Vacuous (negative) lower bounds are
// returned unchanged; callers decide how to present them.

// Lower bound on E[total samples] for any procedure with P_e <= delta/(1+delta).
// delta = 0 is accepted and yields +inf in the middle term.
double lb_any(double pi, double delta, double d01, double d10);

// Simplified variant assuming d01 = d10 = d.
double lb_any_simplified(double pi, double delta, double d);

// Small-pi coefficient: lim inf pi E[N] >= this.
double lb_rare_coeff(double delta, double d01);

struct SsprtBound {
    double bound;  // E[N] <= c1/pi + log(1/(pi delta))/d10 + c2
    double c1;
    double c2;
    double c1prime;
    double c2prime;
};

// Expected-sample upper bound for the series-of-SPRTs procedure at the given
// lower threshold. exact_overshoot (coins only) zeroes both overshoot terms,
// valid when the upper threshold is an integer multiple of the per-flip
// log-LR; at b = 1/2 only the stock coin policy gamma_L = (1-2b)/(1+2b) = 0
// is meaningful and the algebraically reduced constants are used.
SsprtBound ub_ssprt(double pi, double delta, const PopulationModel& model, double gamma_l,
                    bool exact_overshoot = false);

struct CoinBound {
    double ub;          // (1/(2b^2)) (1/pi + log(1/(pi delta)) + 1)
    double c1_refined;  // (1+2b)/(8b^2), exact-overshoot thresholds
};

CoinBound coin_bounds(double pi, double delta, double b);

// Lower bound on E[N] for fixed-sample-size (non-adaptive) testing.
double lb_nonadaptive(double pi, double delta, double d10);

struct SeqThreshParams {
    int k_max;
    double alpha;  // (1/2)^k_max, per-population false-alarm probability
    bool clamped;  // k_max was raised to 1 (degenerate large-pi regime)
};

// Round count and false-alarm rate for sequential thresholding; checks the
// alpha <= pi^2/(1-pi)^2 guarantee (it can only fail when clamped).
SeqThreshParams seq_thresh_params(double pi);

// Everything above evaluated at one operating point. Fields that do not
// apply (overshoot constants for generic pairs, coin bounds for non-coins,
// the simplified bound when d01 != d10, SPRT constants when no gamma_L in
// (0,1) is supplied, e.g. for a gamma_L = 1 run) are absent.
struct BoundsReport {
    double pi = 0, delta = 0;
    double d01 = 0, d10 = 0;
    std::optional<double> gamma_l;
    double lb_any = 0;
    std::optional<double> lb_any_simplified;
    double lb_rare_coeff = 0;
    std::optional<double> ub_ssprt;
    std::optional<double> c1, c1prime, c2, c2prime;
    double lb_nonadaptive = 0;
    std::optional<double> coin_ub, coin_c1_refined;
    bool vacuous_lower_bound = false;  // some lower bound came out negative
};

BoundsReport evaluate_bounds(double pi, double delta, const PopulationModel& model,
                             std::optional<double> gamma_l = std::nullopt,
                             bool exact_overshoot = false);

}  // namespace qsearch
