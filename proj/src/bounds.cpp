#include "qsearch/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qsearch/procedures.hpp"

namespace qsearch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pi(double pi) {
    if (!(pi > 0) || !(pi <= 0.5)) throw std::domain_error("pi must be in (0, 1/2]");
}

void check_delta(double delta, bool allow_zero) {
    const bool ok = (allow_zero ? delta >= 0 : delta > 0) && delta <= 0.5;
    if (!ok) throw std::domain_error("delta out of range");
}
}  // namespace

double lb_any(double pi, double delta, double d01, double d10) {
    check_pi(pi);
    check_delta(delta, true);
    if (!(d01 > 0) || !(d10 > 0)) throw std::domain_error("divergences must be positive");
    const double first =
        (1 - pi) / pi * ((1 - delta) * (1 - delta) / (1 + delta)) * std::max(1.0, 1 / d01);
    if (std::isinf(d10)) return first;  // middle and last terms vanish in the limit
    const double ratio = std::isinf(d01) ? 0.0 : d10 / d01;
    const double middle = std::log(1 / (2 * pi * delta)) / d10 * ((1 - delta * ratio) / (1 + delta));
    return first + middle - 1 / d10;
}

double lb_any_simplified(double pi, double delta, double d) {
    check_pi(pi);
    check_delta(delta, false);
    if (!(d > 0)) throw std::domain_error("divergence must be positive");
    return (1 / d) * (1 / (12 * pi) + std::log(1 / (2 * pi * delta)) / 3 - 1);
}

double lb_rare_coeff(double delta, double d01) {
    check_delta(delta, false);
    if (!(d01 > 0)) throw std::domain_error("divergence must be positive");
    return (1 - delta) * (1 - delta) / (1 + delta) * std::max(1 / d01, 1.0);
}

SsprtBound ub_ssprt(double pi, double delta, const PopulationModel& model, double gamma_l,
                    bool exact_overshoot) {
    check_pi(pi);
    check_delta(delta, false);
    if (exact_overshoot && model.kind() != ModelKind::coin_pair)
        throw std::invalid_argument("exact-overshoot constants exist only for coin models");
    const auto [d01, d10] = model.kl_divergences();

    SsprtBound r{};
    if (model.kind() == ModelKind::coin_pair && std::isinf(d01)) {
        // Degenerate coin: the general expression is inf/inf. Only the stock
        // policy gamma_L = (1-2b)/(1+2b) = 0 makes sense; use the reduced
        // forms, which are exact for every b and finite here.
        if (gamma_l != 0)
            throw std::domain_error("b = 1/2 requires the policy threshold gamma_L = 0");
        const double b = model.b();
        r.c1prime = r.c2prime = exact_overshoot ? 0.0 : kInf;
        r.c1 = (1 + 2 * b) / ((exact_overshoot ? 8 : 4) * b * b);
        r.c2 = exact_overshoot ? 0.0 : 1 / (2 * b);
        r.bound = r.c1 / pi + r.c2;  // the log term is 0 against an infinite divergence
        return r;
    }

    if (!(gamma_l > 0) || !(gamma_l < 1)) throw std::domain_error("gamma_L must lie in (0,1)");
    auto [c1p, c2p] = model.overshoot_constants();
    if (exact_overshoot) c1p = c2p = 0;
    r.c1prime = c1p;
    r.c2prime = c2p;
    r.c1 = (c1p + std::log(1 / gamma_l)) / ((1 - gamma_l) * d01);
    r.c2 = c2p / d10;
    r.bound = r.c1 / pi + std::log(1 / (pi * delta)) / d10 + r.c2;
    return r;
}

CoinBound coin_bounds(double pi, double delta, double b) {
    check_pi(pi);
    check_delta(delta, false);
    if (!(b > 0) || !(b <= 0.5)) throw std::domain_error("b must be in (0, 1/2]");
    CoinBound r{};
    r.ub = 1 / (2 * b * b) * (1 / pi + std::log(1 / (pi * delta)) + 1);
    r.c1_refined = (1 + 2 * b) / (8 * b * b);
    return r;
}

double lb_nonadaptive(double pi, double delta, double d10) {
    check_pi(pi);
    check_delta(delta, false);
    if (!(d10 > 0)) throw std::domain_error("divergence must be positive");
    return (std::log(1 / (2 * delta * pi)) - 1) / (pi * (1 + delta) * d10);
}

SeqThreshParams seq_thresh_params(double pi) {
    check_pi(pi);
    SeqThreshParams p{};
    const int raw = static_cast<int>(std::ceil(2 * std::log2((1 - pi) / pi)));
    p.clamped = raw < 1;
    p.k_max = p.clamped ? 1 : raw;
    p.alpha = std::pow(0.5, p.k_max);
    const double guarantee = (pi / (1 - pi)) * (pi / (1 - pi));
    if (!p.clamped && p.alpha > guarantee * (1 + 1e-12))
        throw std::logic_error("alpha exceeded its pi^2/(1-pi)^2 guarantee");
    return p;
}

BoundsReport evaluate_bounds(double pi, double delta, const PopulationModel& model,
                             std::optional<double> gamma_l, bool exact_overshoot) {
    BoundsReport rep;
    rep.pi = pi;
    rep.delta = delta;
    const auto [d01, d10] = model.kl_divergences();
    rep.d01 = d01;
    rep.d10 = d10;

    rep.lb_any = lb_any(pi, delta, d01, d10);
    // symmetric pairs: the two divergences may differ by summation-order ulps
    // (e.g. a mirrored generic table), so compare with a relative tolerance
    if (std::isfinite(d01) && std::abs(d01 - d10) <= 1e-12 * std::max(d01, d10))
        rep.lb_any_simplified = lb_any_simplified(pi, delta, 0.5 * (d01 + d10));
    rep.lb_rare_coeff = lb_rare_coeff(delta, d01);
    rep.lb_nonadaptive = lb_nonadaptive(pi, delta, d10);  // 0 for infinite divergence

    rep.gamma_l = gamma_l;
    if (gamma_l && model.kind() != ModelKind::generic_pair) {
        const auto ub = ub_ssprt(pi, delta, model, *gamma_l, exact_overshoot);
        rep.ub_ssprt = ub.bound;
        rep.c1 = ub.c1;
        rep.c2 = ub.c2;
        rep.c1prime = ub.c1prime;
        rep.c2prime = ub.c2prime;
    }
    if (model.kind() == ModelKind::coin_pair) {
        const auto cb = coin_bounds(pi, delta, model.b());
        rep.coin_ub = cb.ub;
        rep.coin_c1_refined = cb.c1_refined;
    }
    rep.vacuous_lower_bound = rep.lb_any < 0 || rep.lb_nonadaptive < 0 ||
                              (rep.lb_any_simplified && *rep.lb_any_simplified < 0);
    return rep;
}

}  // namespace qsearch
