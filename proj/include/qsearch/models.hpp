#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qsearch/rng.hpp"

namespace qsearch {

// A two-hypothesis population model: observations follow P0 (typical
// population) or P1 (atypical). Three kinds are supported:
//   gaussian_pair: P0 = Normal(-mu, 1), P1 = Normal(+mu, 1), mu > 0
//   coin_pair:     P0 = heads prob 1/2 - b, P1 = heads prob 1/2 + b, b in (0, 1/2]
//   generic_pair:  two probability tables over a shared finite alphabet
//
// Observation encoding: gaussians are real-valued; coins report heads as 1.0
// and tails as 0.0; generic models report the outcome index as a double.
enum class ModelKind { gaussian_pair, coin_pair, generic_pair };

class PopulationModel {
  public:
    static PopulationModel gaussian(double mu);
    static PopulationModel coin(double b);
    // Tables must have equal length, each sum to 1 within 1e-12, and have
    // identical supports (p0[i] > 0 iff p1[i] > 0). Entries that are zero in
    // both are legal padding and count as outside both supports.
    static PopulationModel generic(std::vector<double> p0, std::vector<double> p1);

    ModelKind kind() const { return kind_; }
    double mu() const { return mu_; }
    double b() const { return b_; }
    const std::vector<double>& p0() const { return p0_; }
    const std::vector<double>& p1() const { return p1_; }

    // One observation from P0 (label 0) or P1 (label 1).
    double sample(int label, Rng& rng) const;

    // log(P1(y)/P0(y)) as an extended real; the degenerate coin (b = 1/2)
    // maps heads to +inf and tails to -inf. Generic models reject
    // observations outside both supports.
    double log_lr(double y) const;

    // (D(P0||P1), D(P1||P0)); +inf for the degenerate coin.
    std::pair<double, double> kl_divergences() const;

    // Per-round abandonment threshold gamma_k for the round statistic over k
    // samples: the smallest threshold with P0(T_k > gamma_k) <= 1/2. Exactly
    // the P0 median for gaussians; smallest integer heads count for coins;
    // smallest support point of the exact k-fold log-LR sum for generic
    // models (computed by convolution over the alphabet).
    double round_threshold(std::int64_t k) const;

    // Contribution of one observation to the round statistic: the sample
    // itself for gaussians, the heads indicator for coins, log_lr for
    // generic models.
    double statistic_increment(double y) const;

    // (C1prime, C2prime): upper bounds on the expected log-LR overshoot at
    // the stopping boundaries, equal by symmetry for the two named models.
    // Unsupported for generic models.
    std::pair<double, double> overshoot_constants() const;

    // Spec string, e.g. "gaussian:mu=2" or "coin:b=0.25"; echoed in CSV rows.
    std::string describe() const;

  private:
    PopulationModel() = default;
    ModelKind kind_ = ModelKind::gaussian_pair;
    double mu_ = 0, b_ = 0;
    double llr_heads_ = 0;                 // coin: log((1+2b)/(1-2b))
    std::vector<double> p0_, p1_;          // generic tables
    std::vector<double> cdf0_, cdf1_;      // generic sampling
    std::vector<double> llr_;              // generic per-outcome log-LR
};

// Standard normal helpers shared by models and bounds.
double normal_cdf(double x);
double normal_pdf(double x);
double normal_tail(double x);  // Q(x) = 1 - Phi(x)

}  // namespace qsearch
