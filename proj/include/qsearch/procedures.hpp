#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qsearch/models.hpp"
#include "qsearch/rng.hpp"

namespace qsearch {

// Thrown when a trial exceeds the hard per-trial sample cap; indicates a
// mis-parameterized configuration, never reached at sane operating points.
class NonTerminationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kTrialSampleCap = 1'000'000'000;

// Stopping thresholds for the per-population SPRT, kept in log domain (the
// upper threshold is ~1e5 at typical operating points; raw likelihood-ratio
// products would overflow long before stopping).
//   abandon a population when   log Lambda <= log_gamma_l
//   terminate the search when   log Lambda >= log_gamma_u
// log_gamma_l ranges over [-inf, 0]: 0 is the move-on-any-dip variant
// (gamma_L = 1) and -inf hosts the degenerate coin's policy value gamma_L = 0.
struct SprtConfig {
    double log_gamma_l;
    double log_gamma_u;
};

struct SeqThreshConfig {
    int k_max;  // rounds per population; round k draws k fresh samples
};

struct NonAdaptiveConfig {
    std::int64_t n0;  // samples per population
    double tau;       // declare when the summed log-LR is >= tau
};

void validate(const SprtConfig& c);
void validate(const SeqThreshConfig& c);
void validate(const NonAdaptiveConfig& c);

// Lower-threshold selection for default_sprt_config.
//   paper: model-specific values: 1/mu (mu > 1), 1 - sqrt(mu) (mu < 1), 1/2
//          at the mu = 1 seam; (1-2b)/(1+2b) for coins. Rejects generic
//          models (no stated policy; pass an explicit value instead).
//   cusum: gamma_L = 1, move on any log Lambda <= 0.
//   value: caller-supplied gamma_L in (0,1).
enum class GammaLPolicy { paper, cusum, value };

double paper_gamma_l(const PopulationModel& model);

// gamma_U = (1-pi)/(pi delta); with exact_overshoot (coins only) log gamma_U
// is rounded up to the next integer multiple of the per-flip log-LR so the
// random walk hits both boundaries exactly.
SprtConfig default_sprt_config(double pi, double delta, const PopulationModel& model,
                               GammaLPolicy policy, double gamma_l_value = 0.0,
                               bool exact_overshoot = false);

// Theorem-style round count for sequential thresholding (see bounds module
// for the analytic companion): ceil(2 log2((1-pi)/pi)) clamped to >= 1.
int default_k_max(double pi);

// One full search trial: visited populations in order, their true labels,
// and the per-population sample counts. returned_index is 1-based and equals
// per_population_samples.size().
struct TrialOutcome {
    std::uint64_t returned_index = 0;
    int returned_label = 0;
    std::uint64_t total_samples = 0;
    std::vector<std::uint32_t> per_population_samples;
    std::vector<std::uint8_t> per_population_labels;
};

// Labels of successive populations, drawn lazily on first visit.
class LabelSource {
  public:
    virtual ~LabelSource() = default;
    virtual int next_label(Rng& rng) = 0;
};

class BernoulliLabels final : public LabelSource {
  public:
    explicit BernoulliLabels(double pi) : pi_(pi) {}
    int next_label(Rng& rng) override { return rng.next_double() < pi_ ? 1 : 0; }

  private:
    double pi_;
};

class ConstantLabels final : public LabelSource {
  public:
    explicit ConstantLabels(int label) : label_(label) {}
    int next_label(Rng&) override { return label_; }

  private:
    int label_;
};

TrialOutcome run_sprt(const PopulationModel& model, const SprtConfig& config,
                      LabelSource& labels, Rng& rng);
TrialOutcome run_seq_thresh(const PopulationModel& model, const SeqThreshConfig& config,
                            LabelSource& labels, Rng& rng);
TrialOutcome run_nonadaptive(const PopulationModel& model, const NonAdaptiveConfig& config,
                             LabelSource& labels, Rng& rng);

// A single population run to absorption, for boundary-exit statistics.
struct SprtSingleResult {
    bool terminated = false;  // hit the upper boundary
    std::uint64_t samples = 0;
    double terminal_log_lr = 0;
};

SprtSingleResult run_sprt_single(const PopulationModel& model, const SprtConfig& config,
                                 int label, Rng& rng);

}  // namespace qsearch
