#include "qsearch/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace qsearch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_param(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}
}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014326779; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double normal_tail(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

PopulationModel PopulationModel::gaussian(double mu) {
    if (!(mu > 0) || !std::isfinite(mu)) throw std::invalid_argument("gaussian pair needs mu > 0");
    PopulationModel m;
    m.kind_ = ModelKind::gaussian_pair;
    m.mu_ = mu;
    return m;
}

PopulationModel PopulationModel::coin(double b) {
    if (!(b > 0) || !(b <= 0.5)) throw std::invalid_argument("coin pair needs b in (0, 1/2]");
    PopulationModel m;
    m.kind_ = ModelKind::coin_pair;
    m.b_ = b;
    m.llr_heads_ = b == 0.5 ? kInf : std::log((1 + 2 * b) / (1 - 2 * b));
    return m;
}

PopulationModel PopulationModel::generic(std::vector<double> p0, std::vector<double> p1) {
    if (p0.size() != p1.size() || p0.size() < 2)
        throw std::invalid_argument("generic pair needs two tables of equal length >= 2");
    double s0 = 0, s1 = 0;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        if (p0[i] < 0 || p1[i] < 0) throw std::invalid_argument("negative probability");
        if ((p0[i] > 0) != (p1[i] > 0))
            throw std::invalid_argument("generic pair needs identical supports");
        s0 += p0[i];
        s1 += p1[i];
    }
    if (std::abs(s0 - 1) > 1e-12 || std::abs(s1 - 1) > 1e-12)
        throw std::invalid_argument("probability tables must sum to 1");
    PopulationModel m;
    m.kind_ = ModelKind::generic_pair;
    m.p0_ = std::move(p0);
    m.p1_ = std::move(p1);
    double c0 = 0, c1 = 0;
    for (std::size_t i = 0; i < m.p0_.size(); ++i) {
        c0 += m.p0_[i];
        c1 += m.p1_[i];
        m.cdf0_.push_back(c0);
        m.cdf1_.push_back(c1);
        m.llr_.push_back(m.p0_[i] > 0 ? std::log(m.p1_[i] / m.p0_[i]) : 0.0);
    }
    m.cdf0_.back() = m.cdf1_.back() = 1.0;
    return m;
}

double PopulationModel::sample(int label, Rng& rng) const {
    switch (kind_) {
        case ModelKind::gaussian_pair:
            return (label ? mu_ : -mu_) + rng.next_gaussian();
        case ModelKind::coin_pair: {
            const double heads_prob = label ? 0.5 + b_ : 0.5 - b_;
            return rng.next_double() < heads_prob ? 1.0 : 0.0;
        }
        case ModelKind::generic_pair: {
            const auto& cdf = label ? cdf1_ : cdf0_;
            const double u = rng.next_double();
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
            return static_cast<double>(it - cdf.begin());
        }
    }
    return 0;
}

double PopulationModel::log_lr(double y) const {
    switch (kind_) {
        case ModelKind::gaussian_pair:
            return 2 * mu_ * y;
        case ModelKind::coin_pair:
            return y > 0.5 ? llr_heads_ : -llr_heads_;
        case ModelKind::generic_pair: {
            const auto i = static_cast<std::int64_t>(std::llround(y));
            if (i < 0 || i >= static_cast<std::int64_t>(p0_.size()) ||
                (p0_[i] == 0 && p1_[i] == 0))
                throw std::domain_error("observation outside both supports");
            return llr_[i];
        }
    }
    return 0;
}

std::pair<double, double> PopulationModel::kl_divergences() const {
    switch (kind_) {
        case ModelKind::gaussian_pair:
            return {2 * mu_ * mu_, 2 * mu_ * mu_};
        case ModelKind::coin_pair: {
            const double d = b_ == 0.5 ? kInf : 2 * b_ * llr_heads_;
            return {d, d};
        }
        case ModelKind::generic_pair: {
            double d01 = 0, d10 = 0;
            for (std::size_t i = 0; i < p0_.size(); ++i) {
                if (p0_[i] > 0) d01 -= p0_[i] * llr_[i];
                if (p1_[i] > 0) d10 += p1_[i] * llr_[i];
            }
            return {d01, d10};
        }
    }
    return {0, 0};
}

double PopulationModel::round_threshold(std::int64_t k) const {
    if (k < 1) throw std::invalid_argument("round size must be >= 1");
    switch (kind_) {
        case ModelKind::gaussian_pair:
            // T_k ~ Normal(-k mu, k) under P0; its median is exact.
            return -static_cast<double>(k) * mu_;
        case ModelKind::coin_pair: {
            // Smallest integer c with P(Binomial(k, 1/2-b) > c) <= 1/2.
            if (k > 20000) throw std::invalid_argument("round size too large for exact binomial");
            const double ph = 0.5 - b_;
            if (ph == 0) return 0.0;  // degenerate coin: heads never under P0
            // pmf recurrence, tail accumulated from the top
            std::vector<double> pmf(static_cast<std::size_t>(k) + 1);
            pmf[0] = std::exp(static_cast<double>(k) * std::log1p(-ph));
            for (std::int64_t j = 0; j < k; ++j)
                pmf[j + 1] = pmf[j] * (static_cast<double>(k - j) / static_cast<double>(j + 1)) *
                             (ph / (1 - ph));
            double tail = 0;  // tail at c = k is 0, then grow downward
            for (std::int64_t c = k - 1; c >= -1; --c) {
                tail += pmf[c + 1];
                if (tail > 0.5) return static_cast<double>(c + 1);
            }
            return 0.0;  // tail never exceeded 1/2: c = 0 works (not reachable for ph > 0)
        }
        case ModelKind::generic_pair: {
            // Exact distribution of the k-fold log-LR sum under P0 by repeated
            // convolution; equal sums merged at 1e-9 to keep lattices compact.
            std::map<double, double> dist{{0.0, 1.0}};
            for (std::int64_t r = 0; r < k; ++r) {
                std::map<double, double> next;
                for (const auto& [v, p] : dist) {
                    for (std::size_t i = 0; i < p0_.size(); ++i) {
                        if (p0_[i] == 0) continue;
                        const double nv = v + llr_[i];
                        auto it = next.lower_bound(nv - 1e-9);
                        if (it != next.end() && it->first <= nv + 1e-9)
                            it->second += p * p0_[i];
                        else
                            next.emplace(nv, p * p0_[i]);
                    }
                }
                if (next.size() > 200000) throw std::runtime_error("round statistic support too large");
                dist = std::move(next);
            }
            double tail = 1;
            for (const auto& [v, p] : dist) {
                tail -= p;  // P0(T > v)
                if (tail <= 0.5 + 1e-15) return v;
            }
            return dist.rbegin()->first;
        }
    }
    return 0;
}

double PopulationModel::statistic_increment(double y) const {
    switch (kind_) {
        case ModelKind::gaussian_pair:
        case ModelKind::coin_pair:
            return y;
        case ModelKind::generic_pair:
            return log_lr(y);
    }
    return 0;
}

std::pair<double, double> PopulationModel::overshoot_constants() const {
    switch (kind_) {
        case ModelKind::gaussian_pair: {
            // 2 mu (mu + exp(-mu^2/2) / integral_{-mu}^{inf} exp(-t^2/2) dt)
            const double tail = 2.5066282746310005024 * normal_cdf(mu_);
            const double c = 2 * mu_ * (mu_ + std::exp(-0.5 * mu_ * mu_) / tail);
            return {c, c};
        }
        case ModelKind::coin_pair:
            return {llr_heads_, llr_heads_};
        case ModelKind::generic_pair:
            throw std::domain_error("overshoot constants unsupported for generic models");
    }
    return {0, 0};
}

std::string PopulationModel::describe() const {
    switch (kind_) {
        case ModelKind::gaussian_pair:
            return "gaussian:mu=" + format_param(mu_);
        case ModelKind::coin_pair:
            return "coin:b=" + format_param(b_);
        case ModelKind::generic_pair:
            return "generic:k=" + std::to_string(p0_.size());
    }
    return {};
}

}  // namespace qsearch
