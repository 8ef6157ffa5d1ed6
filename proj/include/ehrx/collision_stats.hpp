#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ehrx/channel.hpp"
#include "ehrx/hypoexp.hpp"

namespace ehrx {

/// Mixture of received-power densities over all non-empty active subsets,
/// each weighted by its access prior
///   Pr(A_k) = prod_{i in A_k} q_i prod_{n not in A_k} (1 - q_n).
///
/// Subset k (0-based) is the bit pattern k + 1 over transmitter indices.
/// Received-power means are the scaled P * mu_i; near-equal means share a
/// cluster so repeated rates use the generalised-Erlang expansion.
///
/// The whole mixture is an exponential polynomial in the cluster rates, so
/// construction folds every subset into one coefficient table and
/// evaluation costs one exponential per cluster. Immutable once built.
class SubsetDensityTable {
public:
    explicit SubsetDensityTable(const ChannelParams& params) {
        params.validate();
        const std::size_t n = params.size();
        q_ = params.access_probs;
        scaled_means_.resize(n);
        for (std::size_t i = 0; i < n; ++i) scaled_means_[i] = params.power * params.means[i];

        // clusters of the population; subsets reuse them so that all terms
        // share a common set of rates
        auto clustering = cluster_means(scaled_means_);
        for (const auto& g : clustering.groups) cluster_mean_.push_back(g.mean);
        cluster_of_ = std::move(clustering.group_of);

        empty_prior_ = 1.0;
        for (double q : q_) empty_prior_ *= (1.0 - q);

        // identical cluster compositions have identical densities: sum their
        // priors first, expand each composition once
        std::map<std::vector<int>, double> weight_by_composition;
        std::vector<int> counts(cluster_mean_.size());
        const std::uint32_t subsets = (std::uint32_t{1} << n) - 1;
        for (std::uint32_t mask = 1; mask <= subsets; ++mask) {
            const double prior = subset_prior(mask);
            if (prior == 0.0) continue;
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < n; ++i)
                if ((mask >> i) & 1U) ++counts[cluster_of_[i]];
            weight_by_composition[counts] += prior;
        }

        max_power_ = static_cast<int>(n) - 1;
        mixture_coef_.assign(cluster_mean_.size() * n, 0.0);
        single_coef_.assign(cluster_mean_.size(), 0.0);
        for (const auto& [composition, weight] : weight_by_composition) {
            std::vector<RateGroup> subset_groups;
            std::vector<std::size_t> cluster_index;
            for (std::size_t c = 0; c < composition.size(); ++c) {
                if (composition[c] == 0) continue;
                subset_groups.push_back({cluster_mean_[c], composition[c]});
                cluster_index.push_back(c);
            }
            const auto terms = hypoexp_terms(subset_groups);
            // terms come out grouped in subset_groups order
            std::size_t t = 0;
            for (std::size_t g = 0; g < subset_groups.size(); ++g)
                for (int j = 0; j < subset_groups[g].multiplicity; ++j, ++t)
                    mixture_coef_[cluster_index[g] * n + static_cast<std::size_t>(terms[t].power)] +=
                        weight * terms[t].coef;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double w = q_[i];
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) w *= (1.0 - q_[j]);
            single_coef_[cluster_of_[i]] += w / cluster_mean_[cluster_of_[i]];
        }

        min_rate_ = 1.0 / *std::max_element(cluster_mean_.begin(), cluster_mean_.end());
        any_access_ = empty_prior_ < 1.0;
    }

    std::size_t transmitter_count() const noexcept { return q_.size(); }
    std::size_t subset_count() const noexcept { return (std::size_t{1} << q_.size()) - 1; }
    static std::uint32_t subset_mask(std::size_t k) noexcept { return static_cast<std::uint32_t>(k + 1); }

    double empty_prior() const noexcept { return empty_prior_; }

    double subset_prior(std::uint32_t mask) const noexcept {
        double p = 1.0;
        for (std::size_t i = 0; i < q_.size(); ++i) p *= ((mask >> i) & 1U) ? q_[i] : (1.0 - q_[i]);
        return p;
    }

    /// Density of the received power given active subset `mask` (non-empty).
    double subset_density(std::uint32_t mask, double x) const {
        if (mask == 0) throw std::domain_error("subset density: empty active set");
        std::vector<int> counts(cluster_mean_.size(), 0);
        for (std::size_t i = 0; i < q_.size(); ++i)
            if ((mask >> i) & 1U) ++counts[cluster_of_[i]];
        std::vector<RateGroup> groups;
        for (std::size_t c = 0; c < counts.size(); ++c)
            if (counts[c] > 0) groups.push_back({cluster_mean_[c], counts[c]});
        return hypoexp_pdf_grouped(x, groups);
    }

    /// sum_k Pr(A_k) f(x | A_k) over non-empty subsets.
    double mixture_density(double x) const { return evaluate(x, 0.0).mixture; }

    /// sum_i Pr(only i active) f(x | {i}).
    double single_active_density(double x) const { return evaluate(x, 0.0).single; }

    /// Pr(exactly one transmitter active | received power gamma).
    double success_prob(double gamma) const {
        if (!(gamma > 0.0)) throw std::domain_error("success_prob: gamma must be positive");
        if (!any_access_) throw std::domain_error("success_prob: every access probability is zero");
        // common factor exp(-min_rate * gamma) keeps both sums representable
        const auto d = evaluate(gamma, min_rate_);
        if (!(d.mixture > 0.0)) return d.single > 0.0 ? 1.0 : 0.0;
        return std::clamp(d.single / d.mixture, 0.0, 1.0);
    }

private:
    struct Densities {
        double single = 0.0;
        double mixture = 0.0;
    };

    Densities evaluate(double x, double shift) const {
        Densities out;
        const std::size_t n = q_.size();
        for (std::size_t c = 0; c < cluster_mean_.size(); ++c) {
            const double e = std::exp(-(1.0 / cluster_mean_[c] - shift) * x);
            const double* coef = &mixture_coef_[c * n];
            double poly = 0.0;
            for (int p = max_power_; p >= 0; --p) poly = poly * x + coef[p];
            out.mixture += e * poly;
            out.single += e * single_coef_[c];
        }
        return out;
    }

    std::vector<double> q_;
    std::vector<double> scaled_means_;
    std::vector<double> cluster_mean_;
    std::vector<std::size_t> cluster_of_;
    std::vector<double> mixture_coef_;  // [cluster * n + power]
    std::vector<double> single_coef_;   // [cluster]
    int max_power_ = 0;
    double empty_prior_ = 1.0;
    double min_rate_ = 0.0;
    bool any_access_ = false;
};

/// Successful-decoding probability for received power gamma > 0.
inline double success_prob(double gamma, const ChannelParams& params) {
    if (!(gamma > 0.0)) throw std::domain_error("success_prob: gamma must be positive");
    return SubsetDensityTable(params).success_prob(gamma);
}

struct BinEstimate {
    double lo = 0.0;
    double hi = 0.0;
    std::uint64_t count = 0;      // slots whose gamma fell in [lo, hi)
    std::uint64_t successes = 0;  // of those, slots with one active transmitter
    std::optional<double> estimate() const {
        if (count == 0) return std::nullopt;
        return static_cast<double>(successes) / static_cast<double>(count);
    }
    double midpoint() const { return 0.5 * (lo + hi); }
};

/// Monte Carlo estimate of Pr(success | gamma in bin), from `n_samples`
/// non-idle slots (idle slots are redrawn). Samples outside the edges are
/// dropped.
template <class Rng>
std::vector<BinEstimate> estimate_success_prob_mc(const ChannelParams& params,
                                                  std::span<const double> bin_edges,
                                                  std::uint64_t n_samples, Rng& rng) {
    params.validate();
    if (bin_edges.size() < 2) throw std::invalid_argument("mc: need at least two bin edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw std::invalid_argument("mc: bin edges must be strictly increasing");
    if (n_samples < 1) throw std::invalid_argument("mc: n_samples must be >= 1");
    if (std::all_of(params.access_probs.begin(), params.access_probs.end(),
                    [](double q) { return q == 0.0; }))
        throw std::domain_error("mc: every access probability is zero, the channel is never active");

    std::vector<BinEstimate> bins(bin_edges.size() - 1);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].lo = bin_edges[b];
        bins[b].hi = bin_edges[b + 1];
    }
    const double gamma_max = params.default_gamma_max();
    for (std::uint64_t s = 0; s < n_samples;) {
        const auto slot = sample_slot(params, gamma_max, rng);
        if (slot.idle()) continue;
        ++s;
        const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), slot.gamma);
        if (it == bin_edges.begin() || it == bin_edges.end()) continue;
        auto& bin = bins[static_cast<std::size_t>(it - bin_edges.begin()) - 1];
        ++bin.count;
        if (slot.success) ++bin.successes;
    }
    return bins;
}

}  // namespace ehrx
