#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace ehrx {

/// Means closer than this (relative gap of sorted neighbours) are merged into
/// one repeated-rate group before the partial-fraction expansion.
inline constexpr double kMeanClusterRelTol = 1e-4;

/// A mean that occurs `multiplicity` times in a sum of exponentials.
struct RateGroup {
    double mean = 1.0;
    int multiplicity = 1;
};

/// coef * x^power * exp(-rate * x)
struct ExpPolyTerm {
    double rate = 1.0;
    int power = 0;
    double coef = 0.0;
};

namespace detail {

inline void require_means(std::span<const double> means) {
    if (means.empty()) throw std::domain_error("hypoexp: empty list of means");
    for (double m : means)
        if (!(m > 0.0)) throw std::domain_error("hypoexp: means must be positive");
}

}  // namespace detail

/// Result of clustering a list of means: the groups, and the group each
/// input position landed in.
struct MeanClustering {
    std::vector<RateGroup> groups;
    std::vector<std::size_t> group_of;
};

/// Sorts the means and merges runs whose neighbouring relative gap is below
/// `rel_tol`. Each group's mean is the average of its members.
inline MeanClustering cluster_means(std::span<const double> means,
                                    double rel_tol = kMeanClusterRelTol) {
    detail::require_means(means);
    std::vector<std::size_t> order(means.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });

    MeanClustering out;
    out.group_of.resize(means.size());
    double sum = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const double m = means[order[r]];
        if (r > 0 && !(m - means[order[r - 1]] < rel_tol * m)) {
            out.groups.push_back({sum / count, count});
            sum = 0.0;
            count = 0;
        }
        sum += m;
        ++count;
        out.group_of[order[r]] = out.groups.size();
    }
    out.groups.push_back({sum / count, count});
    return out;
}

inline std::vector<RateGroup> group_means(std::span<const double> means,
                                          double rel_tol = kMeanClusterRelTol) {
    return cluster_means(means, rel_tol).groups;
}

/// Partial-fraction expansion of the density of a sum of independent
/// exponentials, one term per (group, power). Group k with rate l_k and
/// multiplicity m_k contributes
///
///   sum_{j=1..m_k} a_{m_k - j} x^{j-1} e^{-l_k x} / (j-1)!
///
/// where a_n are the Taylor coefficients at s = -l_k of
/// g(s) = l_k^{m_k} prod_{l != k} (l_l / (s + l_l))^{m_l}. They follow from
/// g' = g h, h(s) = -sum_{l != k} m_l / (s + l_l):
///
///   a_0 = g(-l_k),  a_{n+1} = (1 / (n+1)) sum_{i=0..n} a_i b_{n-i},
///   b_n = -sum_{l != k} m_l (-1)^n / (l_l - l_k)^{n+1}.
inline std::vector<ExpPolyTerm> hypoexp_terms(std::span<const RateGroup> groups) {
    if (groups.empty()) throw std::domain_error("hypoexp: empty list of means");
    std::vector<ExpPolyTerm> terms;
    std::vector<double> a, b;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double rate_k = 1.0 / groups[k].mean;
        const int m = groups[k].multiplicity;

        double a0 = std::pow(rate_k, m);
        for (std::size_t l = 0; l < groups.size(); ++l) {
            if (l == k) continue;
            const double rate_l = 1.0 / groups[l].mean;
            a0 *= std::pow(rate_l / (rate_l - rate_k), groups[l].multiplicity);
        }

        a.assign(static_cast<std::size_t>(m), 0.0);
        b.assign(static_cast<std::size_t>(m), 0.0);
        a[0] = a0;
        for (int n = 0; n + 1 < m; ++n) {
            double bn = 0.0;
            for (std::size_t l = 0; l < groups.size(); ++l) {
                if (l == k) continue;
                const double d = 1.0 / groups[l].mean - rate_k;
                bn -= groups[l].multiplicity * ((n % 2 == 0) ? 1.0 : -1.0) / std::pow(d, n + 1);
            }
            b[static_cast<std::size_t>(n)] = bn;
        }
        for (int n = 0; n + 1 < m; ++n) {
            double acc = 0.0;
            for (int i = 0; i <= n; ++i) acc += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(n - i)];
            a[static_cast<std::size_t>(n + 1)] = acc / (n + 1);
        }

        double factorial = 1.0;
        for (int j = 1; j <= m; ++j) {
            if (j > 1) factorial *= (j - 1);
            terms.push_back({rate_k, j - 1, a[static_cast<std::size_t>(m - j)] / factorial});
        }
    }
    return terms;
}

/// Evaluates sum of terms at x >= 0.
inline double eval_terms(std::span<const ExpPolyTerm> terms, double x) {
    double acc = 0.0;
    for (const auto& t : terms) {
        const double poly = t.power == 0 ? 1.0 : std::pow(x, t.power);
        acc += t.coef * poly * std::exp(-t.rate * x);
    }
    return acc;
}

/// Density of a sum of independent exponentials with pairwise distinct
/// means, by the product formula
///   sum_i mu_i^{-1} e^{-x/mu_i} prod_{j != i} mu_i / (mu_i - mu_j).
/// Singular for repeated means and ill-conditioned for close ones.
inline double hypoexp_pdf_distinct(double x, std::span<const double> means) {
    detail::require_means(means);
    double acc = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < means.size(); ++j)
            if (j != i) prod *= means[i] / (means[i] - means[j]);
        acc += std::exp(-x / means[i]) / means[i] * prod;
    }
    return acc;
}

/// Generalised-Erlang density for grouped (repeated) means.
inline double hypoexp_pdf_grouped(double x, std::span<const RateGroup> groups) {
    const auto terms = hypoexp_terms(groups);
    return eval_terms(terms, x);
}

/// Density at x >= 0 of the sum of independent exponentials with the given
/// means. Repeated or near-equal means are grouped first.
inline double hypoexp_pdf(double x, std::span<const double> means) {
    detail::require_means(means);
    if (x < 0.0) throw std::domain_error("hypoexp: x must be non-negative");
    const auto groups = group_means(means);
    return std::max(0.0, hypoexp_pdf_grouped(x, groups));
}

}  // namespace ehrx
