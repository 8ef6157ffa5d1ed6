#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehrx/random.hpp"

namespace ehrx {

/// Subset enumeration in the collision statistics is 2^N - 1, so the
/// population size is capped.
inline constexpr std::size_t kMaxTransmitters = 20;

enum class LogBase { two, natural };

/// Achievable rate log(1 + gamma), bits/channel-use for base two.
inline double rate_of(double gamma, LogBase base = LogBase::two) {
    return base == LogBase::two ? std::log2(1.0 + gamma) : std::log1p(gamma);
}

/// Transmitter population of the random-access channel. Gains and power are
/// noise-normalised.
struct ChannelParams {
    std::vector<double> means;         // mean channel gain per transmitter
    std::vector<double> access_probs;  // per-slot access probability
    double power = 1.0;
    double gain_quantile_eps = 1e-6;   // tail mass cut from each gain

    std::size_t size() const noexcept { return means.size(); }

    /// Same mean and access probability for all `n` transmitters.
    static ChannelParams uniform(std::size_t n, double mean, double q, double power = 1.0,
                                 double eps = 1e-6) {
        return ChannelParams{std::vector<double>(n, mean), std::vector<double>(n, q), power, eps};
    }

    void validate() const {
        const auto n = means.size();
        if (n < 1) throw std::invalid_argument("channel: need at least one transmitter");
        if (n > kMaxTransmitters)
            throw std::invalid_argument("channel: at most " + std::to_string(kMaxTransmitters) +
                                        " transmitters supported (subset enumeration is 2^N)");
        if (access_probs.size() != n)
            throw std::invalid_argument("channel: means and access_probs differ in length");
        for (double m : means)
            if (!(m > 0.0) || !std::isfinite(m))
                throw std::invalid_argument("channel: mean gains must be positive");
        for (double q : access_probs)
            if (!(q >= 0.0 && q <= 1.0))
                throw std::invalid_argument("channel: access probabilities must lie in [0,1]");
        if (!(power > 0.0) || !std::isfinite(power))
            throw std::invalid_argument("channel: transmit power must be positive");
        if (!(gain_quantile_eps > 0.0 && gain_quantile_eps <= 0.01))
            throw std::invalid_argument("channel: gain_quantile_eps must lie in (0, 0.01]");
    }

    /// Per-link gain cap mu_i * ln(1/eps), the (1 - eps) quantile.
    double gain_cap(std::size_t i) const { return means[i] * std::log(1.0 / gain_quantile_eps); }

    /// P * sum_i gain_cap(i): the largest received power a slot can carry.
    double default_gamma_max() const {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += gain_cap(i);
        return power * s;
    }
};

/// One slot of the collision channel.
struct SlotRealization {
    std::uint32_t active_mask = 0;   // bit i set iff transmitter i accessed the channel
    std::size_t active_count = 0;    // a(t)
    std::array<double, kMaxTransmitters> gains{};  // h_i(t), zero for inactive i
    double gamma = 0.0;              // received power P * sum of active gains
    bool success = false;            // exactly one transmitter active
    double rate = 0.0;               // log2(1 + gamma)

    bool is_active(std::size_t i) const noexcept { return (active_mask >> i) & 1U; }
    bool idle() const noexcept { return active_count == 0; }
    bool collision() const noexcept { return active_count >= 2; }

    std::vector<std::size_t> active_set() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < kMaxTransmitters; ++i)
            if (is_active(i)) out.push_back(i);
        return out;
    }
};

/// Draw from an exponential with the given mean conditioned on not exceeding
/// mean * ln(1/eps).
template <class Rng>
inline double sample_truncated_exponential(double mean, double eps, Rng& rng) {
    // shift into (0, 1) so an active link never carries exactly zero gain
    const double u = uniform01(rng) + 0x1.0p-54;
    return -mean * std::log1p(-u * (1.0 - eps));
}

/// Samples one slot. Each transmitter draws one uniform for access and, when
/// active, one for its gain, in index order; the stream consumption is part of
/// the reproducibility contract.
template <class Rng>
SlotRealization sample_slot(const ChannelParams& params, double gamma_max, Rng& rng) {
    SlotRealization slot;
    double gain_sum = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(uniform01(rng) < params.access_probs[i])) continue;
        const double h = sample_truncated_exponential(params.means[i], params.gain_quantile_eps, rng);
        slot.active_mask |= (1U << i);
        ++slot.active_count;
        slot.gains[i] = h;
        gain_sum += h;
    }
    slot.gamma = std::min(params.power * gain_sum, gamma_max);
    slot.success = slot.active_count == 1;
    slot.rate = rate_of(slot.gamma);
    return slot;
}

}  // namespace ehrx
