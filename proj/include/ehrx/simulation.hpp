#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ehrx/channel.hpp"
#include "ehrx/collision_stats.hpp"
#include "ehrx/controller.hpp"
#include "ehrx/policies.hpp"
#include "ehrx/random.hpp"

namespace ehrx {

inline constexpr std::size_t kFastPsGridPoints = 10000;

/// P_s(gamma) for the simulation loop: exact by default, or linear
/// interpolation on a uniform grid over (0, gamma_max] when `fast` is set.
/// Below the first grid point the exact value is used.
class SuccessProbLookup {
public:
    SuccessProbLookup(const ChannelParams& params, double gamma_max, bool fast)
        : table_(params), fast_(fast) {
        if (!fast_) return;
        step_ = gamma_max / static_cast<double>(kFastPsGridPoints);
        grid_.resize(kFastPsGridPoints + 1);
        grid_[0] = 0.0;  // never read
        for (std::size_t k = 1; k <= kFastPsGridPoints; ++k)
            grid_[k] = table_.success_prob(static_cast<double>(k) * step_);
    }

    double operator()(double gamma) const {
        if (!fast_ || gamma < step_) return table_.success_prob(gamma);
        const double pos = gamma / step_;
        const auto k = std::min(static_cast<std::size_t>(pos), kFastPsGridPoints - 1);
        const double frac = std::min(pos - static_cast<double>(k), 1.0);
        return grid_[k] + frac * (grid_[k + 1] - grid_[k]);
    }

    const SubsetDensityTable& table() const noexcept { return table_; }

private:
    SubsetDensityTable table_;
    bool fast_ = false;
    double step_ = 0.0;
    std::vector<double> grid_;
};

/// Aggregates over a window of slots.
struct WindowMetrics {
    std::uint64_t slots = 0;
    double throughput = 0.0;      // mean of (1 - tau) log(1 + gamma) S rho, bits/slot
    double throughput_eq1 = 0.0;  // mean of log(1 + gamma) S rho
    std::uint64_t decode_count = 0;
    std::uint64_t harvest_count = 0;  // includes idle slots
    std::uint64_t idle_count = 0;
    std::uint64_t collision_count = 0;
    std::uint64_t success_count = 0;
    std::uint64_t wasted_decodes = 0;  // decodes on collided slots
    double energy_min = 0.0;
    double energy_max = 0.0;
    double energy_mean = 0.0;

    friend bool operator==(const WindowMetrics&, const WindowMetrics&) = default;
};

struct SimMetrics {
    PolicyKind policy = PolicyKind::lyapunov;
    std::uint64_t horizon = 0;
    std::uint64_t warmup = 0;
    std::uint64_t seed = 0;
    double theta = 0.0;
    double gamma_max = 0.0;
    double theorem_bound = 0.0;  // B / V

    WindowMetrics measured;  // slots [warmup, horizon)
    WindowMetrics full;      // slots [0, horizon)

    // decode decisions made without enough energy; converted to harvest
    std::uint64_t violations = 0;
    // slots that started outside 0 <= E(t) < theta + gamma_max
    std::uint64_t battery_bound_breaches = 0;
    // non-idle slots that decoded with E(t) <= harvest_threshold
    std::uint64_t low_energy_decodes = 0;

    double throughput() const noexcept { return measured.throughput; }
    friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

namespace detail {

class WindowAccumulator {
public:
    void add(double energy, const SlotRealization& slot, int rho, double reward, double tau) {
        ++out_.slots;
        reward_sum_ += reward;
        reward_keep_sum_ += (1.0 - tau) * reward;
        energy_sum_ += energy;
        if (out_.slots == 1) {
            out_.energy_min = out_.energy_max = energy;
        } else {
            out_.energy_min = std::min(out_.energy_min, energy);
            out_.energy_max = std::max(out_.energy_max, energy);
        }
        if (rho == 1) {
            ++out_.decode_count;
            if (slot.collision()) ++out_.wasted_decodes;
        } else {
            ++out_.harvest_count;
        }
        if (slot.idle()) ++out_.idle_count;
        if (slot.collision()) ++out_.collision_count;
        if (slot.success) ++out_.success_count;
    }

    WindowMetrics finish() const {
        WindowMetrics m = out_;
        if (m.slots > 0) {
            const double n = static_cast<double>(m.slots);
            m.throughput = reward_keep_sum_ / n;
            m.throughput_eq1 = reward_sum_ / n;
            m.energy_mean = energy_sum_ / n;
        }
        return m;
    }

private:
    WindowMetrics out_;
    double reward_sum_ = 0.0;
    double reward_keep_sum_ = 0.0;
    double energy_sum_ = 0.0;
};

}  // namespace detail

/// Runs one seeded simulation of `horizon` slots. Headline metrics skip the
/// first `warmup` slots; full-horizon metrics are kept alongside.
///
/// Per slot: sample the channel, decide, credit log(1 + gamma) when a success
/// was decoded, update the battery. A decode chosen without enough energy is
/// turned into a harvest and counted in `violations`.
inline SimMetrics run(PolicyKind policy, const ChannelParams& params, const EnergyConfig& cfg,
                      std::uint64_t horizon, std::uint64_t seed, std::uint64_t warmup,
                      bool fast_ps = false) {
    params.validate();
    cfg.validate();
    if (horizon < 1) throw std::invalid_argument("run: horizon must be >= 1");
    if (warmup >= horizon) throw std::invalid_argument("run: warmup must be smaller than horizon");

    std::optional<SuccessProbLookup> ps_lookup;
    if (policy == PolicyKind::lyapunov) ps_lookup.emplace(params, cfg.gamma_max, fast_ps);

    SimMetrics metrics;
    metrics.policy = policy;
    metrics.horizon = horizon;
    metrics.warmup = warmup;
    metrics.seed = seed;
    metrics.theta = compute_theta(cfg);
    metrics.gamma_max = cfg.gamma_max;
    metrics.theorem_bound = compute_B(cfg) / cfg.v;

    const double battery_cap = metrics.theta + cfg.gamma_max;
    const double low_energy = harvest_threshold(cfg);

    Engine rng(seed);
    auto state = ControllerState::initial(cfg);
    detail::WindowAccumulator full, measured;

    for (std::uint64_t t = 0; t < horizon; ++t) {
        const auto slot = sample_slot(params, cfg.gamma_max, rng);
        const double energy = state.energy;
        if (!(energy >= 0.0 && energy < battery_cap)) ++metrics.battery_bound_breaches;

        int rho = 0;
        switch (policy) {
            case PolicyKind::lyapunov: {
                const double ps = slot.gamma > 0.0 ? (*ps_lookup)(slot.gamma) : 0.0;
                rho = decide(state, slot.gamma, ps, cfg).rho;
                if (rho == 1 && energy <= low_energy) ++metrics.low_energy_decodes;
                break;
            }
            case PolicyKind::genie: rho = genie_decide(energy, slot, cfg); break;
            case PolicyKind::greedy: rho = greedy_decide(energy, slot.gamma, cfg); break;
            case PolicyKind::always_harvest: rho = always_harvest_decide(); break;
        }
        if (rho == 1 && energy < decode_requirement(cfg, slot.gamma)) {
            ++metrics.violations;
            rho = 0;
        }

        const double reward = (rho == 1 && slot.success) ? rate_of(slot.gamma, cfg.log_base) : 0.0;
        full.add(energy, slot, rho, reward, cfg.tau);
        if (t >= warmup) measured.add(energy, slot, rho, reward, cfg.tau);

        state.energy = battery_step(state, rho, slot.gamma, cfg);
    }

    metrics.full = full.finish();
    metrics.measured = measured.finish();
    return metrics;
}

}  // namespace ehrx
