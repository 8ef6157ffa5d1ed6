#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ehrx/channel.hpp"

namespace ehrx {

/// Receiver energy constants and the drift-plus-penalty weight V.
/// Energies are in J/slot; decoding costs c * log(1 + gamma) + offset.
struct EnergyConfig {
    double tau = 0.01;          // sensing fraction of the slot
    double eta = 0.7;           // harvesting efficiency
    double phi_se = 0.01;       // sensing energy
    double phi_pi = 0.01;       // pilot energy
    double decode_cost_c = 1.0;
    double decode_cost_offset = 0.5;
    double gamma_max = 50.0;    // received-power cap
    double v = 200.0;
    LogBase log_base = LogBase::two;

    void validate() const {
        if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("energy: tau must lie in [0,1)");
        if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("energy: eta must lie in (0,1]");
        if (!(phi_se >= 0.0) || !(phi_pi >= 0.0))
            throw std::invalid_argument("energy: sensing and pilot energies must be non-negative");
        if (!(decode_cost_c >= 0.0) || !(decode_cost_offset >= 0.0))
            throw std::invalid_argument("energy: decode cost coefficients must be non-negative");
        if (!(gamma_max > 0.0) || !std::isfinite(gamma_max))
            throw std::invalid_argument("energy: gamma_max must be positive");
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("energy: V must be positive");
    }
};

inline double decode_cost(const EnergyConfig& cfg, double gamma) {
    return cfg.decode_cost_c * rate_of(gamma, cfg.log_base) + cfg.decode_cost_offset;
}

/// Energy a slot needs before decoding may be attempted.
inline double decode_requirement(const EnergyConfig& cfg, double gamma) {
    return decode_cost(cfg, gamma) + cfg.phi_se + cfg.phi_pi;
}

/// phi_de(gamma_max) + phi_se + phi_pi. At or below this level the
/// controller always harvests.
inline double harvest_threshold(const EnergyConfig& cfg) {
    return decode_requirement(cfg, cfg.gamma_max);
}

/// Perturbation theta = V / eta + phi_de(gamma_max) + phi_se + phi_pi.
inline double compute_theta(const EnergyConfig& cfg) {
    return cfg.v / cfg.eta + harvest_threshold(cfg);
}

/// Drift bound constant (gamma_max^2 + phi_de(gamma_max)^2 + (phi_se + phi_pi)^2) / 2.
inline double compute_B(const EnergyConfig& cfg) {
    const double de = decode_cost(cfg, cfg.gamma_max);
    const double fixed = cfg.phi_se + cfg.phi_pi;
    return 0.5 * (cfg.gamma_max * cfg.gamma_max + de * de + fixed * fixed);
}

struct ControllerState {
    double energy = 0.0;  // E(t)
    double theta = 0.0;

    /// Starts at the harvest threshold with theta from compute_theta.
    static ControllerState initial(const EnergyConfig& cfg) {
        return ControllerState{harvest_threshold(cfg), compute_theta(cfg)};
    }
};

struct DecisionRecord {
    int rho = 0;                 // 1 decode, 0 harvest
    double index_decode = 0.0;
    double index_harvest = 0.0;
    double ps = 0.0;
    bool affordable = false;     // E(t) >= phi_de(gamma) + phi_se + phi_pi
};

/// Per-slot index rule. With d = E - theta:
///
///   decode  : V (1 - tau) log(1 + gamma) ps + d * phi_de(gamma)
///   harvest : -d * (1 - tau) eta gamma
///
/// and rho = 1 iff decode >= harvest. Below theta the deficit penalises the
/// decode cost and rewards harvested energy, which pushes E(t) toward theta.
/// Idle slots (gamma == 0) harvest nothing and report zero indices.
inline DecisionRecord decide(const ControllerState& state, double gamma, double ps,
                             const EnergyConfig& cfg) {
    DecisionRecord rec;
    rec.ps = ps;
    rec.affordable = state.energy >= decode_requirement(cfg, gamma);
    if (gamma <= 0.0) return rec;

    const double deficit = state.energy - state.theta;
    const double keep = 1.0 - cfg.tau;
    rec.index_decode = cfg.v * keep * rate_of(gamma, cfg.log_base) * ps + deficit * decode_cost(cfg, gamma);
    rec.index_harvest = -deficit * keep * cfg.eta * gamma;
    rec.rho = rec.index_decode >= rec.index_harvest ? 1 : 0;
    return rec;
}

/// Energy harvested in a slot where the receiver does not decode.
inline double harvested_energy(const EnergyConfig& cfg, double gamma) {
    return (1.0 - cfg.tau) * cfg.eta * gamma;
}

/// E(t+1) = [E - rho phi_de(gamma) - phi_se - phi_pi + (1 - rho)(1 - tau) eta gamma]^+
inline double battery_step(const ControllerState& state, int rho, double gamma, const EnergyConfig& cfg) {
    const double spent = (rho == 1 ? decode_cost(cfg, gamma) : 0.0) + cfg.phi_se + cfg.phi_pi;
    const double gained = rho == 1 ? 0.0 : harvested_energy(cfg, gamma);
    return std::max(0.0, state.energy - spent + gained);
}

}  // namespace ehrx
