#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "ehrx/channel.hpp"
#include "ehrx/controller.hpp"

namespace ehrx {

enum class PolicyKind { lyapunov, genie, greedy, always_harvest };

inline std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::lyapunov: return "lyapunov";
        case PolicyKind::genie: return "genie";
        case PolicyKind::greedy: return "greedy";
        case PolicyKind::always_harvest: return "always_harvest";
    }
    return "unknown";
}

inline PolicyKind parse_policy(std::string_view name) {
    if (name == "lyapunov") return PolicyKind::lyapunov;
    if (name == "genie") return PolicyKind::genie;
    if (name == "greedy") return PolicyKind::greedy;
    if (name == "always_harvest" || name == "always-harvest") return PolicyKind::always_harvest;
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

// Baselines share the battery recursion and affordability rule with the
// index policy; only the decision differs.

/// Knows whether the slot collided: decodes every affordable success.
inline int genie_decide(double energy, const SlotRealization& slot, const EnergyConfig& cfg) {
    return slot.success && energy >= decode_requirement(cfg, slot.gamma) ? 1 : 0;
}

/// Decodes any non-idle slot it can afford.
inline int greedy_decide(double energy, double gamma, const EnergyConfig& cfg) {
    return gamma > 0.0 && energy >= decode_requirement(cfg, gamma) ? 1 : 0;
}

inline int always_harvest_decide() { return 0; }

}  // namespace ehrx
