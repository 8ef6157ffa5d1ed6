#include <cmath>

#include <gtest/gtest.h>

#include "ehrx/experiment.hpp"
#include "ehrx/simulation.hpp"

namespace ehrx {
namespace {

ChannelParams default_channel() { return ChannelParams::uniform(10, 1.0, 0.1); }

EnergyConfig default_energy(double c = 1.0, double v = 200.0) {
    EnergyConfig e;
    e.decode_cost_c = c;
    e.v = v;
    e.gamma_max = default_channel().default_gamma_max();
    return e;
}

TEST(Run, AlwaysHarvestHasNoThroughput) {
    const auto m = run(PolicyKind::always_harvest, default_channel(), default_energy(), 1000, 1, 0);
    EXPECT_EQ(m.throughput(), 0.0);
    EXPECT_EQ(m.full.throughput_eq1, 0.0);
    EXPECT_EQ(m.violations, 0u);
    EXPECT_EQ(m.full.decode_count, 0u);
}

TEST(Run, AlwaysHarvestBatteryOnlyDrainsBySensing) {
    const auto params = default_channel();
    const auto cfg = default_energy();
    Engine rng(9);
    auto state = ControllerState::initial(cfg);
    for (int t = 0; t < 10000; ++t) {
        const auto slot = sample_slot(params, cfg.gamma_max, rng);
        const double next = battery_step(state, always_harvest_decide(), slot.gamma, cfg);
        ASSERT_GE(next, state.energy - cfg.phi_se - cfg.phi_pi - 1e-12);
        state.energy = next;
    }
}

TEST(Run, Deterministic) {
    for (auto policy : {PolicyKind::lyapunov, PolicyKind::genie, PolicyKind::greedy}) {
        const auto a = run(policy, default_channel(), default_energy(), 20000, 77, 100);
        const auto b = run(policy, default_channel(), default_energy(), 20000, 77, 100);
        EXPECT_EQ(a, b);
        const auto c = run(policy, default_channel(), default_energy(), 20000, 78, 100);
        EXPECT_NE(a.full.throughput, c.full.throughput);
    }
}

TEST(Run, CountsAreConsistent) {
    const auto m = run(PolicyKind::lyapunov, default_channel(), default_energy(), 50000, 3, 1000);
    for (const auto* w : {&m.full, &m.measured}) {
        EXPECT_EQ(w->decode_count + w->harvest_count, w->slots);
        EXPECT_LE(w->idle_count, w->harvest_count);
        EXPECT_EQ(w->idle_count + w->success_count + w->collision_count, w->slots);
        EXPECT_LE(w->wasted_decodes, w->collision_count);
        EXPECT_GE(w->throughput, 0.0);
        EXPECT_NEAR(w->throughput, (1 - 0.01) * w->throughput_eq1, 1e-12);
        EXPECT_LT(w->energy_max, m.theta + m.gamma_max);
        EXPECT_GE(w->energy_min, 0.0);
    }
    EXPECT_EQ(m.full.slots, 50000u);
    EXPECT_EQ(m.measured.slots, 49000u);
    EXPECT_NEAR(m.theorem_bound, compute_B(default_energy()) / 200.0, 1e-12);
}

TEST(Run, Validation) {
    EXPECT_THROW(run(PolicyKind::lyapunov, default_channel(), default_energy(), 0, 1, 0), std::invalid_argument);
    EXPECT_THROW(run(PolicyKind::lyapunov, default_channel(), default_energy(), 10, 1, 10), std::invalid_argument);
    auto bad = default_energy();
    bad.v = -1;
    EXPECT_THROW(run(PolicyKind::lyapunov, default_channel(), bad, 10, 1, 0), std::invalid_argument);
    EXPECT_THROW(run(PolicyKind::lyapunov, ChannelParams::uniform(2, -1.0, 0.1), default_energy(), 10, 1, 0),
                 std::invalid_argument);
}

TEST(Run, LyapunovKeepsTheoremInvariantsOnDefaultConfig) {
    const auto m = run(PolicyKind::lyapunov, default_channel(), default_energy(1.0, 200.0), 1'000'000, 2024, 10'000);
    EXPECT_EQ(m.violations, 0u);
    EXPECT_EQ(m.battery_bound_breaches, 0u);
    EXPECT_EQ(m.low_energy_decodes, 0u);
    EXPECT_LT(m.full.energy_max, m.theta + m.gamma_max);
    EXPECT_GT(m.throughput(), 0.0);
}

TEST(Run, GenieBeatsGreedyOnSameStream) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (double c : {0.5, 2.0}) {
            const auto genie = run(PolicyKind::genie, default_channel(), default_energy(c), 200'000, seed, 1000);
            const auto greedy = run(PolicyKind::greedy, default_channel(), default_energy(c), 200'000, seed, 1000);
            EXPECT_GE(genie.throughput(), greedy.throughput());
            EXPECT_EQ(genie.measured.wasted_decodes, 0u);
            EXPECT_GT(greedy.measured.wasted_decodes, 0u);
        }
    }
}

TEST(Run, NoAccessNeverQueriesSuccessProb) {
    const auto params = ChannelParams::uniform(10, 1.0, 0.0);
    auto e = default_energy();
    const auto m = run(PolicyKind::lyapunov, params, e, 1000, 1, 0);
    EXPECT_EQ(m.throughput(), 0.0);
    EXPECT_EQ(m.full.idle_count, 1000u);
}

TEST(SuccessProbLookup, InterpolationError) {
    const auto params = default_channel();
    const double gmax = params.default_gamma_max();
    const SuccessProbLookup exact(params, gmax, false);
    const SuccessProbLookup fast(params, gmax, true);
    double worst = 0.0;
    for (double g = 1e-4; g < gmax; g *= 1.01) worst = std::max(worst, std::abs(exact(g) - fast(g)));
    for (double g = 0.0005; g < 20; g += 0.0137) worst = std::max(worst, std::abs(exact(g) - fast(g)));
    EXPECT_LT(worst, 1e-4);
    EXPECT_DOUBLE_EQ(fast(gmax), exact(gmax));
}

TEST(Run, SeedReplicatesAreStable) {
    ExperimentConfig cfg;
    cfg.energy = default_energy(1.0, 200.0);
    cfg.run.seeds = 10;
    const auto runs = run_replicates(cfg);
    std::vector<double> tp;
    for (const auto& m : runs) tp.push_back(m.throughput());
    const auto s = summarize(tp);
    EXPECT_LT(s.std_error / s.mean, 0.02);
}

}  // namespace
}  // namespace ehrx
