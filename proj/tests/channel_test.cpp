#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ehrx/channel.hpp"
#include "oracles.hpp"

namespace ehrx {
namespace {

TEST(RateOf, Values) {
    EXPECT_DOUBLE_EQ(rate_of(0.0), 0.0);
    EXPECT_DOUBLE_EQ(rate_of(1.0), 1.0);
    EXPECT_DOUBLE_EQ(rate_of(3.0), 2.0);
    EXPECT_DOUBLE_EQ(rate_of(std::exp(1.0) - 1.0, LogBase::natural), 1.0);
}

TEST(ChannelParams, Validation) {
    EXPECT_NO_THROW(ChannelParams::uniform(10, 1.0, 0.1).validate());
    EXPECT_THROW(ChannelParams::uniform(21, 1.0, 0.1).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{}, {}, 1.0, 1e-6}).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0, 2.0}, {0.1}, 1.0, 1e-6}).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0, 0.0}, {0.1, 0.1}, 1.0, 1e-6}).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0}, {1.5}, 1.0, 1e-6}).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0}, {0.5}, 0.0, 1e-6}).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0}, {0.5}, 1.0, 0.02}).validate(), std::invalid_argument);
    EXPECT_THROW((ChannelParams{{1.0}, {0.5}, 1.0, 0.0}).validate(), std::invalid_argument);
}

TEST(ChannelParams, GainCapIsUpperQuantile) {
    const auto p = ChannelParams::uniform(3, 2.0, 0.5, 1.5, 1e-6);
    EXPECT_NEAR(p.gain_cap(0), 2.0 * std::log(1e6), 1e-12);
    EXPECT_NEAR(p.default_gamma_max(), 1.5 * 3 * 2.0 * std::log(1e6), 1e-9);
}

TEST(SampleSlot, NoAccessMeansIdle) {
    const auto p = ChannelParams::uniform(5, 1.0, 0.0);
    Engine rng(3);
    for (int i = 0; i < 1000; ++i) {
        const auto s = sample_slot(p, p.default_gamma_max(), rng);
        EXPECT_TRUE(s.active_set().empty());
        EXPECT_EQ(s.gamma, 0.0);
        EXPECT_FALSE(s.success);
        EXPECT_EQ(s.rate, 0.0);
    }
}

TEST(SampleSlot, SingleAlwaysActiveTransmitterSucceeds) {
    const auto p = ChannelParams::uniform(1, 1.7, 1.0, 2.0);
    Engine rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto s = sample_slot(p, p.default_gamma_max(), rng);
        EXPECT_TRUE(s.success);
        EXPECT_GT(s.gamma, 0.0);
        EXPECT_DOUBLE_EQ(s.gamma, 2.0 * s.gains[0]);
    }
}

TEST(SampleSlot, Invariants) {
    const ChannelParams p{{0.5, 1.0, 2.0, 4.0}, {0.3, 0.6, 0.2, 0.9}, 1.3, 1e-3};
    const double cap = 4.0;  // deliberately below the natural maximum
    Engine rng(5);
    for (int i = 0; i < 100000; ++i) {
        const auto s = sample_slot(p, cap, rng);
        EXPECT_GE(s.gamma, 0.0);
        EXPECT_LE(s.gamma, cap);
        EXPECT_EQ(s.gamma == 0.0, s.active_count == 0);
        EXPECT_EQ(s.success, s.active_count == 1);
        EXPECT_EQ(s.active_set().size(), s.active_count);
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (s.is_active(k)) {
                EXPECT_GT(s.gains[k], 0.0);
                EXPECT_LT(s.gains[k], p.gain_cap(k));
            } else {
                EXPECT_EQ(s.gains[k], 0.0);
            }
        }
    }
}

TEST(SampleSlot, Reproducible) {
    const auto p = ChannelParams::uniform(10, 1.0, 0.3);
    Engine a(42), b(42);
    for (int i = 0; i < 10000; ++i) {
        const auto x = sample_slot(p, p.default_gamma_max(), a);
        const auto y = sample_slot(p, p.default_gamma_max(), b);
        ASSERT_EQ(x.active_mask, y.active_mask);
        ASSERT_EQ(x.gamma, y.gamma);
        ASSERT_EQ(x.gains, y.gains);
    }
}

TEST(SampleSlot, MeanActiveCountMatchesBinomial) {
    const auto p = ChannelParams::uniform(10, 1.0, 0.1);
    Engine rng(2024);
    const int n = 1'000'000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += sample_slot(p, p.default_gamma_max(), rng).active_count;
    // Binomial(10, 0.1) mean
    EXPECT_NEAR(total / n, 10 * 0.1, 0.01);
}

TEST(SampleSlot, TruncatedGainMean) {
    const double eps = 1e-6;
    const auto p = ChannelParams::uniform(1, 1.0, 1.0, 1.0, eps);
    const double cap = std::log(1.0 / eps);
    const double oracle = oracle::integrate([](double x) { return x * std::exp(-x); }, 0.0, cap);
    EXPECT_NEAR(oracle, 1.0 - eps * (1.0 + std::log(1.0 / eps)), 1e-12);

    Engine rng(7);
    const int n = 1'000'000;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += sample_slot(p, p.default_gamma_max(), rng).gamma;
    EXPECT_NEAR(total / n, oracle, 0.01 * oracle);
}

TEST(SampleSlot, SingleActiveProbability) {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t n : {2u, 5u, 10u}) {
        ChannelParams p;
        for (std::size_t i = 0; i < n; ++i) {
            p.means.push_back(0.5 + unif(gen));
            p.access_probs.push_back(0.4 * unif(gen));
        }
        double expected = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double w = p.access_probs[i];
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) w *= 1 - p.access_probs[j];
            expected += w;
        }
        Engine rng(n);
        const int m = 1'000'000;
        int hits = 0;
        for (int i = 0; i < m; ++i) hits += sample_slot(p, p.default_gamma_max(), rng).success;
        EXPECT_NEAR(static_cast<double>(hits) / m, expected, 0.005) << "n=" << n;
    }
}

TEST(Random, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
    Engine rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform01(rng);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

}  // namespace
}  // namespace ehrx
