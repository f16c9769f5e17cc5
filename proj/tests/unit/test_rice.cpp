#include "ocelad/dyadic.hpp"
#include "ocelad/linalg.hpp"
#include "ocelad/rice.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <bit>

using namespace ocelad;

namespace {

using Iv = DyadicInterval;

RiceConfig small_config(Eigen::Index n = 3) {
    RiceConfig cfg;
    cfg.dim = n;
    cfg.eta0 = 0.2;
    cfg.loss = {0.05, Regularizer::NuclearNorm};
    return cfg;
}

std::vector<Constraint> random_stream(std::uint64_t seed, Eigen::Index n, int T) {
    oracle::Gen g(seed);
    std::vector<Constraint> out;
    for (int t = 1; t <= T; ++t) {
        auto c = g.constraint(n, 1.2);
        c.t = t;
        out.push_back(c);
    }
    return out;
}

} // namespace

TEST(ActiveIntervals, Examples) {
    EXPECT_EQ(active_intervals(1, 1), (std::vector<Iv>{{0, 1, 1}}));
    EXPECT_EQ(active_intervals(4, 1), (std::vector<Iv>{{0, 4, 4}, {1, 4, 5}, {2, 4, 7}}));
    EXPECT_EQ(active_intervals(3, 1), (std::vector<Iv>{{0, 3, 3}, {1, 2, 3}}));
}

TEST(ActiveIntervals, MatchesEnumeration) {
    for (std::int64_t t = 1; t <= 1024; ++t)
        EXPECT_EQ(active_intervals(t, 1), oracle::dyadic_bruteforce(t)) << "t=" << t;
}

TEST(ActiveIntervals, CountIsFloorLogPlusOne) {
    for (std::int64_t t = 1; t <= 4096; ++t)
        EXPECT_EQ(static_cast<int>(active_intervals(t, 1).size()), std::bit_width(
                      static_cast<std::uint64_t>(t)));
}

TEST(ActiveIntervals, MaxLevelCap) {
    const auto ivs = active_intervals(1000, 1, 3);
    ASSERT_EQ(ivs.size(), 4u);
    EXPECT_EQ(ivs.back().level, 3);
}

TEST(ActiveIntervals, BlocksForLargerBase) {
    // i0 = 3: steps 1..3 are block 1, 4..6 block 2
    EXPECT_EQ(active_intervals(1, 3), (std::vector<Iv>{{0, 1, 3}}));
    EXPECT_EQ(active_intervals(3, 3), (std::vector<Iv>{{0, 1, 3}}));
    EXPECT_EQ(active_intervals(4, 3), (std::vector<Iv>{{0, 4, 6}, {1, 4, 9}}));
    for (std::int64_t t = 1; t <= 300; ++t)
        for (const auto &iv : active_intervals(t, 3)) {
            EXPECT_TRUE(iv.contains(t));
            EXPECT_EQ(iv.length(), 3 << iv.level);
        }
}

TEST(ActiveIntervals, RejectsBadArguments) {
    EXPECT_THROW(active_intervals(0, 1), std::invalid_argument);
    EXPECT_THROW(active_intervals(1, 0), std::invalid_argument);
}

TEST(Rice, FirstStepSpawnsIdentityLearner) {
    RiceEnsemble ens(small_config());
    Constraint c;
    c.t = 1;
    c.x = Vector::Zero(3);
    c.z = Vector::Zero(3);
    ens.step(1, c);
    ASSERT_EQ(ens.last_spawned().size(), 1u);
    EXPECT_EQ(ens.last_spawned()[0].interval, (Iv{0, 1, 1}));
    EXPECT_EQ(ens.last_spawned()[0].state, MetricState::identity(3, 2.0));
    EXPECT_TRUE(ens.last_retired().empty());
}

TEST(Rice, SecondStepRetroInitializes) {
    auto stream = random_stream(31, 3, 2);
    RiceEnsemble ens(small_config());
    const auto first = ens.step(1, stream[0]);
    ens.step(2, stream[1]);
    EXPECT_EQ(ens.last_retired(), (std::vector<Iv>{{0, 1, 1}}));
    ASSERT_EQ(ens.last_spawned().size(), 2u);
    EXPECT_EQ(ens.last_spawned()[0].interval, (Iv{0, 2, 2}));
    EXPECT_EQ(ens.last_spawned()[1].interval, (Iv{1, 2, 3}));
    EXPECT_EQ(ens.last_spawned()[1].state, first[0].state);
    // level 0 warm start
    EXPECT_EQ(ens.last_spawned()[0].state, first[0].state);
}

TEST(Rice, ZeroGradientStreamStaysAtIdentity) {
    auto cfg = small_config();
    cfg.loss.rho = 0.0;
    RiceEnsemble ens(cfg);
    for (int t = 1; t <= 200; ++t) {
        Constraint c;
        c.t = t;
        c.x = Vector::Ones(3);
        c.z = Vector::Ones(3);
        for (const auto &est : ens.step(t, c))
            ASSERT_EQ(est.state, MetricState::identity(3, 2.0));
    }
}

TEST(Rice, RatesStrictlyDecreaseWithLevel) {
    RiceEnsemble ens(small_config());
    const auto stream = random_stream(32, 3, 300);
    for (const auto &c : stream) {
        ens.step(c.t, c);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto &[iv, learner] : ens.learners()) {
            EXPECT_LT(learner.eta(), prev);
            EXPECT_DOUBLE_EQ(learner.eta(), 0.2 / std::sqrt(static_cast<double>(iv.length())));
            prev = learner.eta();
        }
    }
}

TEST(Rice, SpawnedStatesAreValid) {
    RiceEnsemble ens(small_config(4));
    for (const auto &c : random_stream(33, 4, 500)) {
        ens.step(c.t, c);
        for (const auto &sp : ens.last_spawned())
            EXPECT_NO_THROW(sp.state.validate());
    }
}

TEST(Rice, Deterministic) {
    const auto stream = random_stream(34, 3, 400);
    RiceEnsemble a(small_config()), b(small_config());
    for (const auto &c : stream)
        EXPECT_EQ(a.step(c.t, c).back().state, b.step(c.t, c).back().state);
    EXPECT_EQ(a, b);
}

TEST(Rice, OutOfOrderStepRejected) {
    RiceEnsemble ens(small_config());
    const auto stream = random_stream(35, 3, 3);
    ens.step(1, stream[0]);
    EXPECT_THROW(ens.step(3, stream[2]), std::invalid_argument);
    EXPECT_THROW(ens.step(1, stream[0]), std::invalid_argument);
}

TEST(Rice, RestoreRoundTrip) {
    const auto stream = random_stream(36, 3, 200);
    RiceEnsemble full(small_config());
    RiceEnsemble half(small_config());
    for (int i = 0; i < 100; ++i) {
        full.step(stream[static_cast<std::size_t>(i)].t, stream[static_cast<std::size_t>(i)]);
        half.step(stream[static_cast<std::size_t>(i)].t, stream[static_cast<std::size_t>(i)]);
    }
    auto restored = RiceEnsemble::restore(half.config(), half.next_step(), half.learners(),
                                          half.last_estimates());
    for (std::size_t i = 100; i < stream.size(); ++i) {
        full.step(stream[i].t, stream[i]);
        restored.step(stream[i].t, stream[i]);
    }
    EXPECT_EQ(full, restored);
}

TEST(Rice, RestoreRejectsWrongSchedule) {
    RiceEnsemble ens(small_config());
    const auto stream = random_stream(37, 3, 10);
    for (const auto &c : stream)
        ens.step(c.t, c);
    EXPECT_THROW(RiceEnsemble::restore(ens.config(), ens.next_step() + 1, ens.learners(),
                                       ens.last_estimates()),
                 std::invalid_argument);
}

TEST(Rice, ConfigValidation) {
    auto cfg = small_config();
    cfg.eta0 = 0.0;
    EXPECT_THROW(RiceEnsemble{cfg}, std::invalid_argument);
    cfg = small_config();
    cfg.mu0 = 0.5;
    EXPECT_THROW(RiceEnsemble{cfg}, std::invalid_argument);
}
