#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "empnca/ca.hpp"
#include "test_support.hpp"

using namespace empnca;

namespace {

SimParams params_for(int m, int steps) {
    SimParams p;
    p.m = m;
    p.n_steps = steps;
    return p;
}

void set_weight(Genome& g, std::size_t output, std::size_t input, double w) {
    g.weights[output * kNetInputs + input] = w;
}

constexpr std::size_t kBias = 9;
constexpr std::size_t kWestSignal = 3;

} // namespace

TEST(SeedState, SingleCenterCell) {
    const auto s = seed_state(25);
    EXPECT_EQ(s.alive(12, 12), 1);
    EXPECT_EQ(s.live_count(), 1U);
    EXPECT_EQ(s.alive.cell_count() - s.live_count(), 624U);
    EXPECT_EQ(s.signal(12, 12), 0);
    EXPECT_TRUE(validate(s).empty());

    const auto small = seed_state(3);
    EXPECT_EQ(small.alive(1, 1), 1);
    EXPECT_EQ(small.live_count(), 1U);
}

TEST(SeedState, RejectsEvenOrTinyGrids) {
    EXPECT_THROW((void)seed_state(4), ConfigError);
    EXPECT_THROW((void)seed_state(1), ConfigError);
    const auto even = seed_state(50, /*allow_even_m=*/true);
    EXPECT_EQ(even.alive(25, 25), 1);
}

TEST(SimParams, Validation) {
    EXPECT_THROW(params_for(25, 51).validate(), ConfigError);
    EXPECT_THROW(params_for(25, 0).validate(), ConfigError);
    EXPECT_THROW(params_for(24, 50).validate(), ConfigError);
    auto p = params_for(25, 50);
    p.decay = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.decay = 1.0;
    p.diffusion = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Genome, RejectsWrongLengthAndNonFinite) {
    std::vector<double> w(49, 0.0);
    EXPECT_THROW((void)Genome::from_span(w), DataError);
    w.push_back(std::nan(""));
    EXPECT_THROW((void)Genome::from_span(w), DataError);
    w.back() = 0.5;
    EXPECT_EQ(Genome::from_span(w).weights.back(), 0.5);
}

TEST(Step, ZeroGenomeIsInert) {
    const auto params = params_for(25, 50);
    const auto r = step(seed_state(25), Genome{}, params);
    EXPECT_EQ(r.state.live_count(), 1U);
    // tanh(0) = 0 maps to round(255 * 0.5) = 128 before diffusion.
    EXPECT_EQ(r.actions(12, 12), 128);
    // Diffusion: round(0.9 * (0.5 * 128 + 0.5 * 0)) = round(57.6) = 58.
    EXPECT_EQ(r.state.signal(12, 12), 58);
    // A neighbor of the seed senses 58 / 4 = 14.5, rounded half away from zero.
    EXPECT_EQ(r.sensors(11, 12), 15);
    EXPECT_EQ(r.sensors(12, 12), 0);
}

TEST(Step, SaturatedGenomeGrowsAllFourNeighbors) {
    const auto r = step(seed_state(5), Genome::filled(10.0), params_for(5, 2));
    EXPECT_EQ(r.state.live_count(), 5U);
    for (int k = 0; k < 4; ++k) {
        EXPECT_EQ(r.state.alive(2 + kNeighborRow[k], 2 + kNeighborCol[k]), 1);
    }
    EXPECT_EQ(r.actions(2, 2), 255);
}

TEST(Step, LaterCellsSeeEarlierWritesAndNewbornsDoNotExecute) {
    Genome g;
    set_weight(g, 0, kWestSignal, 10.0); // north birth driven by the west neighbor's signal
    set_weight(g, 0, kBias, -5.0);
    set_weight(g, 1, kBias, 10.0);  // east always alive
    set_weight(g, 2, kBias, -10.0); // south always dead
    set_weight(g, 3, kBias, 10.0);  // west always alive
    set_weight(g, 4, kBias, 10.0);  // own signal 255

    CaState s(5);
    s.alive(2, 1) = 1;
    s.alive(2, 2) = 1;
    auto p = params_for(5, 2);
    const auto r = step(s, g, p);

    // (2,1) runs first and writes 255; (2,2) then reads it as its west signal.
    EXPECT_EQ(r.state.alive(1, 2), 1);
    EXPECT_EQ(r.state.alive(1, 1), 0);
    EXPECT_EQ(r.state.alive(2, 0), 1);
    EXPECT_EQ(r.state.alive(2, 3), 1);
    EXPECT_EQ(r.state.live_count(), 5U);
    // Newborn (2,0) did not execute, so its action is still its entry signal.
    EXPECT_EQ(r.actions(2, 0), 0);
    EXPECT_EQ(r.actions(2, 1), 255);
    EXPECT_EQ(r.actions(2, 2), 255);
}

TEST(Step, CellKilledBeforeItsTurnDoesNotExecute) {
    Genome g;
    for (std::size_t o = 0; o < 4; ++o) {
        set_weight(g, o, kBias, -10.0);
    }
    CaState s(5);
    s.alive(1, 2) = 1;
    s.signal(1, 2) = 10;
    s.alive(2, 2) = 1;
    s.signal(2, 2) = 77;
    const auto r = step(s, g, params_for(5, 2));
    EXPECT_EQ(r.state.alive(1, 2), 1);
    EXPECT_EQ(r.state.alive(2, 2), 0);
    EXPECT_EQ(r.state.signal(2, 2), 0);
    EXPECT_EQ(r.actions(1, 2), 128);
    EXPECT_EQ(r.actions(2, 2), 77);
}

TEST(Step, OffGridWritesAreDiscarded) {
    CaState s(3);
    s.alive(0, 0) = 1;
    const auto r = step(s, Genome::filled(10.0), params_for(3, 2));
    EXPECT_EQ(r.state.alive(0, 1), 1);
    EXPECT_EQ(r.state.alive(1, 0), 1);
    EXPECT_EQ(r.state.live_count(), 3U);
}

TEST(Step, WithoutDiffusionActionsMatchNextSignals) {
    std::mt19937_64 rng(11);
    auto p = params_for(9, 2);
    p.decay = 1.0;
    p.diffusion = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = fixtures::random_state(rng, 9);
        const auto r = step(s, fixtures::random_weights(rng, 2.0), p);
        for (int i = 0; i < 9; ++i) {
            for (int j = 0; j < 9; ++j) {
                if (r.state.alive(i, j) == 1) {
                    EXPECT_EQ(r.actions(i, j), r.state.signal(i, j));
                }
            }
        }
    }
}

TEST(Step, SensorsAreRoundedNeighborMeansAfterDiffusion) {
    std::mt19937_64 rng(5);
    const auto p = params_for(7, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto r = step(fixtures::random_state(rng, 7), fixtures::random_weights(rng, 2.0), p);
        for (int i = 0; i < 7; ++i) {
            for (int j = 0; j < 7; ++j) {
                int sum = 0;
                int count = 0;
                for (int k = 0; k < 4; ++k) {
                    if (r.state.signal.in_bounds(i + kNeighborRow[k], j + kNeighborCol[k])) {
                        sum += r.state.signal(i + kNeighborRow[k], j + kNeighborCol[k]);
                        ++count;
                    }
                }
                // Integer half-up rounding of sum / count (all values non-negative).
                EXPECT_EQ(r.sensors(i, j), (2 * sum + count) / (2 * count));
            }
        }
    }
}

TEST(Develop, ZeroGenomeNeverGrows) {
    const auto t = develop(Genome{}, params_for(25, 50));
    for (const auto& s : t.states) {
        EXPECT_EQ(s.live_count(), 1U);
    }
}

TEST(Develop, SaturatedGenomeGrowsOneRingPerStep) {
    const auto t = develop(Genome::filled(10.0), params_for(25, 50));
    for (int n = 0; n <= 50; ++n) {
        for (int i = 0; i < 25; ++i) {
            for (int j = 0; j < 25; ++j) {
                const int dist = std::abs(i - 12) + std::abs(j - 12);
                ASSERT_EQ(t.states[static_cast<std::size_t>(n)].alive(i, j), dist <= n ? 1 : 0)
                    << "n=" << n << " cell " << i << "," << j;
            }
        }
    }
    EXPECT_EQ(t.states.back().live_count(), 625U);
}

TEST(Develop, ShapeAndDeterminism) {
    std::mt19937_64 rng(3);
    const auto g = fixtures::random_weights(rng, 1.0);
    const auto p = params_for(11, 30);
    const auto a = develop(g, p);
    const auto b = develop(g, p);
    EXPECT_EQ(a.states.size(), 31U);
    EXPECT_EQ(a.actions.size(), 30U);
    EXPECT_EQ(a.sensors.size(), 30U);
    EXPECT_TRUE(a == b);
}

TEST(Develop, StructuralPropertiesOnRandomGenomes) {
    std::mt19937_64 rng(17);
    const auto p = params_for(11, 30);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = develop(fixtures::random_weights(rng, 3.0), p);
        for (std::size_t n = 0; n + 1 < t.states.size(); ++n) {
            const auto reach = fixtures::dilate(t.states[n].alive);
            for (int i = 0; i < 11; ++i) {
                for (int j = 0; j < 11; ++j) {
                    if (t.states[n + 1].alive(i, j) == 1) {
                        ASSERT_EQ(reach(i, j), 1);
                    }
                }
            }
            ASSERT_TRUE(validate(t.states[n + 1]).empty());
        }
    }
}
