#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "empnca/evolution.hpp"
#include "empnca/shapes.hpp"
#include "test_support.hpp"

using namespace empnca;

namespace {

Individual make(int age, std::vector<double> objectives) {
    Individual ind;
    ind.age = age;
    ind.objectives = std::move(objectives);
    ind.evaluated = true;
    return ind;
}

// Loss derived from the first weight so the stub is pure and cheap.
Evaluation stub_eval(const Genome& g) {
    Evaluation e;
    e.loss_full = 0.5 + 0.5 * std::tanh(g.weights[0]);
    e.loss_first_half = 0.5 + 0.5 * std::tanh(g.weights[1]);
    e.loss_second_half = 0.5 + 0.5 * std::tanh(g.weights[2]);
    e.empowerment_bits = 4.0 + 4.0 * std::tanh(g.weights[3]);
    return e;
}

EvoParams micro(std::uint64_t seed) {
    EvoParams p;
    p.population = 8;
    p.generations = 20;
    p.seed = seed;
    return p;
}

} // namespace

TEST(Dominates, Examples) {
    EXPECT_TRUE(dominates(make(1, {0.2}), make(3, {0.4})));
    EXPECT_FALSE(dominates(make(3, {0.4}), make(1, {0.2})));
    EXPECT_FALSE(dominates(make(1, {0.2}), make(1, {0.2})));
    const auto x = make(1, {0.2, -1.0});
    const auto y = make(2, {0.1, -2.0});
    EXPECT_FALSE(dominates(x, y));
    EXPECT_FALSE(dominates(y, x));
    EXPECT_THROW((void)dominates(make(1, {0.2}), make(1, {0.2, 0.1})), std::logic_error);
}

TEST(Dominates, AgeZeroOnlyDominatedByAgeZero) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> age(0, 3);
    std::uniform_real_distribution<double> obj(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto x = make(age(rng), {obj(rng), obj(rng)});
        const auto y = make(0, {obj(rng), obj(rng)});
        if (dominates(x, y)) {
            EXPECT_EQ(x.age, 0);
        }
    }
}

TEST(Treatments, ObjectiveArity) {
    const Evaluation e{0.1, 0.2, 0.3, 1.5};
    EXPECT_EQ(selection_objectives(Treatment::bi_error, e), std::vector<double>({0.1}));
    EXPECT_EQ(selection_objectives(Treatment::tri_error_empowerment, e), std::vector<double>({0.1, -1.5}));
    EXPECT_EQ(selection_objectives(Treatment::tri_error, e), std::vector<double>({0.2, 0.3}));
    EXPECT_EQ(selection_objectives(Treatment::bi_empowerment, e), std::vector<double>({-1.5}));
    for (auto t : kAllTreatments) {
        EXPECT_EQ(parse_treatment(to_string(t)), t);
    }
    EXPECT_THROW((void)parse_treatment("quad_error"), ConfigError);
}

TEST(Mutate, DeterministicForFixedSeed) {
    std::mt19937_64 rng(2);
    const auto parent = random_genome(rng);
    Rng a(42);
    Rng b(42);
    EXPECT_EQ(mutate(parent, a, 0.1, 0.25), mutate(parent, b, 0.1, 0.25));
}

TEST(Mutate, TinySigmaStillChangesTheChild) {
    Rng rng(3);
    const Genome parent;
    const auto child = mutate(parent, rng, 1.0, 1e-12);
    EXPECT_NE(child, parent);
    for (double w : child.weights) {
        EXPECT_LT(std::abs(w), 1e-9);
    }
}

TEST(Mutate, ChangedWeightCountMatchesTruncatedBinomial) {
    Rng rng(5);
    const Genome parent;
    double total = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto child = mutate(parent, rng, 0.1, 0.25);
        int changed = 0;
        for (std::size_t k = 0; k < kGenomeLength; ++k) {
            changed += child.weights[k] != parent.weights[k] ? 1 : 0;
        }
        ASSERT_GE(changed, 1);
        total += changed;
    }
    const double mean = total / 10000.0;
    // Binomial(50, 0.1) conditioned on >= 1: 5 / (1 - 0.9^50).
    const double expected = 5.0 / (1.0 - std::pow(0.9, 50));
    EXPECT_NEAR(expected, 5.025902371034247, 1e-12);
    EXPECT_GE(mean, 4.0);
    EXPECT_LE(mean, 6.0);
    EXPECT_NEAR(mean, expected, 0.1);
}

TEST(GenerationStep, StrictlyBetterChildCullsParent) {
    // Parents are zero genomes with loss 0.5; every mutated or random genome scores 0.1.
    Evaluator eval = [](const Genome& g) {
        Evaluation e;
        e.loss_full = g == Genome{} ? 0.5 : 0.1;
        return e;
    };
    std::vector<Individual> pop(2);
    for (auto& ind : pop) {
        ind.eval.loss_full = 0.5;
        ind.objectives = {0.5};
        ind.evaluated = true;
    }
    EvoParams p;
    p.population = 2;
    Rng rng(9);
    // Candidates: two parents (age 1, 0.5), one child (age 1, 0.1), newcomer (age 0, 0.1).
    // Newcomer dominates all; child dominates both parents; so the parents are culled.
    const auto next = generation_step(pop, Treatment::bi_error, p, eval, rng);
    ASSERT_EQ(next.size(), 2U);
    for (const auto& ind : next) {
        EXPECT_EQ(ind.eval.loss_full, 0.1);
        EXPECT_NE(ind.genome, Genome{});
    }
    EXPECT_EQ(std::min(next[0].age, next[1].age), 0);
    EXPECT_EQ(std::max(next[0].age, next[1].age), 1);
}

TEST(GenerationStep, IdenticalObjectivesKeepPopulationSize) {
    Evaluator flat = [](const Genome&) { return Evaluation{0.3, 0.3, 0.3, 1.0}; };
    auto params = micro(4);
    auto pop = initial_population(params);
    evaluate_all(pop, Treatment::tri_error, flat, 1);
    for (auto& ind : pop) {
        ind.age = 0;
    }
    Rng rng(4);
    for (int g = 0; g < 5; ++g) {
        pop = generation_step(pop, Treatment::tri_error, params, flat, rng);
        EXPECT_EQ(pop.size(), params.population);
    }
}

TEST(GenerationStep, ExpandStructure) {
    auto params = micro(6);
    auto pop = initial_population(params);
    evaluate_all(pop, Treatment::bi_error, stub_eval, 1);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        pop[i].age = static_cast<int>(i);
    }
    Rng rng(6);
    const auto cand = expand(pop, params, rng);
    ASSERT_EQ(cand.size(), 2 * pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        EXPECT_EQ(cand[i].age, pop[i].age + 1);
        EXPECT_EQ(cand[i].genome, pop[i].genome);
    }
    for (std::size_t i = pop.size(); i + 1 < cand.size(); ++i) {
        EXPECT_FALSE(cand[i].evaluated);
        EXPECT_GE(cand[i].age, 1);
    }
    EXPECT_EQ(cand.back().age, 0);
}

TEST(Culling, FrontZeroUndominatedByCulled) {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> age(0, 4);
    std::uniform_real_distribution<double> obj(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Individual> cand;
        for (int i = 0; i < 16; ++i) {
            cand.push_back(make(age(gen), {obj(gen), std::round(obj(gen) * 4) / 4}));
        }
        Rng rng(trial);
        const auto keep = select_survivors(cand, 8, rng);
        ASSERT_EQ(keep.size(), 8U);
        std::vector<bool> kept(cand.size(), false);
        std::vector<Individual> survivors;
        for (auto i : keep) {
            kept[i] = true;
            survivors.push_back(cand[i]);
        }
        const auto fronts = non_dominated_sort(survivors);
        for (auto i : fronts.front()) {
            for (auto j : fronts.front()) {
                EXPECT_FALSE(dominates(survivors[i], survivors[j]));
            }
            for (std::size_t c = 0; c < cand.size(); ++c) {
                if (!kept[c]) {
                    EXPECT_FALSE(dominates(cand[c], survivors[i]));
                }
            }
        }
    }
}

TEST(Evolve, SingleGenerationShape) {
    EvoParams p;
    p.population = 2;
    p.generations = 1;
    for (auto t : kAllTreatments) {
        const auto r = evolve(t, p, stub_eval);
        EXPECT_EQ(r.log.rows.size(), 1U);
        EXPECT_EQ(r.log.rows.front().generation, 1);
        EXPECT_EQ(r.population.size(), 2U);
    }
}

TEST(Evolve, ConstantEvaluatorGivesFlatCurve) {
    Evaluator flat = [](const Genome&) { return Evaluation{0.25, 0.25, 0.25, 0.0}; };
    const auto r = evolve(Treatment::bi_error, micro(8), flat);
    for (const auto& row : r.log.rows) {
        EXPECT_EQ(row.best_loss, 0.25);
    }
}

TEST(Evolve, WorkerCountDoesNotChangeResults) {
    SimParams sim;
    sim.m = 7;
    sim.n_steps = 10;
    const auto target = make_square(7, 3);
    Evaluator eval = [&](const Genome& g) { return evaluate_genome(g, sim, target); };
    EvoParams p = micro(12);
    p.generations = 5;
    const auto a = evolve(Treatment::tri_error_empowerment, p, eval, 1);
    const auto b = evolve(Treatment::tri_error_empowerment, p, eval, 4);
    EXPECT_EQ(a.log.rows, b.log.rows);
}

TEST(Evolve, EvaluatorFailureAborts) {
    Evaluator bad = [](const Genome&) -> Evaluation { throw std::runtime_error("boom"); };
    EXPECT_THROW((void)evolve(Treatment::bi_error, micro(1), bad), std::runtime_error);
}

TEST(RunLog, ChampionColumns) {
    std::vector<Individual> pop(3);
    pop[0].eval = {0.4, 0.4, 0.4, 2.0};
    pop[1].eval = {0.1, 0.1, 0.1, 0.5};
    pop[2].eval = {0.6, 0.6, 0.6, 3.0};
    const auto loss_row = summarize(4, pop, Treatment::tri_error_empowerment);
    EXPECT_EQ(loss_row.best_loss, 0.1);
    EXPECT_EQ(loss_row.best_empowerment_bits, 0.5);
    EXPECT_NEAR(loss_row.mean_empowerment_bits, 5.5 / 3.0, 1e-15);
    const auto emp_row = summarize(4, pop, Treatment::bi_empowerment);
    EXPECT_EQ(emp_row.best_loss, 0.1);
    EXPECT_EQ(emp_row.best_empowerment_bits, 3.0);
}

TEST(RunLog, CsvRoundTrip) {
    const auto r = evolve(Treatment::tri_error, micro(13), stub_eval);
    std::ostringstream os;
    write_runlog_csv(os, r.log);
    const auto path = std::filesystem::temp_directory_path() / "empnca_runlog_roundtrip.csv";
    write_runlog_csv(path, r.log);
    EXPECT_EQ(read_runlog_csv(path), r.log.rows);
    std::filesystem::remove(path);
    EXPECT_EQ(os.str().substr(0, kRunLogHeader.size()), kRunLogHeader);
}

TEST(EvoParams, Validation) {
    EvoParams p;
    p.population = 1;
    EXPECT_THROW(p.validate(), ConfigError);
    p.population = 2;
    p.mutation_rate = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.mutation_rate = 0.1;
    p.mutation_sigma = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p.mutation_sigma = 0.1;
    p.generations = 0;
    EXPECT_THROW(p.validate(), ConfigError);
}
