#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "empnca/ca.hpp"
#include "empnca/errors.hpp"
#include "empnca/objectives.hpp"

// Age-Fitness Pareto Optimization. Each generation the population of P grows to 2P
// (P - 1 mutated children plus one random age-0 newcomer), then non-dominated sorting
// over (age, objectives...) culls it back to P. Every coordinate is minimized.

namespace empnca {

enum class Treatment { bi_error, tri_error_empowerment, tri_error, bi_empowerment };

inline constexpr Treatment kAllTreatments[] = {Treatment::bi_error, Treatment::tri_error_empowerment,
                                               Treatment::tri_error, Treatment::bi_empowerment};

[[nodiscard]] inline std::string_view to_string(Treatment t) noexcept {
    switch (t) {
    case Treatment::bi_error:
        return "bi_error";
    case Treatment::tri_error_empowerment:
        return "tri_error_empowerment";
    case Treatment::tri_error:
        return "tri_error";
    case Treatment::bi_empowerment:
        return "bi_empowerment";
    }
    return "unknown";
}

[[nodiscard]] inline Treatment parse_treatment(std::string_view name) {
    for (auto t : kAllTreatments) {
        if (name == to_string(t)) {
            return t;
        }
    }
    throw ConfigError("unknown treatment '" + std::string(name) + "'");
}

/// Selection objectives (excluding age) a treatment minimizes.
[[nodiscard]] inline std::vector<double> selection_objectives(Treatment t, const Evaluation& e) {
    switch (t) {
    case Treatment::bi_error:
        return {e.loss_full};
    case Treatment::tri_error_empowerment:
        return {e.loss_full, 0.0 - e.empowerment_bits};
    case Treatment::tri_error:
        return {e.loss_first_half, e.loss_second_half};
    case Treatment::bi_empowerment:
        return {0.0 - e.empowerment_bits};
    }
    return {};
}

struct EvoParams {
    std::size_t population = 400;
    int generations = 2000;
    double mutation_rate = 0.1;
    double mutation_sigma = 0.25;
    std::uint64_t seed = 0;

    void validate() const {
        if (population < 2) {
            throw ConfigError("population size must be at least 2");
        }
        if (generations < 1) {
            throw ConfigError("generation count must be at least 1");
        }
        if (!(mutation_rate > 0.0 && mutation_rate <= 1.0)) {
            throw ConfigError("mutation rate must lie in (0, 1]");
        }
        if (!(mutation_sigma > 0.0)) {
            throw ConfigError("mutation sigma must be positive");
        }
    }
};

struct Individual {
    Genome genome;
    int age = 0;
    Evaluation eval;
    std::vector<double> objectives;
    bool evaluated = false;
};

/// Pareto dominance over (age, objectives...), all minimized.
[[nodiscard]] inline bool dominates(const Individual& x, const Individual& y) {
    if (x.objectives.size() != y.objectives.size()) {
        throw std::logic_error("dominance between individuals from different treatments");
    }
    if (x.age > y.age) {
        return false;
    }
    bool strictly = x.age < y.age;
    for (std::size_t i = 0; i < x.objectives.size(); ++i) {
        if (x.objectives[i] > y.objectives[i]) {
            return false;
        }
        strictly = strictly || x.objectives[i] < y.objectives[i];
    }
    return strictly;
}

using Rng = std::mt19937_64;
using Evaluator = std::function<Evaluation(const Genome&)>;

// splitmix64 finalizer; derives independent stream seeds from (seed, tag).
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

[[nodiscard]] inline Genome random_genome(Rng& rng) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Genome g;
    for (double& w : g.weights) {
        w = uniform(rng);
    }
    return g;
}

/// Perturbs each weight with probability `rate` by a N(0, sigma^2) draw. Redraws until
/// at least one weight actually changes.
[[nodiscard]] inline Genome mutate(const Genome& parent, Rng& rng, double rate, double sigma) {
    std::bernoulli_distribution pick(rate);
    std::normal_distribution<double> noise(0.0, sigma);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Genome child = parent;
        for (double& w : child.weights) {
            if (pick(rng)) {
                w += noise(rng);
            }
        }
        if (child != parent) {
            return child;
        }
    }
    // Only reachable when sigma is far below the weights' ulp.
    Genome child = parent;
    std::uniform_int_distribution<std::size_t> slot(0, kGenomeLength - 1);
    double& w = child.weights[slot(rng)];
    w = std::nextafter(w, w + 1.0);
    return child;
}

/// Evaluates every unevaluated individual with up to `workers` threads. Results are
/// written by index, so the outcome does not depend on the worker count.
inline void evaluate_all(std::vector<Individual>& individuals, Treatment treatment, const Evaluator& evaluator,
                         unsigned workers) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < individuals.size(); ++i) {
        if (!individuals[i].evaluated) {
            todo.push_back(i);
        }
    }
    std::vector<std::exception_ptr> errors(todo.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next.fetch_add(1); k < todo.size(); k = next.fetch_add(1)) {
            try {
                individuals[todo[k]].eval = evaluator(individuals[todo[k]].genome);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(todo.size())));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(work);
        }
    }
    for (std::size_t k = 0; k < todo.size(); ++k) {
        if (errors[k]) {
            try {
                std::rethrow_exception(errors[k]);
            } catch (const std::exception& e) {
                throw std::runtime_error(fmt::format("evaluation of candidate {} failed: {}", todo[k], e.what()));
            }
        }
        auto& ind = individuals[todo[k]];
        ind.objectives = selection_objectives(treatment, ind.eval);
        ind.evaluated = true;
    }
}

/// Fronts of a fast non-dominated sort; front 0 is the Pareto front. Indices within
/// each front are ascending.
[[nodiscard]] inline std::vector<std::vector<std::size_t>> non_dominated_sort(const std::vector<Individual>& pop) {
    const std::size_t n = pop.size();
    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<std::size_t> domination_count(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(pop[i], pop[j])) {
                dominated_by[i].push_back(j);
                ++domination_count[j];
            } else if (dominates(pop[j], pop[i])) {
                dominated_by[j].push_back(i);
                ++domination_count[i];
            }
        }
    }
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        if (domination_count[i] == 0) {
            current.push_back(i);
        }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current) {
            for (auto j : dominated_by[i]) {
                if (--domination_count[j] == 0) {
                    next.push_back(j);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Indices (ascending) of the `keep` candidates that survive: whole fronts while they
/// fit, then a uniformly random subset of the boundary front.
[[nodiscard]] inline std::vector<std::size_t> select_survivors(const std::vector<Individual>& candidates,
                                                               std::size_t keep, Rng& rng) {
    std::vector<std::size_t> chosen;
    chosen.reserve(keep);
    for (auto front : non_dominated_sort(candidates)) {
        if (chosen.size() + front.size() <= keep) {
            chosen.insert(chosen.end(), front.begin(), front.end());
        } else {
            std::shuffle(front.begin(), front.end(), rng);
            front.resize(keep - chosen.size());
            chosen.insert(chosen.end(), front.begin(), front.end());
        }
        if (chosen.size() == keep) {
            break;
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

[[nodiscard]] inline std::vector<Individual> initial_population(const EvoParams& params) {
    Rng rng(mix_seed(params.seed, 0));
    std::vector<Individual> pop(params.population);
    for (auto& ind : pop) {
        ind.genome = random_genome(rng);
    }
    return pop;
}

/// Candidates for one generation: ages of `pop` incremented, followed by P - 1 mutated
/// children (inheriting the parent's incremented age) and one random newcomer at age 0.
[[nodiscard]] inline std::vector<Individual> expand(const std::vector<Individual>& pop, const EvoParams& params,
                                                    Rng& rng) {
    std::vector<Individual> candidates = pop;
    for (auto& ind : candidates) {
        ++ind.age;
    }
    const std::size_t p = pop.size();
    std::uniform_int_distribution<std::size_t> parent_pick(0, p - 1);
    const std::uint64_t child_seed_base = rng();
    for (std::size_t k = 0; k + 1 < p; ++k) {
        const Individual& parent = candidates[parent_pick(rng)];
        Rng child_rng(mix_seed(child_seed_base, k));
        Individual child;
        child.genome = mutate(parent.genome, child_rng, params.mutation_rate, params.mutation_sigma);
        child.age = parent.age;
        candidates.push_back(std::move(child));
    }
    Rng fresh_rng(mix_seed(child_seed_base, p));
    Individual fresh;
    fresh.genome = random_genome(fresh_rng);
    candidates.push_back(std::move(fresh));
    return candidates;
}

[[nodiscard]] inline std::vector<Individual> generation_step(const std::vector<Individual>& pop, Treatment treatment,
                                                             const EvoParams& params, const Evaluator& evaluator,
                                                             Rng& rng, unsigned workers = 1) {
    std::vector<Individual> candidates = expand(pop, params, rng);
    evaluate_all(candidates, treatment, evaluator, workers);
    std::vector<Individual> survivors;
    survivors.reserve(pop.size());
    for (auto i : select_survivors(candidates, pop.size(), rng)) {
        survivors.push_back(std::move(candidates[i]));
    }
    return survivors;
}

struct RunLogRow {
    int generation = 0;
    double best_loss = 0.0;
    double best_empowerment_bits = 0.0;
    double mean_loss = 0.0;
    double mean_empowerment_bits = 0.0;

    friend bool operator==(const RunLogRow&, const RunLogRow&) = default;
};

struct RunLog {
    // Statistics of the evaluated initial population; not part of the CSV.
    RunLogRow initial;
    std::vector<RunLogRow> rows;
};

/// Index of the lowest full-window-loss individual (first on ties).
[[nodiscard]] inline std::size_t champion_index(const std::vector<Individual>& pop) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
        if (pop[i].eval.loss_full < pop[best].eval.loss_full) {
            best = i;
        }
    }
    return best;
}

// Highest-empowerment individual; first index wins ties.
[[nodiscard]] inline std::size_t empowerment_champion_index(const std::vector<Individual>& pop) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
        if (pop[i].eval.empowerment_bits > pop[best].eval.empowerment_bits) {
            best = i;
        }
    }
    return best;
}

/// One RunLog row. best_loss is always the population minimum. The empowerment column
/// follows the lowest-loss individual, except under bi_empowerment where it follows the
/// highest-empowerment individual.
[[nodiscard]] inline RunLogRow summarize(int generation, const std::vector<Individual>& pop,
                                         Treatment treatment = Treatment::bi_error) {
    RunLogRow row;
    row.generation = generation;
    row.best_loss = pop[champion_index(pop)].eval.loss_full;
    const std::size_t emp_champ =
        treatment == Treatment::bi_empowerment ? empowerment_champion_index(pop) : champion_index(pop);
    row.best_empowerment_bits = pop[emp_champ].eval.empowerment_bits;
    for (const auto& ind : pop) {
        row.mean_loss += ind.eval.loss_full;
        row.mean_empowerment_bits += ind.eval.empowerment_bits;
    }
    row.mean_loss /= static_cast<double>(pop.size());
    row.mean_empowerment_bits /= static_cast<double>(pop.size());
    return row;
}

struct EvolutionResult {
    std::vector<Individual> population;
    RunLog log;
};

/// Full AFPO run: random initial population, then `generations` steps, one log row each
/// (generations numbered from 1). Generation g draws from its own seeded stream.
[[nodiscard]] inline EvolutionResult evolve(Treatment treatment, const EvoParams& params, const Evaluator& evaluator,
                                            unsigned workers = 1) {
    params.validate();
    EvolutionResult result;
    result.population = initial_population(params);
    evaluate_all(result.population, treatment, evaluator, workers);
    result.log.initial = summarize(0, result.population, treatment);
    result.log.rows.reserve(static_cast<std::size_t>(params.generations));
    for (int g = 1; g <= params.generations; ++g) {
        Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(g)));
        result.population = generation_step(result.population, treatment, params, evaluator, rng, workers);
        result.log.rows.push_back(summarize(g, result.population, treatment));
    }
    return result;
}

inline constexpr std::string_view kRunLogHeader =
    "generation,best_loss,best_empowerment_bits,mean_loss,mean_empowerment_bits";

// Shortest round-trip formatting, so values read back bit-exactly.
inline void write_runlog_csv(std::ostream& os, const RunLog& log) {
    os << kRunLogHeader << '\n';
    for (const auto& r : log.rows) {
        os << fmt::format("{},{},{},{},{}\n", r.generation, r.best_loss, r.best_empowerment_bits, r.mean_loss,
                          r.mean_empowerment_bits);
    }
}

inline void write_runlog_csv(const std::filesystem::path& path, const RunLog& log) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    write_runlog_csv(os, log);
}

[[nodiscard]] inline std::vector<RunLogRow> read_runlog_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(is, line) || line != kRunLogHeader) {
        throw DataError(path.string() + ": missing or unexpected RunLog header");
    }
    std::vector<RunLogRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        RunLogRow r;
        char c1 = 0, c2 = 0, c3 = 0, c4 = 0;
        std::string rest;
        if (!(fields >> r.generation >> c1 >> r.best_loss >> c2 >> r.best_empowerment_bits >> c3 >> r.mean_loss >>
              c4 >> r.mean_empowerment_bits) ||
            c1 != ',' || c2 != ',' || c3 != ',' || c4 != ',' || (fields >> rest)) {
            throw DataError(path.string() + ": malformed RunLog row '" + line + "'");
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace empnca
