#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "empnca/ca.hpp"
#include "empnca/errors.hpp"
#include "empnca/evolution.hpp"
#include "empnca/objectives.hpp"
#include "empnca/pgm.hpp"
#include "empnca/shapes.hpp"

namespace empnca::harness {

namespace fs = std::filesystem;
using nlohmann::json;

struct ShapeConfig {
    ShapeKind kind = ShapeKind::square;
    std::optional<int> param;
    // When set, the target is loaded from this PGM and `kind`/`param` are ignored.
    std::optional<fs::path> pgm;

    [[nodiscard]] TargetShape build(int m) const {
        if (pgm) {
            auto shape = load_shape(*pgm);
            if (shape.size() != m) {
                throw ConfigError(fmt::format("target {} is {}x{}, grid is {}x{}", pgm->string(), shape.size(),
                                              shape.size(), m, m));
            }
            return shape;
        }
        return make_shape(kind, m, param);
    }
};

struct ExperimentConfig {
    std::vector<Treatment> treatments{Treatment::bi_error};
    ShapeConfig shape;
    SimParams sim;
    EvoParams evo;
    int runs = 1;
    fs::path out = "out";
    unsigned workers = 1;

    void validate() const {
        if (treatments.empty()) {
            throw ConfigError("no treatment selected");
        }
        sim.validate();
        evo.validate();
        if (runs < 1) {
            throw ConfigError("run count must be at least 1");
        }
        if (workers < 1) {
            throw ConfigError("worker count must be at least 1");
        }
        (void)shape.build(sim.m);
    }

    [[nodiscard]] std::uint64_t run_seed(int run) const noexcept {
        return evo.seed + static_cast<std::uint64_t>(run);
    }
};

// Config schema (every key optional; values shown are the defaults):
//
//   {
//     "treatment": "bi_error" | ... | "all",   or "treatments": [ ... ]
//     "shape": { "name": "square" }  or  { "pgm": "mask.pgm" },   "param" defaults by grid size
//     "grid": { "m": 25, "n_steps": 50, "decay": 0.9, "diffusion": 0.5, "allow_even_m": false },
//     "evolution": { "population": 400, "generations": 2000,
//                    "mutation_rate": 0.1, "mutation_sigma": 0.25 },
//     "runs": 1, "seed": 0, "out": "out", "workers": 1
//   }
[[nodiscard]] inline std::vector<Treatment> parse_treatments(const std::string& name) {
    if (name == "all") {
        return {std::begin(kAllTreatments), std::end(kAllTreatments)};
    }
    return {parse_treatment(name)};
}

[[nodiscard]] inline ExperimentConfig config_from_json(const json& doc) {
    ExperimentConfig cfg;
    try {
        if (doc.contains("treatments")) {
            cfg.treatments.clear();
            for (const auto& t : doc.at("treatments")) {
                cfg.treatments.push_back(parse_treatment(t.get<std::string>()));
            }
        } else if (doc.contains("treatment")) {
            cfg.treatments = parse_treatments(doc.at("treatment").get<std::string>());
        }
        if (doc.contains("shape")) {
            const auto& s = doc.at("shape");
            if (s.contains("pgm")) {
                cfg.shape.pgm = s.at("pgm").get<std::string>();
            } else {
                cfg.shape.kind = parse_shape_kind(s.value("name", std::string("square")));
                if (s.contains("param")) {
                    cfg.shape.param = s.at("param").get<int>();
                }
            }
        }
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            cfg.sim.m = g.value("m", cfg.sim.m);
            cfg.sim.n_steps = g.value("n_steps", cfg.sim.n_steps);
            cfg.sim.decay = g.value("decay", cfg.sim.decay);
            cfg.sim.diffusion = g.value("diffusion", cfg.sim.diffusion);
            cfg.sim.allow_even_m = g.value("allow_even_m", cfg.sim.allow_even_m);
        }
        if (doc.contains("evolution")) {
            const auto& e = doc.at("evolution");
            cfg.evo.population = e.value("population", cfg.evo.population);
            cfg.evo.generations = e.value("generations", cfg.evo.generations);
            cfg.evo.mutation_rate = e.value("mutation_rate", cfg.evo.mutation_rate);
            cfg.evo.mutation_sigma = e.value("mutation_sigma", cfg.evo.mutation_sigma);
        }
        cfg.runs = doc.value("runs", cfg.runs);
        cfg.evo.seed = doc.value("seed", cfg.evo.seed);
        cfg.out = doc.value("out", cfg.out.string());
        cfg.workers = doc.value("workers", cfg.workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open config " + path.string());
    }
    try {
        return config_from_json(json::parse(is));
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

[[nodiscard]] inline json shape_to_json(const ShapeConfig& shape) {
    if (shape.pgm) {
        return {{"pgm", shape.pgm->string()}};
    }
    json j = {{"name", std::string(to_string(shape.kind))}};
    if (shape.param) {
        j["param"] = *shape.param;
    }
    return j;
}

/// Everything stored alongside a champion genome.
struct ChampionRecord {
    Genome genome;
    SimParams sim;
    ShapeConfig shape;
    std::string treatment;
    std::uint64_t seed = 0;
    int run = 0;
    std::size_t population = 0;
    double loss = 0.0;
    double empowerment_bits = 0.0;
};

[[nodiscard]] inline json champion_to_json(const ChampionRecord& rec) {
    return json{
        {"m", rec.sim.m},
        {"n_steps", rec.sim.n_steps},
        {"weights", rec.genome.weights},
        {"treatment", rec.treatment},
        {"seed", rec.seed},
        {"run", rec.run},
        {"population", rec.population},
        {"decay", rec.sim.decay},
        {"diffusion", rec.sim.diffusion},
        {"allow_even_m", rec.sim.allow_even_m},
        {"shape", shape_to_json(rec.shape)},
        {"loss", rec.loss},
        {"empowerment_bits", rec.empowerment_bits},
    };
}

[[nodiscard]] inline ChampionRecord load_champion(const fs::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open genome file " + path.string());
    }
    try {
        const json doc = json::parse(is);
        ChampionRecord rec;
        rec.genome = Genome::from_span(doc.at("weights").get<std::vector<double>>());
        rec.sim.m = doc.at("m").get<int>();
        rec.sim.n_steps = doc.at("n_steps").get<int>();
        rec.sim.decay = doc.value("decay", rec.sim.decay);
        rec.sim.diffusion = doc.value("diffusion", rec.sim.diffusion);
        rec.sim.allow_even_m = doc.value("allow_even_m", rec.sim.allow_even_m);
        rec.treatment = doc.value("treatment", std::string());
        rec.seed = doc.value("seed", std::uint64_t{0});
        rec.run = doc.value("run", 0);
        rec.population = doc.value("population", std::size_t{0});
        rec.loss = doc.value("loss", 0.0);
        rec.empowerment_bits = doc.value("empowerment_bits", 0.0);
        if (doc.contains("shape")) {
            rec.shape = config_from_json(json{{"shape", doc.at("shape")}}).shape;
        }
        return rec;
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

struct RunArtifacts {
    std::string treatment;
    int run = 0;
    fs::path runlog;
    fs::path champion;
    fs::path frames;
    fs::path heatmap;
};

[[nodiscard]] inline fs::path run_directory(const fs::path& out, Treatment t, int run) {
    return out / std::string(to_string(t)) / fmt::format("run_{}", run);
}

/// Develops `genome`, writes its frame pairs into `frames` and its local-empowerment
/// heatmap to `heatmap`, and returns the full-window loss and empowerment.
inline Evaluation render_development(const Genome& genome, const SimParams& sim, const TargetShape& target,
                                     const fs::path& frames, const fs::path& heatmap) {
    const DevelopmentTrace trace = develop(genome, sim);
    fs::create_directories(frames);
    for (std::size_t n = 0; n < trace.states.size(); ++n) {
        pgm::write_frame(frames, static_cast<int>(n), trace.states[n]);
    }
    write_heatmap_csv(heatmap, local_empowerment(trace));
    return evaluate_trace(trace, target);
}

[[nodiscard]] inline Evaluator make_evaluator(const SimParams& sim, const TargetShape& target) {
    return [sim, target](const Genome& g) { return evaluate_genome(g, sim, target); };
}

inline RunArtifacts run_once(const ExperimentConfig& cfg, Treatment treatment, int run, const TargetShape& target,
                             unsigned eval_workers) {
    EvoParams evo = cfg.evo;
    evo.seed = cfg.run_seed(run);
    const auto result = evolve(treatment, evo, make_evaluator(cfg.sim, target), eval_workers);

    RunArtifacts art;
    art.treatment = std::string(to_string(treatment));
    art.run = run;
    const fs::path dir = run_directory(cfg.out, treatment, run);
    fs::create_directories(dir);
    art.runlog = dir / "runlog.csv";
    art.champion = dir / "champion.json";
    art.frames = dir / "frames";
    art.heatmap = dir / "champion.heat.csv";

    write_runlog_csv(art.runlog, result.log);

    const auto& champ = result.population[champion_index(result.population)];
    ChampionRecord rec{champ.genome, cfg.sim, cfg.shape, art.treatment, evo.seed, run, cfg.evo.population,
                       champ.eval.loss_full, champ.eval.empowerment_bits};
    std::ofstream os(art.champion, std::ios::binary);
    if (!os) {
        throw DataError("cannot write " + art.champion.string());
    }
    os << champion_to_json(rec).dump(2) << '\n';
    os.close();

    (void)render_development(champ.genome, cfg.sim, target, art.frames, art.heatmap);
    return art;
}

/// Runs every (treatment, run) pair. Runs execute concurrently up to `workers`; any
/// leftover workers parallelize candidate evaluation inside each run.
[[nodiscard]] inline std::vector<RunArtifacts> cmd_evolve(const ExperimentConfig& cfg) {
    cfg.validate();
    const TargetShape target = cfg.shape.build(cfg.sim.m);
    fs::create_directories(cfg.out);

    struct Task {
        Treatment treatment;
        int run;
    };
    std::vector<Task> tasks;
    for (auto t : cfg.treatments) {
        for (int r = 0; r < cfg.runs; ++r) {
            tasks.push_back({t, r});
        }
    }
    const unsigned run_threads = std::max(1U, std::min<unsigned>(cfg.workers, static_cast<unsigned>(tasks.size())));
    const unsigned eval_workers = std::max(1U, cfg.workers / run_threads);

    std::vector<RunArtifacts> artifacts(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next.fetch_add(1); k < tasks.size(); k = next.fetch_add(1)) {
            try {
                artifacts[k] = run_once(cfg, tasks[k].treatment, tasks[k].run, target, eval_workers);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (run_threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < run_threads; ++t) {
            pool.emplace_back(work);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return artifacts;
}

struct ReplayOptions {
    fs::path out = "replay";
    // Overrides for the target recorded in the genome file.
    std::optional<ShapeConfig> shape;
};

struct ReplayResult {
    double loss = 0.0;
    double empowerment_bits = 0.0;
    fs::path frames;
    fs::path heatmap;
};

[[nodiscard]] inline ReplayResult cmd_replay(const fs::path& genome_file, const ReplayOptions& opts) {
    const ChampionRecord rec = load_champion(genome_file);
    rec.sim.validate();
    const ShapeConfig shape = opts.shape.value_or(rec.shape);
    const TargetShape target = shape.build(rec.sim.m);
    ReplayResult res;
    res.frames = opts.out / "frames";
    res.heatmap = opts.out / "replay.heat.csv";
    fs::create_directories(opts.out);
    const Evaluation e = render_development(rec.genome, rec.sim, target, res.frames, res.heatmap);
    res.loss = e.loss_full;
    res.empowerment_bits = e.empowerment_bits;
    return res;
}

namespace detail {

struct FoundRun {
    std::string treatment;
    fs::path dir;
};

// Every directory under `roots` (inclusive) that holds a runlog.csv or champion.json.
[[nodiscard]] inline std::vector<FoundRun> find_runs(const std::vector<fs::path>& roots) {
    std::vector<fs::path> dirs;
    for (const auto& root : roots) {
        if (!fs::is_directory(root)) {
            throw DataError(root.string() + " is not a directory");
        }
        auto consider = [&](const fs::path& d) {
            if (fs::exists(d / "runlog.csv") || fs::exists(d / "champion.json")) {
                dirs.push_back(d);
            }
        };
        consider(root);
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_directory()) {
                consider(entry.path());
            }
        }
    }
    std::sort(dirs.begin(), dirs.end());
    dirs.erase(std::unique(dirs.begin(), dirs.end()), dirs.end());

    std::vector<FoundRun> runs;
    for (const auto& d : dirs) {
        FoundRun fr{{}, d};
        if (fs::exists(d / "champion.json")) {
            fr.treatment = load_champion(d / "champion.json").treatment;
        }
        if (fr.treatment.empty()) {
            fr.treatment = d.parent_path().filename().string();
        }
        runs.push_back(std::move(fr));
    }
    return runs;
}

// Known treatments in canonical order, then anything else alphabetically.
[[nodiscard]] inline int treatment_rank(const std::string& name) {
    for (int i = 0; i < 4; ++i) {
        if (name == to_string(kAllTreatments[i])) {
            return i;
        }
    }
    return name == "random" ? 5 : 4;
}

[[nodiscard]] inline bool treatment_less(const std::string& a, const std::string& b) {
    const int ra = treatment_rank(a);
    const int rb = treatment_rank(b);
    return ra != rb ? ra < rb : a < b;
}

struct MeanCi {
    double mean = 0.0;
    double ci = 0.0;
};

// Normal-approximation 95% half-width, 1.96 * sample sd / sqrt(R); 0 for R = 1.
[[nodiscard]] inline MeanCi mean_ci(const std::vector<double>& xs) {
    MeanCi out;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) {
        out.mean += x;
    }
    out.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) {
            ss += (x - out.mean) * (x - out.mean);
        }
        out.ci = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

inline std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    return os;
}

} // namespace detail

inline constexpr std::string_view kCurvesHeader =
    "treatment,generation,mean_best_loss,ci_loss,mean_best_emp_bits,ci_emp";

/// Aggregates RunLogs per treatment and generation into mean and 95% CI columns.
inline void cmd_curves(const std::vector<fs::path>& run_dirs, const fs::path& output) {
    std::map<std::string, std::vector<std::pair<fs::path, std::vector<RunLogRow>>>,
             decltype(&detail::treatment_less)>
        groups(&detail::treatment_less);
    for (const auto& run : detail::find_runs(run_dirs)) {
        if (!fs::exists(run.dir / "runlog.csv")) {
            continue;
        }
        groups[run.treatment].emplace_back(run.dir, read_runlog_csv(run.dir / "runlog.csv"));
    }
    if (groups.empty()) {
        throw DataError("no RunLog files found");
    }
    for (const auto& [treatment, logs] : groups) {
        const std::size_t expected = logs.front().second.size();
        std::vector<std::string> ragged;
        for (const auto& [dir, rows] : logs) {
            if (rows.size() != expected) {
                ragged.push_back(fmt::format("{} ({} rows)", dir.string(), rows.size()));
            }
        }
        if (!ragged.empty()) {
            std::string msg = fmt::format("ragged generation counts for {} (expected {} rows):", treatment, expected);
            for (const auto& r : ragged) {
                msg += "\n  " + r;
            }
            throw DataError(msg);
        }
    }

    auto os = detail::open_output(output);
    os << kCurvesHeader << '\n';
    for (const auto& [treatment, logs] : groups) {
        const std::size_t rows = logs.front().second.size();
        for (std::size_t g = 0; g < rows; ++g) {
            std::vector<double> losses;
            std::vector<double> emps;
            for (const auto& entry : logs) {
                losses.push_back(entry.second[g].best_loss);
                emps.push_back(entry.second[g].best_empowerment_bits);
            }
            const auto l = detail::mean_ci(losses);
            const auto e = detail::mean_ci(emps);
            os << fmt::format("{},{},{},{},{},{}\n", treatment, logs.front().second[g].generation, l.mean, l.ci,
                              e.mean, e.ci);
        }
    }
}

inline constexpr std::string_view kScatterHeader = "treatment,run,final_best_loss,final_best_emp_bits";

struct ScatterRow {
    std::string treatment;
    int run = 0;
    double loss = 0.0;
    double empowerment_bits = 0.0;
};

/// Lowest-loss individual of the generation-zero population a run with this record's
/// seed starts from.
[[nodiscard]] inline ScatterRow random_champion(const ChampionRecord& rec, unsigned workers = 1) {
    EvoParams evo;
    evo.population = rec.population;
    evo.seed = rec.seed;
    auto pop = initial_population(evo);
    const TargetShape target = rec.shape.build(rec.sim.m);
    evaluate_all(pop, Treatment::bi_error, make_evaluator(rec.sim, target), workers);
    const auto& champ = pop[champion_index(pop)];
    return {"random", rec.run, champ.eval.loss_full, champ.eval.empowerment_bits};
}

/// One row per run's final champion plus a `random` row per run index: the lowest-loss
/// member of that run's generation-zero population.
[[nodiscard]] inline std::vector<ScatterRow> cmd_scatter(const std::vector<fs::path>& run_dirs,
                                                         const fs::path& output, unsigned workers = 1) {
    std::vector<ScatterRow> rows;
    std::map<int, ChampionRecord> by_run;
    for (const auto& run : detail::find_runs(run_dirs)) {
        const fs::path file = run.dir / "champion.json";
        if (!fs::exists(file)) {
            throw DataError("missing champion file in " + run.dir.string());
        }
        const auto rec = load_champion(file);
        if (rec.population < 1) {
            throw DataError(file.string() + ": no population size recorded");
        }
        rows.push_back({run.treatment, rec.run, rec.loss, rec.empowerment_bits});
        by_run.try_emplace(rec.run, rec);
    }
    if (rows.empty()) {
        throw DataError("no champion files found");
    }
    for (const auto& [run, rec] : by_run) {
        rows.push_back(random_champion(rec, workers));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ScatterRow& a, const ScatterRow& b) {
        if (a.treatment != b.treatment) {
            return detail::treatment_less(a.treatment, b.treatment);
        }
        return a.run < b.run;
    });

    auto os = detail::open_output(output);
    os << kScatterHeader << '\n';
    for (const auto& r : rows) {
        os << fmt::format("{},{},{},{}\n", r.treatment, r.run, r.loss, r.empowerment_bits);
    }
    return rows;
}

} // namespace empnca::harness
