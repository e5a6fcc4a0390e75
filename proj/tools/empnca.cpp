#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "empnca/harness.hpp"
#include "empnca/pgm.hpp"
#include "empnca/shapes.hpp"

namespace fs = std::filesystem;
using namespace empnca;

namespace {

struct EvolveFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> treatment;
    std::optional<std::string> shape;
    std::optional<int> shape_param;
    std::optional<int> m;
    std::optional<int> steps;
    std::optional<std::size_t> pop;
    std::optional<int> gens;
    std::optional<int> runs;
};

harness::ExperimentConfig resolve(const EvolveFlags& f) {
    harness::ExperimentConfig cfg = f.config.empty() ? harness::ExperimentConfig{} : harness::load_config(f.config);
    if (f.out) cfg.out = *f.out;
    if (f.workers) cfg.workers = *f.workers;
    if (f.seed) cfg.evo.seed = *f.seed;
    if (f.treatment) cfg.treatments = harness::parse_treatments(*f.treatment);
    if (f.shape) {
        cfg.shape = harness::ShapeConfig{parse_shape_kind(*f.shape), std::nullopt, std::nullopt};
    }
    if (f.shape_param) cfg.shape.param = *f.shape_param;
    if (f.m) cfg.sim.m = *f.m;
    if (f.steps) cfg.sim.n_steps = *f.steps;
    if (f.pop) cfg.evo.population = *f.pop;
    if (f.gens) cfg.evo.generations = *f.gens;
    if (f.runs) cfg.runs = *f.runs;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Empowered neural cellular automata: simulate, evolve, and export plot data"};
    app.require_subcommand(1);

    EvolveFlags ev;
    auto* evolve = app.add_subcommand("evolve", "Run AFPO evolution for one or more treatments");
    evolve->add_option("--config", ev.config, "JSON experiment config")->check(CLI::ExistingFile);
    evolve->add_option("--out", ev.out, "Output directory");
    evolve->add_option("--workers", ev.workers, "Worker threads");
    evolve->add_option("--seed", ev.seed, "Base RNG seed (run r uses seed + r)");
    evolve->add_option("--treatment", ev.treatment,
                       "bi_error | tri_error_empowerment | tri_error | bi_empowerment | all");
    evolve->add_option("--shape", ev.shape, "square | circle | triangle | biped | circular_biped");
    evolve->add_option("--shape-param", ev.shape_param, "Shape size parameter (side, radius, base, scale)");
    evolve->add_option("--m", ev.m, "Grid dimension");
    evolve->add_option("--steps", ev.steps, "Development steps N (even)");
    evolve->add_option("--pop", ev.pop, "Population size");
    evolve->add_option("--gens", ev.gens, "Generations");
    evolve->add_option("--runs", ev.runs, "Independent runs per treatment");

    std::string genome_file;
    std::string replay_out = "replay";
    std::optional<std::string> replay_shape;
    std::optional<int> replay_param;
    std::optional<std::string> replay_target;
    auto* replay = app.add_subcommand("replay", "Develop a saved genome; write frames and heatmap");
    replay->add_option("genome", genome_file, "Champion genome JSON")->required();
    replay->add_option("--out", replay_out, "Output directory");
    replay->add_option("--shape", replay_shape, "Override the target shape");
    replay->add_option("--shape-param", replay_param, "Override the shape parameter");
    replay->add_option("--target", replay_target, "Override the target with a PGM mask");

    std::vector<std::string> curve_dirs;
    std::string curves_out;
    auto* curves = app.add_subcommand("curves", "Aggregate RunLogs into mean/CI curves");
    curves->add_option("dirs", curve_dirs, "Run directories (searched recursively)")->required();
    curves->add_option("--out", curves_out, "Output CSV")->required();

    std::vector<std::string> scatter_dirs;
    std::string scatter_out;
    unsigned scatter_workers = 1;
    auto* scatter = app.add_subcommand("scatter", "Final champions plus generation-zero random baseline");
    scatter->add_option("dirs", scatter_dirs, "Run directories (searched recursively)")->required();
    scatter->add_option("--out", scatter_out, "Output CSV")->required();
    scatter->add_option("--workers", scatter_workers, "Worker threads");

    std::string render_shape = "square";
    int render_m = 25;
    std::optional<int> render_param;
    std::string render_out = "target.pgm";
    auto* shapes = app.add_subcommand("shapes", "Target shape utilities");
    shapes->require_subcommand(1);
    auto* render = shapes->add_subcommand("render", "Write a target mask as PGM");
    render->add_option("--shape", render_shape, "square | circle | triangle | biped | circular_biped");
    render->add_option("--m", render_m, "Grid dimension");
    render->add_option("--param", render_param, "Shape size parameter");
    render->add_option("--out", render_out, "Output PGM");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*evolve) {
            const auto cfg = resolve(ev);
            for (const auto& art : harness::cmd_evolve(cfg)) {
                std::cout << fmt::format("{} run {}: {}\n", art.treatment, art.run, art.runlog.string());
            }
        } else if (*replay) {
            harness::ReplayOptions opts;
            opts.out = replay_out;
            if (replay_target) {
                opts.shape = harness::ShapeConfig{ShapeKind::custom, std::nullopt, fs::path(*replay_target)};
            } else if (replay_shape || replay_param) {
                const auto rec = harness::load_champion(genome_file);
                harness::ShapeConfig s = rec.shape;
                if (replay_shape) {
                    s = harness::ShapeConfig{parse_shape_kind(*replay_shape), std::nullopt, std::nullopt};
                }
                if (replay_param) s.param = *replay_param;
                opts.shape = s;
            }
            const auto res = harness::cmd_replay(genome_file, opts);
            std::cout << fmt::format("loss={} empowerment_bits={}\n", res.loss, res.empowerment_bits);
        } else if (*curves) {
            harness::cmd_curves({curve_dirs.begin(), curve_dirs.end()}, curves_out);
        } else if (*scatter) {
            (void)harness::cmd_scatter({scatter_dirs.begin(), scatter_dirs.end()}, scatter_out, scatter_workers);
        } else if (*render) {
            const auto shape = make_shape(parse_shape_kind(render_shape), render_m, render_param);
            pgm::write(render_out, shape.cells, 1);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
