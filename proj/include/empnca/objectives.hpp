#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "empnca/ca.hpp"
#include "empnca/errors.hpp"
#include "empnca/infotheory.hpp"
#include "empnca/shapes.hpp"

namespace empnca {

/// Windowed shape loss: mean over states n0+1 .. n1 of the fraction of cells whose
/// alive bit differs from the target. Always in [0, 1].
[[nodiscard]] inline double loss(const DevelopmentTrace& trace, const TargetShape& target, int n0, int n1) {
    const int steps = trace.steps();
    if (n0 < 0 || n1 <= n0 || n1 > steps) {
        throw ConfigError(fmt::format("loss window ({}, {}) outside [0, {}]", n0, n1, steps));
    }
    const int m = trace.grid_size();
    if (target.size() != m) {
        throw ConfigError(fmt::format("target is {}x{} but the trace grid is {}x{}", target.size(), target.size(), m, m));
    }
    // Count mismatches exactly and divide once, so windows partition the full loss
    // up to a single rounding.
    std::uint64_t mismatches = 0;
    const auto& goal = target.cells.data();
    for (int n = n0 + 1; n <= n1; ++n) {
        const auto& alive = trace.states[static_cast<std::size_t>(n)].alive.data();
        for (std::size_t i = 0; i < alive.size(); ++i) {
            mismatches += alive[i] != goal[i] ? 1U : 0U;
        }
    }
    const double cells = static_cast<double>(m) * static_cast<double>(m);
    return static_cast<double>(mismatches) / (cells * static_cast<double>(n1 - n0));
}

namespace detail {

inline int half_horizon(const DevelopmentTrace& trace) {
    const int steps = trace.steps();
    if (steps < 2 || steps % 2 != 0) {
        throw ConfigError(fmt::format("empowerment needs an even number of steps (got {})", steps));
    }
    return steps / 2;
}

} // namespace detail

/// Joint histogram of (action at step n, sensor at step n + N/2) for every cell and
/// every n in [0, N/2). Holds exactly M^2 * N/2 pairs.
[[nodiscard]] inline JointHistogram empowerment_histogram(const DevelopmentTrace& trace) {
    const int half = detail::half_horizon(trace);
    JointHistogram hist(kMaxSignal + 1);
    for (int n = 0; n < half; ++n) {
        const auto& actions = trace.actions[static_cast<std::size_t>(n)].data();
        const auto& sensors = trace.sensors[static_cast<std::size_t>(n + half)].data();
        for (std::size_t i = 0; i < actions.size(); ++i) {
            hist.add(actions[i], sensors[i]);
        }
    }
    return hist;
}

/// Empowerment in bits (non-negative, at most 8).
[[nodiscard]] inline double empowerment_bits(const DevelopmentTrace& trace) {
    return mutual_information(empowerment_histogram(trace));
}

/// Empowerment as a minimization objective: the negated mutual information.
[[nodiscard]] inline double empowerment(const DevelopmentTrace& trace) {
    // 0.0 - x keeps a zero result at +0.0 rather than -0.0.
    return 0.0 - empowerment_bits(trace);
}

/// Per-cell mean pointwise mutual information over the cell's own (action, sensor)
/// pairs, under the global empowerment histogram. The grid mean equals the global MI.
struct LocalEmpowermentMap {
    Grid<double> values;

    [[nodiscard]] int size() const noexcept { return values.size(); }
    [[nodiscard]] double mean() const noexcept {
        double sum = 0.0;
        for (double v : values.data()) {
            sum += v;
        }
        return values.cell_count() > 0 ? sum / static_cast<double>(values.cell_count()) : 0.0;
    }
};

[[nodiscard]] inline LocalEmpowermentMap local_empowerment(const DevelopmentTrace& trace) {
    const int half = detail::half_horizon(trace);
    const JointHistogram hist = empowerment_histogram(trace);
    const auto first = hist.first_marginal();
    const auto second = hist.second_marginal();
    const int m = trace.grid_size();
    LocalEmpowermentMap map{Grid<double>(m, 0.0)};
    for (int n = 0; n < half; ++n) {
        const auto& actions = trace.actions[static_cast<std::size_t>(n)];
        const auto& sensors = trace.sensors[static_cast<std::size_t>(n + half)];
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) {
                map.values(r, c) += pointwise_mi(hist, first, second, actions(r, c), sensors(r, c));
            }
        }
    }
    for (double& v : map.values.data()) {
        v /= half;
    }
    return map;
}

/// M rows of M comma-separated values, row 0 = grid top.
inline void write_heatmap_csv(const std::filesystem::path& path, const LocalEmpowermentMap& map) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    for (int r = 0; r < map.size(); ++r) {
        for (int c = 0; c < map.size(); ++c) {
            os << (c > 0 ? "," : "") << fmt::format("{}", map.values(r, c));
        }
        os << '\n';
    }
}

/// Every objective a trace can be scored on. Treatments pick their selection
/// objectives from this; the rest are still logged.
struct Evaluation {
    double loss_full = 0.0;
    double loss_first_half = 0.0;
    double loss_second_half = 0.0;
    double empowerment_bits = 0.0;

    friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

[[nodiscard]] inline Evaluation evaluate_trace(const DevelopmentTrace& trace, const TargetShape& target) {
    const int steps = trace.steps();
    const int half = detail::half_horizon(trace);
    return Evaluation{
        loss(trace, target, 0, steps),
        loss(trace, target, 0, half),
        loss(trace, target, half, steps),
        empowerment_bits(trace),
    };
}

[[nodiscard]] inline Evaluation evaluate_genome(const Genome& genome, const SimParams& params,
                                                const TargetShape& target) {
    return evaluate_trace(develop(genome, params), target);
}

} // namespace empnca
