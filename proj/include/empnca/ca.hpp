#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "empnca/errors.hpp"
#include "empnca/grid.hpp"

namespace empnca {

using Signal = std::uint8_t;

inline constexpr int kMaxSignal = 255;

/// One time step of the two-channel automaton: binary alive channel and an
/// integer signal channel in [0, 255]. Dead cells carry signal 0.
struct CaState {
    Grid<std::uint8_t> alive;
    Grid<Signal> signal;

    CaState() = default;
    explicit CaState(int m) : alive(m, 0), signal(m, 0) {}

    [[nodiscard]] int size() const noexcept { return alive.size(); }
    [[nodiscard]] std::size_t live_count() const noexcept {
        return static_cast<std::size_t>(std::count(alive.data().begin(), alive.data().end(), std::uint8_t{1}));
    }

    friend bool operator==(const CaState&, const CaState&) = default;
};

/// Checks the alive/signal invariants; returns an empty string when the state is valid.
[[nodiscard]] inline std::string validate(const CaState& state) {
    const int m = state.size();
    if (state.signal.size() != m) {
        return "channel dimensions differ";
    }
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            const auto a = state.alive(r, c);
            if (a > 1) {
                return "alive value is not binary";
            }
            if (a == 0 && state.signal(r, c) != 0) {
                return "dead cell carries a signal";
            }
        }
    }
    return {};
}

// Rule network: 10 inputs (4 neighbor signals, 4 neighbor alive bits, self alive bit,
// constant bias) fully connected to 5 tanh outputs (N, E, S, W alive writes and own signal).
inline constexpr std::size_t kNetInputs = 10;
inline constexpr std::size_t kNetOutputs = 5;
inline constexpr std::size_t kGenomeLength = kNetInputs * kNetOutputs;

/// Flat weight vector of the rule network, laid out output-major:
/// weight(output, input) = weights[output * kNetInputs + input].
struct Genome {
    std::array<double, kGenomeLength> weights{};

    [[nodiscard]] double weight(std::size_t output, std::size_t input) const noexcept {
        return weights[output * kNetInputs + input];
    }

    [[nodiscard]] static Genome filled(double value) {
        Genome g;
        g.weights.fill(value);
        return g;
    }

    /// Builds a genome from an arbitrary-length sequence; rejects wrong lengths and
    /// non-finite entries.
    [[nodiscard]] static Genome from_span(std::span<const double> values) {
        if (values.size() != kGenomeLength) {
            throw DataError("genome must have " + std::to_string(kGenomeLength) + " weights, got " +
                            std::to_string(values.size()));
        }
        Genome g;
        for (std::size_t i = 0; i < kGenomeLength; ++i) {
            if (!std::isfinite(values[i])) {
                throw DataError("genome weight " + std::to_string(i) + " is not finite");
            }
            g.weights[i] = values[i];
        }
        return g;
    }

    friend bool operator==(const Genome&, const Genome&) = default;
};

struct SimParams {
    int m = 25;
    int n_steps = 50;
    double decay = 0.9;
    double diffusion = 0.5;
    // Even grids use (m/2, m/2) as the seed cell.
    bool allow_even_m = false;

    void validate() const {
        if (m < 3) {
            throw ConfigError("grid dimension must be at least 3");
        }
        if (m % 2 == 0 && !allow_even_m) {
            throw ConfigError("grid dimension must be odd (got " + std::to_string(m) + ")");
        }
        if (n_steps < 2 || n_steps % 2 != 0) {
            throw ConfigError("step count must be even and at least 2 (got " + std::to_string(n_steps) + ")");
        }
        if (!(decay > 0.0 && decay <= 1.0)) {
            throw ConfigError("signal decay must lie in (0, 1]");
        }
        if (!(diffusion >= 0.0 && diffusion <= 1.0)) {
            throw ConfigError("diffusion strength must lie in [0, 1]");
        }
    }
};

[[nodiscard]] inline CaState seed_state(int m, bool allow_even_m = false) {
    if (m < 3) {
        throw ConfigError("grid dimension must be at least 3");
    }
    if (m % 2 == 0 && !allow_even_m) {
        throw ConfigError("grid dimension must be odd to have a unique center (got " + std::to_string(m) + ")");
    }
    CaState state(m);
    state.alive(center_of(m), center_of(m)) = 1;
    return state;
}

/// Result of a single update: the next state plus each cell's action (own signal
/// emitted this step, before diffusion) and sensor reading (rounded mean of in-grid
/// Von Neumann neighbor signals, after diffusion).
struct StepResult {
    CaState state;
    Grid<Signal> actions;
    Grid<Signal> sensors;
};

namespace detail {

[[nodiscard]] inline Signal to_signal(double x) noexcept {
    // std::lround rounds half away from zero.
    return static_cast<Signal>(std::clamp<long>(std::lround(x), 0, kMaxSignal));
}

// Mean of in-grid Von Neumann neighbor signals; off-grid cells are not counted.
[[nodiscard]] inline double neighbor_mean(const Grid<Signal>& signal, int r, int c) noexcept {
    int sum = 0;
    int count = 0;
    for (int k = 0; k < 4; ++k) {
        const int nr = r + kNeighborRow[k];
        const int nc = c + kNeighborCol[k];
        if (signal.in_bounds(nr, nc)) {
            sum += signal(nr, nc);
            ++count;
        }
    }
    return count > 0 ? static_cast<double>(sum) / count : 0.0;
}

inline void execute_cell(CaState& work, const Genome& genome, int r, int c, Grid<Signal>& actions) {
    std::array<double, kNetInputs> in{};
    for (int k = 0; k < 4; ++k) {
        const int nr = r + kNeighborRow[k];
        const int nc = c + kNeighborCol[k];
        if (work.alive.in_bounds(nr, nc)) {
            in[k] = work.signal(nr, nc) / static_cast<double>(kMaxSignal);
            in[4 + k] = work.alive(nr, nc);
        }
    }
    in[8] = work.alive(r, c);
    in[9] = 1.0;

    std::array<double, kNetOutputs> out{};
    for (std::size_t o = 0; o < kNetOutputs; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < kNetInputs; ++i) {
            acc += genome.weight(o, i) * in[i];
        }
        out[o] = std::tanh(acc);
    }

    for (int k = 0; k < 4; ++k) {
        const int nr = r + kNeighborRow[k];
        const int nc = c + kNeighborCol[k];
        if (!work.alive.in_bounds(nr, nc)) {
            continue;
        }
        // A killed cell keeps its signal until the diffusion sub-step zeroes it.
        work.alive(nr, nc) = out[k] > 0.0 ? 1 : 0;
    }
    const Signal own = to_signal(kMaxSignal * (out[4] + 1.0) / 2.0);
    work.signal(r, c) = own;
    actions(r, c) = own;
}

} // namespace detail

/// Advances the automaton one time step.
///
/// Cells alive at entry execute the rule network in raster order against a single
/// working copy, so later cells observe earlier writes. A cell killed by a neighbor
/// before its turn does not execute. A diffusion sub-step then updates every live
/// cell simultaneously and dead cells are zeroed.
[[nodiscard]] inline StepResult step(const CaState& state, const Genome& genome, const SimParams& params) {
    const int m = state.size();
    StepResult result{state, state.signal, Grid<Signal>(m, 0)};
    CaState& work = result.state;
    const Grid<std::uint8_t> snapshot = state.alive;

    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            if (snapshot(r, c) == 1 && work.alive(r, c) == 1) {
                detail::execute_cell(work, genome, r, c, result.actions);
            }
        }
    }

    // Dead cells are silenced first so they contribute 0 to their neighbors' averages.
    for (std::size_t i = 0; i < work.signal.cell_count(); ++i) {
        if (work.alive.data()[i] == 0) {
            work.signal.data()[i] = 0;
        }
    }
    const Grid<Signal> before = work.signal;
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            if (work.alive(r, c) == 0) {
                continue;
            }
            const double mixed =
                (1.0 - params.diffusion) * before(r, c) + params.diffusion * detail::neighbor_mean(before, r, c);
            work.signal(r, c) = detail::to_signal(params.decay * mixed);
        }
    }

    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            result.sensors(r, c) = detail::to_signal(detail::neighbor_mean(work.signal, r, c));
        }
    }
    return result;
}

/// Full development record: states[0] is the seed, states[n + 1] follows step n, and
/// actions[n] / sensors[n] are the per-cell values produced by step n.
struct DevelopmentTrace {
    std::vector<CaState> states;
    std::vector<Grid<Signal>> actions;
    std::vector<Grid<Signal>> sensors;

    [[nodiscard]] int grid_size() const noexcept { return states.empty() ? 0 : states.front().size(); }
    [[nodiscard]] int steps() const noexcept { return static_cast<int>(actions.size()); }

    friend bool operator==(const DevelopmentTrace&, const DevelopmentTrace&) = default;
};

[[nodiscard]] inline DevelopmentTrace develop(const Genome& genome, const SimParams& params) {
    params.validate();
    DevelopmentTrace trace;
    trace.states.reserve(static_cast<std::size_t>(params.n_steps) + 1);
    trace.actions.reserve(static_cast<std::size_t>(params.n_steps));
    trace.sensors.reserve(static_cast<std::size_t>(params.n_steps));
    trace.states.push_back(seed_state(params.m, params.allow_even_m));
    for (int n = 0; n < params.n_steps; ++n) {
        StepResult next = step(trace.states.back(), genome, params);
        trace.states.push_back(std::move(next.state));
        trace.actions.push_back(std::move(next.actions));
        trace.sensors.push_back(std::move(next.sensors));
    }
    return trace;
}

} // namespace empnca
