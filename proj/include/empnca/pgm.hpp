#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "empnca/ca.hpp"
#include "empnca/errors.hpp"
#include "empnca/grid.hpp"

namespace empnca::pgm {

// ASCII (P2) graymap. One image row per line.
template<typename T>
[[nodiscard]] std::string encode(const Grid<T>& grid, int maxval) {
    const int m = grid.size();
    std::string out = fmt::format("P2\n{} {}\n{}\n", m, m, maxval);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            if (c > 0) {
                out += ' ';
            }
            out += std::to_string(static_cast<int>(grid(r, c)));
        }
        out += '\n';
    }
    return out;
}

template<typename T>
void write(const std::filesystem::path& path, const Grid<T>& grid, int maxval) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    os << encode(grid, maxval);
    if (!os) {
        throw DataError("failed writing " + path.string());
    }
}

struct Image {
    Grid<int> pixels;
    int maxval = 0;
};

// Reads a square P2 image. Comments ('#' to end of line) are skipped.
[[nodiscard]] inline Image read(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw DataError("cannot open " + path.string());
    }
    std::stringstream stripped;
    std::string line;
    while (std::getline(is, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        stripped << line << '\n';
    }
    std::string magic;
    int width = 0;
    int height = 0;
    Image img;
    if (!(stripped >> magic >> width >> height >> img.maxval) || magic != "P2") {
        throw DataError(path.string() + ": not an ASCII PGM (P2) file");
    }
    if (width != height || width <= 0) {
        throw DataError(path.string() + ": image must be square");
    }
    img.pixels = Grid<int>(width, 0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            int v = 0;
            if (!(stripped >> v) || v < 0 || v > img.maxval) {
                throw DataError(path.string() + ": bad or missing pixel value");
            }
            img.pixels(r, c) = v;
        }
    }
    return img;
}

/// Writes frame_{n:03}_alive.pgm (maxval 1) and frame_{n:03}_signal.pgm (maxval 255).
inline void write_frame(const std::filesystem::path& dir, int n, const CaState& state) {
    write(dir / fmt::format("frame_{:03}_alive.pgm", n), state.alive, 1);
    write(dir / fmt::format("frame_{:03}_signal.pgm", n), state.signal, kMaxSignal);
}

} // namespace empnca::pgm
