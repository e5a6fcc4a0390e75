#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "empnca/errors.hpp"
#include "empnca/grid.hpp"
#include "empnca/pgm.hpp"

// Binary target shapes, all defined by closed-form predicates over an axis-aligned
// bounding box centered on the grid center c = m/2.
//
//   square(side)         filled side x side block.
//   circle(radius)       cells at squared distance below radius (radius + 1) from c, i.e.
//                        within radius + 0.5 but excluding the d^2 = r^2 + r ring
//                        (so radius 1 is the plus-shaped 5-cell disc).
//   triangle(base)       apex-up isoceles triangle, h = (base + 1) / 2 rows; row y (0 at
//                        the apex) is base - 2(h - 1 - y) cells wide.
//   biped(scale)         scale x scale box: a full-width torso of t = (3 scale + 2) / 5
//                        rows on top of two legs, each scale / 3 columns wide, at the
//                        outer edges of the box.
//   circular_biped(s)    same legs; the torso is the upper half of an ellipse with
//                        semi-axes (s / 2, t) whose flat side sits on the legs.
//
// A box of extent e starts at c - e / 2 (integer division) on each axis. On odd grids
// the linear parameter must be odd so the shape is centered exactly.

namespace empnca {

enum class ShapeKind { square, circle, triangle, biped, circular_biped, custom };

[[nodiscard]] inline std::string_view to_string(ShapeKind kind) noexcept {
    switch (kind) {
    case ShapeKind::square:
        return "square";
    case ShapeKind::circle:
        return "circle";
    case ShapeKind::triangle:
        return "triangle";
    case ShapeKind::biped:
        return "biped";
    case ShapeKind::circular_biped:
        return "circular_biped";
    case ShapeKind::custom:
        return "custom";
    }
    return "unknown";
}

[[nodiscard]] inline ShapeKind parse_shape_kind(std::string_view name) {
    for (auto kind : {ShapeKind::square, ShapeKind::circle, ShapeKind::triangle, ShapeKind::biped,
                      ShapeKind::circular_biped}) {
        if (name == to_string(kind)) {
            return kind;
        }
    }
    throw ConfigError("unknown shape '" + std::string(name) + "'");
}

struct TargetShape {
    ShapeKind kind = ShapeKind::custom;
    Grid<std::uint8_t> cells;

    [[nodiscard]] int size() const noexcept { return cells.size(); }
    [[nodiscard]] std::string name() const { return std::string(to_string(kind)); }
};

namespace detail {

template<typename Pred>
[[nodiscard]] TargetShape place_shape(ShapeKind kind, int m, int height, int width, Pred&& inside) {
    const int c = center_of(m);
    const int top = c - height / 2;
    const int left = c - width / 2;
    if (top < 0 || left < 0 || top + height > m || left + width > m) {
        throw ConfigError(std::string(to_string(kind)) + " does not fit in a " + std::to_string(m) + "x" +
                          std::to_string(m) + " grid");
    }
    TargetShape shape{kind, Grid<std::uint8_t>(m, 0)};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (inside(y, x)) {
                shape.cells(top + y, left + x) = 1;
            }
        }
    }
    return shape;
}

inline void check_grid(int m) {
    if (m < 1) {
        throw ConfigError("grid dimension must be positive");
    }
}

inline void check_parity(std::string_view what, int m, int extent) {
    if (m % 2 == 1 && extent % 2 == 0) {
        throw ConfigError(std::string(what) + " must be odd on an odd grid (got " + std::to_string(extent) + ")");
    }
}

[[nodiscard]] inline int biped_torso_rows(int scale) noexcept { return (3 * scale + 2) / 5; }
[[nodiscard]] inline int biped_leg_width(int scale) noexcept { return scale / 3; }

[[nodiscard]] inline bool biped_leg(int scale, int y, int x) noexcept {
    const int legs = biped_leg_width(scale);
    return y >= biped_torso_rows(scale) && (x < legs || x >= scale - legs);
}

} // namespace detail

[[nodiscard]] inline TargetShape make_square(int m, int side) {
    detail::check_grid(m);
    if (side < 1 || side > m) {
        throw ConfigError("square side must lie in [1, m]");
    }
    detail::check_parity("square side", m, side);
    return detail::place_shape(ShapeKind::square, m, side, side, [](int, int) { return true; });
}

[[nodiscard]] inline TargetShape make_circle(int m, int radius) {
    detail::check_grid(m);
    if (radius < 1) {
        throw ConfigError("circle radius must be at least 1");
    }
    const int reach = radius * (radius + 1);
    return detail::place_shape(ShapeKind::circle, m, 2 * radius + 1, 2 * radius + 1, [&](int y, int x) {
        const int dy = y - radius;
        const int dx = x - radius;
        return dy * dy + dx * dx < reach;
    });
}

[[nodiscard]] inline TargetShape make_triangle(int m, int base) {
    detail::check_grid(m);
    if (base < 1) {
        throw ConfigError("triangle base must be at least 1");
    }
    detail::check_parity("triangle base", m, base);
    const int height = (base + 1) / 2;
    return detail::place_shape(ShapeKind::triangle, m, height, base, [&](int y, int x) {
        const int width = base - 2 * (height - 1 - y);
        const int inset = (base - width) / 2;
        return x >= inset && x < inset + width;
    });
}

[[nodiscard]] inline TargetShape make_biped(int m, int scale) {
    detail::check_grid(m);
    if (scale < 3) {
        throw ConfigError("biped scale must be at least 3");
    }
    detail::check_parity("biped scale", m, scale);
    const int torso = detail::biped_torso_rows(scale);
    return detail::place_shape(ShapeKind::biped, m, scale, scale, [&](int y, int x) {
        return y < torso || detail::biped_leg(scale, y, x);
    });
}

[[nodiscard]] inline TargetShape make_circular_biped(int m, int scale) {
    detail::check_grid(m);
    if (scale < 3) {
        throw ConfigError("circular biped scale must be at least 3");
    }
    detail::check_parity("circular biped scale", m, scale);
    const int torso = detail::biped_torso_rows(scale);
    const double cx = (scale - 1) / 2.0;
    const double rx = scale / 2.0;
    const double ry = torso;
    return detail::place_shape(ShapeKind::circular_biped, m, scale, scale, [&](int y, int x) {
        if (y < torso) {
            const double u = (x - cx) / rx;
            const double v = (y + 0.5 - torso) / ry;
            return u * u + v * v <= 1.0;
        }
        return detail::biped_leg(scale, y, x);
    });
}

/// Default linear parameter for a shape on an m x m grid: 15 (side, base, scale) or
/// 7 (radius) at m = 25, scaled proportionally and kept odd on odd grids.
[[nodiscard]] inline int default_shape_param(ShapeKind kind, int m) {
    int extent = (15 * m + 12) / 25;
    if (m % 2 == 1 && extent % 2 == 0) {
        --extent;
    }
    extent = std::max(extent, 3);
    if (kind == ShapeKind::circle) {
        return std::max((extent - 1) / 2, 1);
    }
    return extent;
}

[[nodiscard]] inline TargetShape make_shape(ShapeKind kind, int m, std::optional<int> param = std::nullopt) {
    const int p = param.value_or(default_shape_param(kind, m));
    switch (kind) {
    case ShapeKind::square:
        return make_square(m, p);
    case ShapeKind::circle:
        return make_circle(m, p);
    case ShapeKind::triangle:
        return make_triangle(m, p);
    case ShapeKind::biped:
        return make_biped(m, p);
    case ShapeKind::circular_biped:
        return make_circular_biped(m, p);
    case ShapeKind::custom:
        break;
    }
    throw ConfigError("custom shapes must be loaded from a PGM file");
}

/// Loads a target mask from an ASCII PGM; any nonzero pixel is part of the target.
[[nodiscard]] inline TargetShape load_shape(const std::filesystem::path& path) {
    const auto img = pgm::read(path);
    TargetShape shape{ShapeKind::custom, Grid<std::uint8_t>(img.pixels.size(), 0)};
    bool any = false;
    for (int r = 0; r < img.pixels.size(); ++r) {
        for (int c = 0; c < img.pixels.size(); ++c) {
            shape.cells(r, c) = img.pixels(r, c) != 0 ? 1 : 0;
            any = any || img.pixels(r, c) != 0;
        }
    }
    if (!any) {
        throw DataError(path.string() + ": target mask is empty");
    }
    return shape;
}

} // namespace empnca
