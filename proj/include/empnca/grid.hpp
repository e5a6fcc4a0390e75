#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace empnca {

// Row-major square grid of cells.
template<typename T>
class Grid {
  public:
    Grid() = default;
    explicit Grid(int m, T fill = T{}) : m_(m), cells_(static_cast<std::size_t>(m) * m, fill) {}

    [[nodiscard]] int size() const noexcept { return m_; }
    [[nodiscard]] std::size_t cell_count() const noexcept { return cells_.size(); }

    [[nodiscard]] bool in_bounds(int row, int col) const noexcept {
        return row >= 0 && col >= 0 && row < m_ && col < m_;
    }

    T& operator()(int row, int col) noexcept { return cells_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return cells_[index(row, col)]; }

    [[nodiscard]] const std::vector<T>& data() const noexcept { return cells_; }
    std::vector<T>& data() noexcept { return cells_; }

    friend bool operator==(const Grid&, const Grid&) = default;

  private:
    [[nodiscard]] std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(col);
    }

    int m_ = 0;
    std::vector<T> cells_;
};

// Von Neumann offsets in N, E, S, W order.
inline constexpr int kNeighborRow[4] = {-1, 0, 1, 0};
inline constexpr int kNeighborCol[4] = {0, 1, 0, -1};

// Grid center cell: (m/2, m/2). For odd m this is the unique center; for even m the
// lower-right of the four central cells.
[[nodiscard]] constexpr int center_of(int m) noexcept { return m / 2; }

} // namespace empnca
