#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstdint>
#include <vector>

namespace termnav {

// Row-major dense 2D raster; row is y, col is x.
template <typename Scalar>
using Raster = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Mask = Raster<bool>;
using LabelRaster = Raster<int>;

struct GridIndex {
    int row = 0;
    int col = 0;

    friend constexpr auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

template <typename Derived>
inline bool in_bounds(const Eigen::DenseBase<Derived>& r, GridIndex c) {
    return c.row >= 0 && c.col >= 0 && c.row < r.rows() && c.col < r.cols();
}

inline constexpr int kDr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
inline constexpr int kDc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
inline constexpr int kDr4[4] = {-1, 0, 0, 1};
inline constexpr int kDc4[4] = {0, -1, 1, 0};

inline int linear_index(GridIndex c, Eigen::Index cols) {
    return static_cast<int>(c.row * cols + c.col);
}

inline GridIndex from_linear(int idx, Eigen::Index cols) {
    return {static_cast<int>(idx / cols), static_cast<int>(idx % cols)};
}

/// Cells of `mask` that are true, in row-major order.
std::vector<GridIndex> true_cells(const Mask& mask);

/// 8-connected components of `mask`. Labels start at 1; 0 marks background.
/// Components are numbered in row-major order of their first cell.
int connected_components(const Mask& mask, LabelRaster& labels, bool eight_connected = true);

}  // namespace termnav
