#pragma once

#include "termnav/grid.hpp"

#include <cstdlib>
#include <utility>
#include <vector>

namespace termnav {

/// Visit the Bresenham cells from `a` to `b` inclusive. The line is always
/// traced from the lexicographically smaller endpoint so that the visited set
/// does not depend on argument order. `visit` returns false to stop early;
/// the function returns false iff it was stopped.
template <typename Visit>
bool for_each_bresenham(GridIndex a, GridIndex b, Visit&& visit) {
    if (b < a) std::swap(a, b);
    int r = a.row, c = a.col;
    const int dr = std::abs(b.row - a.row), dc = std::abs(b.col - a.col);
    const int sr = a.row < b.row ? 1 : -1, sc = a.col < b.col ? 1 : -1;
    int err = dc - dr;
    while (true) {
        if (!visit(GridIndex{r, c})) return false;
        if (r == b.row && c == b.col) return true;
        const int e2 = 2 * err;
        if (e2 > -dr) {
            err -= dr;
            c += sc;
        }
        if (e2 < dc) {
            err += dc;
            r += sr;
        }
    }
}

std::vector<GridIndex> bresenham_line(GridIndex a, GridIndex b);

/// True iff no blocked cell lies strictly between `a` and `b` on the
/// symmetric Bresenham line. Endpoints never block, so a wall cell itself can
/// be seen. Unknown space never blocks.
bool line_of_sight(const WallMap& walls, GridIndex a, GridIndex b);
bool line_of_sight(const Mask& blocked, GridIndex a, GridIndex b);

}  // namespace termnav
