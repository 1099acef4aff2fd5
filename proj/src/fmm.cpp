#include "termnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace termnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;

// Minimum over P on the edge from the axial neighbour A (time ta, distance
// 1) to the diagonal neighbour D (time td, distance sqrt 2) of T(P) + |P|,
// with T linear along the edge.
double solve_triangle(double ta, double td) {
    if (!std::isfinite(ta)) return std::isfinite(td) ? td + kSqrt2 : kInf;
    if (!std::isfinite(td)) return ta + 1.0;
    const double d = ta - td;
    if (d <= 0) return ta + 1.0;
    if (d >= 1.0 / kSqrt2) return td + kSqrt2;
    const double l = d / std::sqrt(1 - d * d);
    return ta - l * d + std::sqrt(1 + l * l);
}

struct Marcher {
    const OccupancyGrid& occ;
    bool unknown_ok;
    int rows, cols;
    Raster<double> t;
    std::vector<char> known;
    std::vector<char> fixed;

    bool passable(int r, int c) const {
        if (r < 0 || c < 0 || r >= rows || c >= cols) return false;
        const CellState s = occ.cells()(r, c);
        return s == CellState::Free || (unknown_ok && s == CellState::Unknown);
    }
    double known_time(int r, int c) const {
        if (r < 0 || c < 0 || r >= rows || c >= cols || !known[r * cols + c]) return kInf;
        return t(r, c);
    }
    // Eight triangles around the cell, each made of one axial and one
    // diagonal neighbour. A triangle is used only if both axial cells next
    // to the diagonal are open, so fronts never squeeze through corners.
    double update(int r, int c) const {
        double best = kInf;
        for (int k = 0; k < 4; ++k) {
            const int ar = kDr4[k], ac = kDc4[k];
            if (!passable(r + ar, c + ac)) continue;
            const double ta = known_time(r + ar, c + ac);
            best = std::min(best, ta + 1.0);
            for (int s : {-1, 1}) {
                const int pr = ac * s, pc = ar * s;
                if (!passable(r + pr, c + pc)) continue;
                best = std::min(best, solve_triangle(ta, known_time(r + ar + pr, c + ac + pc)));
            }
        }
        // a diagonal neighbour alone, when its axial cells are open
        for (int k = 0; k < 8; ++k) {
            const int dr = kDr8[k], dc = kDc8[k];
            if (dr == 0 || dc == 0 || !passable(r + dr, c) || !passable(r, c + dc)) continue;
            best = std::min(best, known_time(r + dr, c + dc) + kSqrt2);
        }
        return best;
    }
    // Conservative straight-line check between cell centers.
    bool clear_line(GridIndex a, GridIndex b) const {
        const double dr = b.row - a.row, dc = b.col - a.col;
        const int n = static_cast<int>(std::ceil(std::max(std::abs(dr), std::abs(dc)) * 8.0));
        for (int i = 1; i < n; ++i) {
            const double s = static_cast<double>(i) / n;
            const double y = a.row + 0.5 + s * dr, x = a.col + 0.5 + s * dc;
            // sample a small cross around the point so corner-grazing lines fail
            for (double ey : {-0.05, 0.05})
                for (double ex : {-0.05, 0.05})
                    if (!passable(static_cast<int>(std::floor(y + ey)), static_cast<int>(std::floor(x + ex))))
                        return false;
        }
        return true;
    }
};

}  // namespace

TravelTimeField fmm_field(const OccupancyGrid& occ, std::span<const GridIndex> goals, const FmmOptions& options) {
    if (goals.empty()) throw std::invalid_argument("fmm_field: no goal");
    for (const auto& g : goals)
        if (!occ.contains(g) || !occ.is_free(g)) throw std::invalid_argument("fmm_field: goal is not a Free cell");

    Marcher m{occ, options.unknown_traversable, occ.height(), occ.width(), Raster<double>::Constant(occ.height(), occ.width(), kInf), {}, {}};
    m.known.assign(static_cast<size_t>(m.rows) * m.cols, 0);
    m.fixed.assign(static_cast<size_t>(m.rows) * m.cols, 0);

    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    const int rad = static_cast<int>(std::floor(options.exact_init_radius));
    for (const auto& g : goals) {
        m.t(g.row, g.col) = 0.0;
        m.fixed[g.row * m.cols + g.col] = 1;
        for (int r = std::max(0, g.row - rad); r <= std::min(m.rows - 1, g.row + rad); ++r)
            for (int c = std::max(0, g.col - rad); c <= std::min(m.cols - 1, g.col + rad); ++c) {
                const double d = std::hypot(r - g.row, c - g.col);
                if (d > options.exact_init_radius || !m.passable(r, c) || d >= m.t(r, c)) continue;
                if (!m.clear_line(g, {r, c})) continue;
                m.t(r, c) = d;
                m.fixed[r * m.cols + c] = 1;
            }
    }
    for (int i = 0; i < m.rows * m.cols; ++i)
        if (m.fixed[i]) heap.emplace(m.t(i / m.cols, i % m.cols), i);

    std::vector<char> is_stop(options.stop_cells.empty() ? 0 : static_cast<size_t>(m.rows) * m.cols, 0);
    int pending = 0;
    for (const auto& s : options.stop_cells)
        if (occ.contains(s) && !is_stop[s.row * m.cols + s.col]) {
            is_stop[s.row * m.cols + s.col] = 1;
            ++pending;
        }
    const bool early = pending > 0;
    double limit = kInf, stop_max = 0.0;

    while (!heap.empty()) {
        const auto [tv, idx] = heap.top();
        heap.pop();
        if (m.known[idx] || tv != m.t(idx / m.cols, idx % m.cols)) continue;
        if (tv > limit) break;
        m.known[idx] = 1;
        if (early && is_stop[idx]) {
            stop_max = std::max(stop_max, tv);
            if (--pending == 0) limit = stop_max + options.stop_margin;
        }
        const int r = idx / m.cols, c = idx % m.cols;
        for (int k = 0; k < 8; ++k) {
            const int nr = r + kDr8[k], nc = c + kDc8[k];
            if (!m.passable(nr, nc)) continue;
            const int nidx = nr * m.cols + nc;
            if (m.known[nidx] || m.fixed[nidx]) continue;
            const double nt = m.update(nr, nc);
            if (nt < m.t(nr, nc)) {
                m.t(nr, nc) = nt;
                heap.emplace(nt, nidx);
            }
        }
    }
    for (int i = 0; i < m.rows * m.cols; ++i)
        if (!m.known[i]) m.t(i / m.cols, i % m.cols) = kInf;
    return {std::move(m.t), occ.resolution()};
}

TravelTimeField fmm_field(const OccupancyGrid& occ, GridIndex goal, const FmmOptions& options) {
    return fmm_field(occ, std::span<const GridIndex>(&goal, 1), options);
}

std::vector<GridIndex> descent_path(const TravelTimeField& field, GridIndex start, int max_steps) {
    std::vector<GridIndex> path{start};
    GridIndex cur = start;
    for (int i = 0; i < max_steps; ++i) {
        GridIndex best = cur;
        double bt = field.at(cur);
        for (int k = 0; k < 8; ++k) {
            const GridIndex n{cur.row + kDr8[k], cur.col + kDc8[k]};
            if (in_bounds(field.time, n) && field.at(n) < bt) {
                bt = field.at(n);
                best = n;
            }
        }
        if (best == cur) break;
        cur = best;
        path.push_back(cur);
    }
    return path;
}

}  // namespace termnav
