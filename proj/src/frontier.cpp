#include "termnav/planner.hpp"

#include <limits>
#include <map>

namespace termnav {

Mask frontier_cells(const OccupancyGrid& occ) {
    const auto& cells = occ.cells();
    Mask out = Mask::Constant(cells.rows(), cells.cols(), false);
    for (int r = 0; r < cells.rows(); ++r)
        for (int c = 0; c < cells.cols(); ++c) {
            if (cells(r, c) != CellState::Free) continue;
            for (int k = 0; k < 4; ++k) {
                const GridIndex n{r + kDr4[k], c + kDc4[k]};
                if (in_bounds(cells, n) && cells(n.row, n.col) == CellState::Unknown) {
                    out(r, c) = true;
                    break;
                }
            }
        }
    return out;
}

namespace {

// Region most of the frontier's Unknown neighbours belong to: the part of the
// map the frontier opens onto. Falls back to the centroid's region.
int unknown_side_region(const OccupancyGrid& occ, const RegionMap& rm, const Frontier& f) {
    std::map<int, int> votes;
    for (const auto& c : f.cells)
        for (int k = 0; k < 4; ++k) {
            const GridIndex n{c.row + kDr4[k], c.col + kDc4[k]};
            if (occ.contains(n) && occ.at(n) == CellState::Unknown)
                if (int l = rm.label(n)) ++votes[l];
        }
    int best = rm.label(f.centroid), best_votes = 0;
    for (const auto& [l, v] : votes)
        if (v > best_votes) best = l, best_votes = v;
    return best;
}

}  // namespace

std::vector<Frontier> detect_frontiers(const OccupancyGrid& occ, const RegionMap& rm, int min_size) {
    LabelRaster comp;
    const int n = connected_components(frontier_cells(occ), comp);
    std::vector<Frontier> clusters(n);
    for (int r = 0; r < comp.rows(); ++r)
        for (int c = 0; c < comp.cols(); ++c)
            if (int l = comp(r, c)) clusters[l - 1].cells.push_back({r, c});
    const bool labeled = rm.labels.rows() == occ.height() && rm.labels.cols() == occ.width();
    std::vector<Frontier> out;
    for (auto& f : clusters) {
        f.size = static_cast<int>(f.cells.size());
        if (f.size < min_size) continue;
        double mr = 0, mc = 0;
        for (const auto& c : f.cells) {
            mr += c.row;
            mc += c.col;
        }
        mr /= f.size;
        mc /= f.size;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : f.cells) {
            const double d = (c.row - mr) * (c.row - mr) + (c.col - mc) * (c.col - mc);
            if (d < best) {
                best = d;
                f.centroid = c;
            }
        }
        f.region_id = labeled ? unknown_side_region(occ, rm, f) : 0;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace termnav
