#include "termnav/grid.hpp"

#include "termnav/line_of_sight.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace termnav {

std::vector<GridIndex> true_cells(const Mask& mask) {
    std::vector<GridIndex> out;
    for (int r = 0; r < mask.rows(); ++r)
        for (int c = 0; c < mask.cols(); ++c)
            if (mask(r, c)) out.push_back({r, c});
    return out;
}

int connected_components(const Mask& mask, LabelRaster& labels, bool eight_connected) {
    labels = LabelRaster::Zero(mask.rows(), mask.cols());
    int next = 0;
    std::vector<GridIndex> stack;
    const int n = eight_connected ? 8 : 4;
    for (int r = 0; r < mask.rows(); ++r) {
        for (int c = 0; c < mask.cols(); ++c) {
            if (!mask(r, c) || labels(r, c) != 0) continue;
            ++next;
            labels(r, c) = next;
            stack.push_back({r, c});
            while (!stack.empty()) {
                const GridIndex cur = stack.back();
                stack.pop_back();
                for (int k = 0; k < n; ++k) {
                    const GridIndex nb = eight_connected ? GridIndex{cur.row + kDr8[k], cur.col + kDc8[k]}
                                                         : GridIndex{cur.row + kDr4[k], cur.col + kDc4[k]};
                    if (!in_bounds(mask, nb) || !mask(nb.row, nb.col) || labels(nb.row, nb.col) != 0) continue;
                    labels(nb.row, nb.col) = next;
                    stack.push_back(nb);
                }
            }
        }
    }
    return next;
}

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, CellState fill)
    : cells_(Raster<CellState>::Constant(height, width, fill)),
      tall_(Mask::Constant(height, width, false)),
      resolution_(resolution) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("grid dimensions must be positive");
    if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
}

void OccupancyGrid::set(GridIndex c, CellState s, bool tall) {
    cells_(c.row, c.col) = s;
    tall_(c.row, c.col) = (s == CellState::Obstacle) && tall;
}

Mask OccupancyGrid::traversable() const { return cells_ == CellState::Free; }
Mask OccupancyGrid::obstacles() const { return cells_ == CellState::Obstacle; }
Mask OccupancyGrid::unknown() const { return cells_ == CellState::Unknown; }

bool operator==(const OccupancyGrid& a, const OccupancyGrid& b) {
    return a.width() == b.width() && a.height() == b.height() && a.resolution_ == b.resolution_ &&
           (a.cells_ == b.cells_).all() && (a.tall_ == b.tall_).all();
}

WallMap wall_map(const OccupancyGrid& grid) {
    WallMap w;
    w.blocked = grid.obstacles() && grid.tall_flags();
    w.resolution = grid.resolution();
    return w;
}

GridIndex world_to_grid(WorldPoint p, double resolution, int width, int height) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw BoundsError("non-finite world point");
    const double cx = std::floor(p.x / resolution);
    const double cy = std::floor(p.y / resolution);
    if (cx < 0 || cy < 0 || cx >= width || cy >= height) {
        std::ostringstream msg;
        msg << "point (" << p.x << ", " << p.y << ") outside map bounds";
        throw BoundsError(msg.str());
    }
    return {static_cast<int>(cy), static_cast<int>(cx)};
}

GridIndex world_to_grid(WorldPoint p, const OccupancyGrid& grid) {
    return world_to_grid(p, grid.resolution(), grid.width(), grid.height());
}

WorldPoint grid_to_world(GridIndex c, double resolution) {
    return {(c.col + 0.5) * resolution, (c.row + 0.5) * resolution};
}

char cell_char(CellState s, bool tall) {
    switch (s) {
        case CellState::Free: return '.';
        case CellState::Obstacle: return tall ? '#' : 'o';
        case CellState::Unknown: return '?';
    }
    return '?';
}

void write_ascii(std::ostream& os, const OccupancyGrid& grid) {
    os << grid.width() << ' ' << grid.height() << ' ' << grid.resolution() << '\n';
    std::string line(grid.width(), '.');
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) line[c] = cell_char(grid.at({r, c}), grid.tall({r, c}));
        os << line << '\n';
    }
}

OccupancyGrid read_ascii(std::istream& is) {
    int width = 0, height = 0;
    double resolution = 0.0;
    std::string header;
    if (!std::getline(is, header)) throw std::invalid_argument("ascii map: missing header");
    std::istringstream hs(header);
    if (!(hs >> width >> height >> resolution)) throw std::invalid_argument("ascii map: bad header '" + header + "'");
    OccupancyGrid grid(width, height, resolution);
    std::string line;
    for (int r = 0; r < height; ++r) {
        if (!std::getline(is, line)) throw std::invalid_argument("ascii map: truncated raster");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (static_cast<int>(line.size()) != width)
            throw std::invalid_argument("ascii map: row " + std::to_string(r) + " has wrong width");
        for (int c = 0; c < width; ++c) {
            switch (line[c]) {
                case '.': grid.set({r, c}, CellState::Free); break;
                case '#': grid.set({r, c}, CellState::Obstacle, true); break;
                case 'o': grid.set({r, c}, CellState::Obstacle, false); break;
                case '?': grid.set({r, c}, CellState::Unknown); break;
                default:
                    throw std::invalid_argument(std::string("ascii map: bad cell character '") + line[c] + "'");
            }
        }
    }
    return grid;
}

std::string to_ascii(const OccupancyGrid& grid) {
    std::ostringstream os;
    write_ascii(os, grid);
    return os.str();
}

OccupancyGrid from_ascii(const std::string& text) {
    std::istringstream is(text);
    return read_ascii(is);
}

std::vector<GridIndex> bresenham_line(GridIndex a, GridIndex b) {
    std::vector<GridIndex> out;
    for_each_bresenham(a, b, [&](GridIndex c) {
        out.push_back(c);
        return true;
    });
    return out;
}

bool line_of_sight(const Mask& blocked, GridIndex a, GridIndex b) {
    if (a == b) return true;
    return for_each_bresenham(a, b, [&](GridIndex c) {
        if (c == a || c == b) return true;
        return !blocked(c.row, c.col);
    });
}

bool line_of_sight(const WallMap& walls, GridIndex a, GridIndex b) { return line_of_sight(walls.blocked, a, b); }

}  // namespace termnav
