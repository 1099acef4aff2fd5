#pragma once

#include "termnav/raster.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace termnav {

enum class CellState : std::uint8_t { Free, Obstacle, Unknown };

struct WorldPoint {
    double x = 0.0;  // meters, along columns
    double y = 0.0;  // meters, along rows
};

/// Metric occupancy grid. Obstacles carry a `tall` flag: tall obstacles
/// block vision and make up the wall map, low ones only block motion.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(int width, int height, double resolution = 0.05,
                  CellState fill = CellState::Unknown);

    int width() const { return static_cast<int>(cells_.cols()); }
    int height() const { return static_cast<int>(cells_.rows()); }
    double resolution() const { return resolution_; }

    CellState at(GridIndex c) const { return cells_(c.row, c.col); }
    bool tall(GridIndex c) const { return tall_(c.row, c.col); }
    void set(GridIndex c, CellState s, bool tall = false);

    bool contains(GridIndex c) const { return in_bounds(cells_, c); }
    bool is_free(GridIndex c) const { return at(c) == CellState::Free; }

    const Raster<CellState>& cells() const { return cells_; }
    const Mask& tall_flags() const { return tall_; }

    /// Traversable set: exactly the Free cells.
    Mask traversable() const;
    /// Obstacle set: exactly the Obstacle cells.
    Mask obstacles() const;
    Mask unknown() const;

    friend bool operator==(const OccupancyGrid& a, const OccupancyGrid& b);

private:
    Raster<CellState> cells_;
    Mask tall_;
    double resolution_ = 0.05;
};

/// Vision-blocking subset of the obstacles.
struct WallMap {
    Mask blocked;
    double resolution = 0.05;

    int width() const { return static_cast<int>(blocked.cols()); }
    int height() const { return static_cast<int>(blocked.rows()); }
};

WallMap wall_map(const OccupancyGrid& grid);

class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Cell containing `p` (floor of p / resolution), row from y and col from x.
GridIndex world_to_grid(WorldPoint p, const OccupancyGrid& grid);
GridIndex world_to_grid(WorldPoint p, double resolution, int width, int height);
/// Center of cell `c`.
WorldPoint grid_to_world(GridIndex c, double resolution);

// ASCII map: header "width height resolution", then one row per line using
// '.' Free, '#' tall obstacle, 'o' low obstacle, '?' Unknown.
std::string to_ascii(const OccupancyGrid& grid);
OccupancyGrid from_ascii(const std::string& text);
void write_ascii(std::ostream& os, const OccupancyGrid& grid);
OccupancyGrid read_ascii(std::istream& is);

char cell_char(CellState s, bool tall);

}  // namespace termnav
