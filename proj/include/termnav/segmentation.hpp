#pragma once

#include "termnav/distance_transform.hpp"
#include "termnav/grid.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace termnav {

struct ObjectSighting {
    std::string category;
    GridIndex cell;

    friend bool operator==(const ObjectSighting&, const ObjectSighting&) = default;
};

struct RegionInfo {
    int id = 0;
    int size = 0;
    GridIndex centroid;
    std::set<int> adjacent;
    std::vector<ObjectSighting> objects;
};

/// Partition of the segmentation domain into regions. Label 0 means "no
/// region" (walls, low obstacles, cells outside the domain); ids run 1..n and
/// `regions[i]` describes region i + 1.
struct RegionMap {
    LabelRaster labels;
    std::vector<RegionInfo> regions;
    std::vector<std::string> warnings;

    int count() const { return static_cast<int>(regions.size()); }
    bool has(int id) const { return id >= 1 && id <= count(); }
    const RegionInfo& region(int id) const;
    RegionInfo& region(int id);
    int label(GridIndex c) const { return labels(c.row, c.col); }
};

struct SegmentationParams {
    double wall_margin = 1.5;       // cells
    double center_threshold = 3.0;  // cells
    int neighborhood_radius = 5;    // Chebyshev radius, cells
    int merge_threshold = 400;      // cells
    bool hull_as_wall = true;
};

/// Cells within `margin` of a wall (and of the map border when
/// `hull_as_wall`, which treats border cells as walls).
Mask preprocess_walls(const WallMap& walls, double margin, bool hull_as_wall = true);

/// Local maxima of `distance` that reach `threshold` and equal the maximum
/// over their Chebyshev neighborhood. A connected plateau of maxima yields a
/// single representative: its cell closest to the plateau mean.
std::vector<GridIndex> detect_centers(const DistanceField& distance, double threshold, int neighborhood_radius);

/// Seeded watershed over the inverted distance surface. Each cell of
/// `free_mask` joins the seed with the smallest topographical distance, the
/// shortest path cost where entering a cell costs step length times
/// (max distance - distance(cell)). Seeds are sorted row-major and numbered
/// from 1; exact ties go to the smaller id. Cells not reachable from any seed
/// keep label 0.
RegionMap watershed_segment(const DistanceField& distance, std::vector<GridIndex> seeds, const Mask& free_mask);

/// Repeatedly folds the smallest region below `threshold` into its largest
/// neighbour until none is left or each remaining small region has no
/// neighbour. Ids are compacted afterwards.
RegionMap merge_small_regions(RegionMap rm, int threshold);

/// Full pipeline: wall band, distance map, centers, watershed, merging. The
/// domain is Free plus Unknown, so regions extend over unexplored space.
RegionMap segment_regions(const WallMap& walls, const OccupancyGrid& occ, const SegmentationParams& params = {});

/// Recompute sizes, centroids and adjacency from `rm.labels`. Keeps objects.
void refresh_region_info(RegionMap& rm);

/// For every region of `next`, the id of the region of `prev` it overlaps
/// most (greedy one-to-one by overlap size), or 0 if none is left.
std::vector<int> match_regions(const RegionMap& prev, const RegionMap& next);

/// Relabels `rm` so that equal partitions give equal label rasters: ids are
/// assigned in row-major order of each region's first cell.
LabelRaster canonical_labels(const LabelRaster& labels);

// Structured export: label raster plus region table.
std::string region_map_to_json(const RegionMap& rm);
RegionMap region_map_from_json(const std::string& text);
/// Binary PPM (P6) with one deterministic color per region, black for label 0.
void write_region_ppm(std::ostream& os, const RegionMap& rm);

}  // namespace termnav
