#pragma once

#include "termnav/grid.hpp"
#include "termnav/segmentation.hpp"

#include <map>
#include <span>
#include <vector>

namespace termnav {

struct AgentPose {
    WorldPoint position;
    int heading_deg = 0;  // [0, 360); 0 faces +x, 90 faces +y (increasing row)

    friend bool operator==(const AgentPose& a, const AgentPose& b) {
        return a.position.x == b.position.x && a.position.y == b.position.y && a.heading_deg == b.heading_deg;
    }
};

int normalize_heading(int deg);

/// Visible cells of one frame, stored as a window over the map.
struct VisibilityMask {
    GridIndex origin;
    Mask window;
    AgentPose pose;
    int frame_id = 0;
    int map_rows = 0;
    int map_cols = 0;

    bool contains(GridIndex c) const {
        const int r = c.row - origin.row, k = c.col - origin.col;
        return r >= 0 && k >= 0 && r < window.rows() && k < window.cols() && window(r, k);
    }
    int count() const { return static_cast<int>(window.count()); }
    Mask to_full() const;

    template <typename F>
    void for_each(F&& f) const {
        for (int r = 0; r < window.rows(); ++r)
            for (int k = 0; k < window.cols(); ++k)
                if (window(r, k)) f(GridIndex{origin.row + r, origin.col + k});
    }
};

/// Cells within `d_max` meters of the agent, inside the heading-centered
/// `hfov_deg` cone, with line of sight from the agent cell. The agent cell is
/// always included.
VisibilityMask compute_visible(const WallMap& walls, const AgentPose& pose, double d_max, double hfov_deg,
                               int frame_id = 0);

struct KeyFrame {
    int frame_id = 0;
    AgentPose pose;
    VisibilityMask mask;
    int new_cells = 0;
    std::map<int, int> region_coverage;  // region id -> visible cells of that region
};

struct KeyframeParams {
    int capacity = 64;
    double view_weight = 0.5;          // share of the frame lying in the region
    double contribution_weight = 0.5;  // share of the region covered by the frame
};

/// Explored set E, a per-region explored-cell cache for the bound region map,
/// and the keyframe buffer. E only grows.
class ExplorationState {
public:
    ExplorationState() = default;
    ExplorationState(int rows, int cols);

    /// Switch to a new region map: recounts the explored-cell cache and the
    /// keyframe coverage tables against it.
    void bind(RegionMap regions);

    const Mask& explored() const { return explored_; }
    int explored_count() const { return explored_count_; }
    const RegionMap& regions() const { return regions_; }
    const std::vector<KeyFrame>& keyframes() const { return keyframes_; }
    int step_count() const { return step_count_; }
    int last_new_cells() const { return last_new_cells_; }

    /// Cached rate |E ∩ R_i| / |R_i| of the bound map. Throws on unknown id.
    double rate(int region_id) const;
    std::map<int, double> rates() const;
    /// Appends a sighting to the object list of the region holding its cell.
    void note_object(const ObjectSighting& sighting);

    friend int accumulate(ExplorationState&, const VisibilityMask&, std::span<const GridIndex>);
    friend void record_keyframe(ExplorationState&, const VisibilityMask&, const KeyframeParams&);

private:
    void mark(GridIndex c, int& added);
    std::map<int, int> coverage_of(const VisibilityMask& mask) const;

    Mask explored_;
    int explored_count_ = 0;
    RegionMap regions_;
    std::vector<int> region_explored_;  // index = region id
    std::vector<KeyFrame> keyframes_;
    int step_count_ = 0;
    int last_new_cells_ = 0;
};

/// E <- E ∪ mask ∪ traversable. Returns the number of cells added. Only the
/// rates of regions touched by the new cells change.
int accumulate(ExplorationState& state, const VisibilityMask& mask, std::span<const GridIndex> traversable_now);
int accumulate(ExplorationState& state, const VisibilityMask& mask, const Mask& traversable_now);

/// From-scratch |E ∩ R_i| / |R_i|.
double region_rate(const Mask& explored, const RegionMap& rm, int region_id);
double region_rate(const ExplorationState& state, const RegionMap& rm, int region_id);

/// Appends a keyframe for `mask`. Call before accumulating the same mask:
/// new_cells counts the mask cells not yet in E. When the buffer exceeds its
/// capacity the frame with the fewest new cells is dropped (oldest first on
/// ties), which may be the new frame itself.
void record_keyframe(ExplorationState& state, const VisibilityMask& mask, const KeyframeParams& params = {});

double keyframe_score(const KeyFrame& frame, int region_size, int region_id, const KeyframeParams& params);

/// Up to `k` frames that saw `region_id`, best score first, ties by frame id.
std::vector<KeyFrame> select_keyframes(const ExplorationState& state, int region_id, int k,
                                       const KeyframeParams& params = {});

}  // namespace termnav
