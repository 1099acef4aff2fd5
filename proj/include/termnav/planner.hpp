#pragma once

#include "termnav/assessor.hpp"
#include "termnav/exploration.hpp"
#include "termnav/grid.hpp"
#include "termnav/segmentation.hpp"

#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace termnav {

// ---------------------------------------------------------------- frontiers

struct Frontier {
    std::vector<GridIndex> cells;
    GridIndex centroid;  // member cell closest to the cluster mean
    int region_id = 0;
    int size = 0;
};

/// Free cells with at least one Unknown 4-neighbour.
Mask frontier_cells(const OccupancyGrid& occ);

/// 8-connected clusters of frontier cells with at least `min_size` cells,
/// each tagged with the region most of its Unknown neighbours fall in.
std::vector<Frontier> detect_frontiers(const OccupancyGrid& occ, const RegionMap& rm, int min_size = 3);

// ---------------------------------------------------------------- fast marching

/// Arrival times in cells (unit speed). Infinite where not reached.
struct TravelTimeField {
    Raster<double> time;
    double resolution = 0.05;

    double at(GridIndex c) const { return time(c.row, c.col); }
    double meters(GridIndex c) const { return time(c.row, c.col) * resolution; }
    bool reachable(GridIndex c) const { return in_bounds(time, c) && std::isfinite(time(c.row, c.col)); }
};

struct FmmOptions {
    bool unknown_traversable = true;
    /// Cells within this radius (cells) of a goal with a clear straight line
    /// to it start from their exact Euclidean distance.
    double exact_init_radius = 5.0;
    /// Early exit: once every listed cell is accepted, keep going only until
    /// the front passes their largest time plus `stop_margin`.
    std::vector<GridIndex> stop_cells;
    double stop_margin = 10.0;
};

/// First-order fast marching. Each update takes the best of the eight
/// triangles formed by an axial and a diagonal neighbour, interpolating
/// linearly along their edge; diagonals never cut an obstacle corner.
/// Obstacles stay infinite.
/// Goals must be Free; throws std::invalid_argument otherwise.
TravelTimeField fmm_field(const OccupancyGrid& occ, std::span<const GridIndex> goals, const FmmOptions& options = {});
TravelTimeField fmm_field(const OccupancyGrid& occ, GridIndex goal, const FmmOptions& options = {});

/// Steepest-descent chain over 8-neighbours from `start`, stopping at a local
/// minimum (the goal on a proper field) or after `max_steps` moves.
std::vector<GridIndex> descent_path(const TravelTimeField& field, GridIndex start, int max_steps);

// ---------------------------------------------------------------- scoring

/// Category co-occurrence table standing in for commonsense scoring:
/// prior(target | objects) is the best table entry over the objects, 1 when
/// the target itself is among them.
class SemanticPrior {
public:
    SemanticPrior() = default;
    explicit SemanticPrior(std::map<std::string, std::map<std::string, double>> table) : table_(std::move(table)) {}

    double prior(const std::string& target, std::span<const std::string> objects) const;
    const auto& table() const { return table_; }

    static SemanticPrior defaults();
    static SemanticPrior from_json(const std::string& text);
    std::string to_json() const;

private:
    std::map<std::string, std::map<std::string, double>> table_;
};

struct ScoringParams {
    double distance_weight = 0.4;
    double priority_weight = 0.4;
    double semantic_weight = 0.2;
    double distance_decay_m = 4.0;
};

struct CandidateScore {
    Frontier frontier;
    double score = 0.0;
    double distance_term = 0.0;
    double priority_term = 0.0;
    double semantic_term = 0.0;
    double distance_m = 0.0;
    bool demoted = false;
};

class ExplorationExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ranks frontiers: distance_weight * exp(-d / decay) + priority_weight *
/// priority + semantic_weight * prior, with d the travel distance read from
/// `from_agent`. Frontiers of demoted regions always come last; ties go to
/// the larger frontier, then the smaller centroid. Unreachable frontiers are
/// dropped. Throws ExplorationExhausted when nothing is left.
std::vector<CandidateScore> score_candidates(std::span<const Frontier> frontiers, const RegionMap& rm,
                                             const RegionPriorities& priorities, const TravelTimeField& from_agent,
                                             const std::string& target_category, const SemanticPrior& prior,
                                             const ScoringParams& params = {});

/// Orders two candidates according to the ranking above.
bool ranks_before(const CandidateScore& a, const CandidateScore& b);

// ---------------------------------------------------------------- actions

enum class Action { Forward, TurnLeft, TurnRight, Stop };

std::string to_string(Action a);
Action action_from_string(const std::string& s);

struct MotionParams {
    double forward_step_m = 0.25;
    int turn_deg = 30;
};

/// Pose after a successful Forward/turn (no collision check).
AgentPose apply_motion(const AgentPose& pose, Action a, const MotionParams& motion = {});

/// Cells swept by a straight move from `from` to `to`, both included.
std::vector<GridIndex> swept_cells(WorldPoint from, WorldPoint to, double resolution);

struct ActionContext {
    const OccupancyGrid* known = nullptr;  // agent's map; Forward needs every swept cell known Free
    bool committed_target = false;
    double stop_distance_m = 0.75;
    MotionParams motion;
    double alignment_tolerance_deg = 15.0;
    /// Keep going straight while the current heading earns this share of
    /// the best safe heading's progress.
    double keep_heading_ratio = 0.8;
    int lookahead_cells = 6;
};

class ReplanSignal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discrete controller on a goal field. Stop when a target is committed and
/// the agent is within `stop_distance_m` of it along the field. Otherwise
/// keep going while the current heading makes near-best progress, else face
/// the steepest-descent direction, falling back to the best safe heading when
/// the direct one is blocked. Throws ReplanSignal when the agent cell is not reached by the
/// field.
Action next_action(const TravelTimeField& field, const AgentPose& pose, const ActionContext& ctx);

}  // namespace termnav
