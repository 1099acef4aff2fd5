#pragma once

#include "termnav/assessor.hpp"
#include "termnav/exploration.hpp"
#include "termnav/grid.hpp"
#include "termnav/planner.hpp"
#include "termnav/segmentation.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace termnav {

// ---------------------------------------------------------------- scenarios

/// Ground-truth room rectangle in cells, [row0, row1) x [col0, col1).
struct Room {
    int id = 0;
    std::string type;
    int row0 = 0, col0 = 0, row1 = 0, col1 = 0;

    bool contains(GridIndex c) const { return c.row >= row0 && c.row < row1 && c.col >= col0 && c.col < col1; }
    friend bool operator==(const Room&, const Room&) = default;
};

struct Scenario {
    OccupancyGrid grid;  // tall flags mark vision-blocking obstacles
    std::vector<ObjectPlacement> objects;
    std::vector<Room> rooms;
    std::string target_category;
    AgentPose start;
    std::uint64_t seed = 0;
    bool target_absent = false;

    std::vector<GridIndex> target_cells() const;
};

bool operator==(const Scenario& a, const Scenario& b);

struct FloorplanParams {
    int min_rooms = 4;
    int max_rooms = 6;
    double min_room_size = 2.5;  // meters, shortest room side
    double max_room_size = 4.5;  // meters, used to size the footprint
    double corridor_width = 0.9; // doorway width, meters
    double wall_thickness = 0.15;
    double object_density = 1.0;
    double furniture_density = 1.0;
    double extra_door_probability = 0.25;
    double resolution = 0.05;
    std::uint64_t seed = 1;
    std::string target_category;  // empty: pick one present in the plan
    bool target_absent = false;
    double min_start_distance = 2.0;  // meters from every target object
    double max_extent = 0.0;          // meters, caps the footprint side; 0 means no cap
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Categories the generator can pick as targets.
const std::vector<std::string>& target_categories();

/// BSP floorplan: recursive room splits, doorways along a random spanning tree
/// of the room adjacency graph (plus extra doors), wall-flush furniture that
/// keeps free space connected, objects drawn from a room-type table.
/// Deterministic per seed. Throws GenerationError on infeasible parameters.
Scenario generate_floorplan(const FloorplanParams& params);

/// True iff all Free cells form one 8-connected component.
bool free_space_connected(const OccupancyGrid& grid);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

// ---------------------------------------------------------------- sensing

struct SensorParams {
    double d_max = 5.0;  // meters
    double hfov_deg = 79.0;
    double miss_rate = 0.0;             // per visible object and frame
    double false_alarm_rate = 0.0;      // per frame, spurious target sighting
    std::uint64_t noise_seed = 0;
};

struct CellUpdate {
    GridIndex cell;
    CellState state;
    bool tall = false;
};

struct SenseResult {
    VisibilityMask mask;
    std::vector<Detection> detections;
    // Cells of the mask still Unknown in `known`, plus unknown obstacles
    // 4-adjacent to visible open cells, with their true state.
    std::vector<CellUpdate> updates;
};

/// Visibility from the true wall map; reveals Unknown cells of the mask and
/// reports objects in view, subject to the detector noise rates. Noise draws
/// are keyed on (noise_seed, episode, frame).
SenseResult sense(const Scenario& scenario, const WallMap& truth_walls, const OccupancyGrid& known,
                  const AgentPose& pose, const SensorParams& params, std::uint64_t episode, int frame);

/// Applies the updates; returns the number of newly known tall obstacles.
int apply_updates(OccupancyGrid& known, std::span<const CellUpdate> updates);

// ---------------------------------------------------------------- motion

struct EpisodeState {
    AgentPose pose;
    double path_length = 0.0;
    int collisions = 0;
    int steps = 0;
    bool terminated = false;
};

class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Forward moves one step along the heading unless the swept cells hit an
/// obstacle or leave the map (then the pose stays and a collision is
/// counted); turns rotate; Stop terminates. Throws StateError once terminated.
EpisodeState step(const OccupancyGrid& truth, EpisodeState state, Action action, const MotionParams& motion = {});

// ---------------------------------------------------------------- episodes

enum class Policy { Naive, Rate };

std::string to_string(Policy p);
Policy policy_from_string(const std::string& s);

struct EpisodeConfig {
    int max_steps = 500;
    double success_radius = 1.0;
    double stop_distance = 0.6;  // agent stops this close (along its own map) to a committed target
    SensorParams sensor;
    double trigger_threshold = 0.7;
    AssessorConfig assessor;
    Policy policy = Policy::Rate;
    bool use_segmentation = true;       // off: one global region
    bool use_region_estimation = true;  // off: explored set is the known traversable cells only
    SegmentationParams segmentation;
    int resegment_wall_cells = 50;
    KeyframeParams keyframes;
    int assessment_keyframes = 8;
    ScoringParams scoring;
    PriorityParams priorities;
    MotionParams motion;
    int min_frontier_size = 3;
    double goal_hysteresis = 0.05;
    SemanticPrior semantic_prior = SemanticPrior::defaults();
    bool record_trace = true;
};

void validate(const EpisodeConfig& config);

struct TerminationEvent {
    int step = 0;
    int region_id = 0;  // persistent region id
    Verdict verdict = Verdict::Uncertain;
    double rate = 0.0;
};

struct StepRecord {
    int step = 0;
    AgentPose pose;  // before the action
    Action action = Action::Stop;
    int new_cells = 0;
    int explored = 0;
    int region = 0;  // persistent id of the agent's region
    double region_rate = 0.0;
    std::map<int, double> rates;  // persistent region id -> rate
    std::optional<GridIndex> goal;
    int frontiers = 0;
    bool committed = false;
    bool collision = false;
};

struct EpisodeResult {
    bool success = false;
    int steps_taken = 0;
    double path_length = 0.0;
    double shortest_path = 0.0;     // geodesic from start to the success region
    double initial_distance = 0.0;  // geodesic from start to the nearest target
    double final_distance_to_target = 0.0;
    int collisions = 0;
    std::string end_reason;
    std::vector<StepRecord> trace;
    std::vector<TerminationEvent> termination_events;
    std::optional<int> first_detection_step;
    std::optional<double> found_at_rate;  // rate of the target's region when first detected
    int regions_seen = 0;                 // persistent region ids issued
    int resegmentations = 0;
    int rejected_detections = 0;
};

/// Read-only view handed to an observer after each step's bookkeeping.
struct StepView {
    int step;
    const OccupancyGrid& known;
    const ExplorationState& exploration;
    const RegionMap& regions;
    bool resegmented;
};

using StepObserver = std::function<void(const StepView&)>;

/// One object-goal episode: sense, update the map, re-segment when enough
/// new wall cells appeared, accumulate the explored set, assess the agent's
/// region once its rate reaches the trigger (Rate policy), then either home
/// in on a confirmed detection or pick a frontier and take one action.
EpisodeResult run_episode(const Scenario& scenario, const EpisodeConfig& config, const StepObserver& observer = {});

struct Metrics {
    double success = 0.0;
    double spl = 0.0;
    double soft_spl = 0.0;
};

/// SPL = success * shortest / max(path, shortest); SoftSPL replaces success
/// by max(0, 1 - final / initial). A zero shortest path gives SPL = success.
Metrics adjudicate(const EpisodeResult& result);

std::string step_record_to_json(const StepRecord& r);
std::string termination_events_to_json(const std::vector<TerminationEvent>& events);
/// Everything but the trace, plus the adjudicated metrics.
std::string episode_result_to_json(const EpisodeResult& r);

}  // namespace termnav
