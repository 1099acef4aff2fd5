#include "termnav/planner.hpp"

#include "termnav/line_of_sight.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace termnav {

std::string to_string(Action a) {
    switch (a) {
        case Action::Forward: return "forward";
        case Action::TurnLeft: return "left";
        case Action::TurnRight: return "right";
        case Action::Stop: return "stop";
    }
    return "stop";
}

Action action_from_string(const std::string& s) {
    if (s == "forward") return Action::Forward;
    if (s == "left") return Action::TurnLeft;
    if (s == "right") return Action::TurnRight;
    if (s == "stop") return Action::Stop;
    throw std::invalid_argument("unknown action '" + s + "'");
}

namespace {

WorldPoint advance(WorldPoint p, int heading_deg, double step) {
    const double th = heading_deg * std::numbers::pi / 180.0;
    return {p.x + step * std::cos(th), p.y + step * std::sin(th)};
}

// Signed smallest rotation from `from` to `to`, in (-180, 180].
double angle_diff(double to, double from) {
    double d = std::fmod(to - from, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

Action turn_toward(int heading, int desired) {
    return angle_diff(desired, heading) < 0 ? Action::TurnLeft : Action::TurnRight;
}

}  // namespace

AgentPose apply_motion(const AgentPose& pose, Action a, const MotionParams& motion) {
    AgentPose out = pose;
    switch (a) {
        case Action::Forward: out.position = advance(pose.position, pose.heading_deg, motion.forward_step_m); break;
        case Action::TurnLeft: out.heading_deg = normalize_heading(pose.heading_deg - motion.turn_deg); break;
        case Action::TurnRight: out.heading_deg = normalize_heading(pose.heading_deg + motion.turn_deg); break;
        case Action::Stop: break;
    }
    return out;
}

std::vector<GridIndex> swept_cells(WorldPoint from, WorldPoint to, double resolution) {
    const GridIndex a{static_cast<int>(std::floor(from.y / resolution)), static_cast<int>(std::floor(from.x / resolution))};
    const GridIndex b{static_cast<int>(std::floor(to.y / resolution)), static_cast<int>(std::floor(to.x / resolution))};
    return bresenham_line(a, b);
}

Action next_action(const TravelTimeField& field, const AgentPose& pose, const ActionContext& ctx) {
    if (ctx.known == nullptr) throw std::invalid_argument("next_action: no map");
    const OccupancyGrid& known = *ctx.known;
    const double res = known.resolution();
    const GridIndex agent = world_to_grid(pose.position, known);
    if (!field.reachable(agent)) throw ReplanSignal("agent cell is not reached by the goal field");
    const double t0 = field.at(agent);
    if (ctx.committed_target && t0 * res <= ctx.stop_distance_m) return Action::Stop;

    const int turn = ctx.motion.turn_deg;
    const int nheadings = 360 / turn;
    std::vector<double> gain(nheadings, -std::numeric_limits<double>::infinity());
    std::vector<char> safe(nheadings, 0);
    for (int i = 0; i < nheadings; ++i) {
        const int h = i * turn;
        const WorldPoint land = advance(pose.position, h, ctx.motion.forward_step_m);
        if (land.x < 0 || land.y < 0 || land.x >= known.width() * res || land.y >= known.height() * res) continue;
        bool ok = true;
        for (const auto& c : swept_cells(pose.position, land, res))
            if (!known.contains(c) || !known.is_free(c)) ok = false;
        if (!ok) continue;
        safe[i] = 1;
        const GridIndex lc = world_to_grid(land, known);
        gain[i] = t0 - field.at(lc);
    }
    const int cur = pose.heading_deg / turn;
    const double best_gain = *std::max_element(gain.begin(), gain.end());
    if (safe[cur] && gain[cur] > 0 && gain[cur] >= ctx.keep_heading_ratio * best_gain) return Action::Forward;

    const auto path = descent_path(field, agent, ctx.lookahead_cells);
    if (path.size() > 1) {
        const WorldPoint wp = grid_to_world(path.back(), res);
        const double bearing = std::atan2(wp.y - pose.position.y, wp.x - pose.position.x) * 180.0 / std::numbers::pi;
        if (std::abs(angle_diff(bearing, pose.heading_deg)) <= ctx.alignment_tolerance_deg && safe[cur] &&
            gain[cur] > 0)
            return Action::Forward;
        const int desired = normalize_heading(static_cast<int>(std::lround(bearing / turn)) * turn);
        const int di = desired / turn;
        if (di != cur && safe[di] && gain[di] > 0) return turn_toward(pose.heading_deg, desired);
    }

    int best = -1;
    for (int k = 0; k <= nheadings / 2; ++k) {
        for (int sign : {1, -1}) {
            const int i = ((cur + sign * k) % nheadings + nheadings) % nheadings;
            if (!safe[i] || gain[i] <= 0) continue;
            if (best < 0 || gain[i] > gain[best]) best = i;
            if (k == 0) break;
        }
    }
    if (best < 0) {
        if (ctx.committed_target && path.size() <= 1) return Action::Stop;
        throw ReplanSignal("no heading makes progress on the goal field");
    }
    if (best == cur) return Action::Forward;
    return turn_toward(pose.heading_deg, best * turn);
}

}  // namespace termnav
