#include "termnav/rng.hpp"
#include "termnav/simulator.hpp"

namespace termnav {

namespace {
constexpr std::uint64_t kMissSalt = 0x6d697373;
constexpr std::uint64_t kAlarmSalt = 0x616c726d;
}  // namespace

SenseResult sense(const Scenario& scenario, const WallMap& truth_walls, const OccupancyGrid& known,
                  const AgentPose& pose, const SensorParams& params, std::uint64_t episode, int frame) {
    SenseResult out{compute_visible(truth_walls, pose, params.d_max, params.hfov_deg, frame), {}, {}};
    const auto f = static_cast<std::uint64_t>(frame);

    // Visible cells, plus the obstacle faces bounding visible open cells: a
    // wall seen at a grazing angle is occluded cell-to-cell but its face is not.
    Mask queued = Mask::Constant(known.height(), known.width(), false);
    auto reveal = [&](GridIndex c) {
        if (queued(c.row, c.col) || known.at(c) != CellState::Unknown) return;
        queued(c.row, c.col) = true;
        out.updates.push_back({c, scenario.grid.at(c), scenario.grid.tall(c)});
    };
    out.mask.for_each([&](GridIndex c) {
        reveal(c);
        if (truth_walls.blocked(c.row, c.col)) return;
        for (int k = 0; k < 4; ++k) {
            const GridIndex n{c.row + kDr4[k], c.col + kDc4[k]};
            if (scenario.grid.contains(n) && scenario.grid.at(n) == CellState::Obstacle) reveal(n);
        }
    });

    for (std::size_t i = 0; i < scenario.objects.size(); ++i) {
        const auto& obj = scenario.objects[i];
        if (!out.mask.contains(obj.cell)) continue;
        if (params.miss_rate > 0 && keyed_uniform({params.noise_seed, episode, f, i, kMissSalt}) < params.miss_rate)
            continue;
        out.detections.push_back({obj.category, obj.cell});
    }

    if (params.false_alarm_rate > 0 &&
        keyed_uniform({params.noise_seed, episode, f, kAlarmSalt}) < params.false_alarm_rate) {
        std::vector<GridIndex> candidates;
        out.mask.for_each([&](GridIndex c) {
            if (scenario.grid.is_free(c)) candidates.push_back(c);
        });
        if (!candidates.empty()) {
            const auto pick = hash_key({params.noise_seed, episode, f, kAlarmSalt, 1}) % candidates.size();
            out.detections.push_back({scenario.target_category, candidates[pick]});
        }
    }
    return out;
}

int apply_updates(OccupancyGrid& known, std::span<const CellUpdate> updates) {
    int tall = 0;
    for (const auto& u : updates) {
        if (known.at(u.cell) != CellState::Unknown) continue;
        known.set(u.cell, u.state, u.tall);
        if (u.state == CellState::Obstacle && u.tall) ++tall;
    }
    return tall;
}

}  // namespace termnav
