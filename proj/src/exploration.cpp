#include "termnav/exploration.hpp"

#include "termnav/line_of_sight.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace termnav {

int normalize_heading(int deg) {
    const int h = deg % 360;
    return h < 0 ? h + 360 : h;
}

Mask VisibilityMask::to_full() const {
    Mask full = Mask::Constant(map_rows, map_cols, false);
    for_each([&](GridIndex c) { full(c.row, c.col) = true; });
    return full;
}

VisibilityMask compute_visible(const WallMap& walls, const AgentPose& pose, double d_max, double hfov_deg,
                               int frame_id) {
    const double res = walls.resolution;
    const GridIndex agent = world_to_grid(pose.position, res, walls.width(), walls.height());
    const int reach = static_cast<int>(std::ceil(d_max / res)) + 1;
    const int r0 = std::max(0, agent.row - reach), r1 = std::min(walls.height() - 1, agent.row + reach);
    const int c0 = std::max(0, agent.col - reach), c1 = std::min(walls.width() - 1, agent.col + reach);

    VisibilityMask vm;
    vm.origin = {r0, c0};
    vm.window = Mask::Constant(r1 - r0 + 1, c1 - c0 + 1, false);
    vm.pose = pose;
    vm.frame_id = frame_id;
    vm.map_rows = walls.height();
    vm.map_cols = walls.width();

    const double theta = pose.heading_deg * std::numbers::pi / 180.0;
    const double hx = std::cos(theta), hy = std::sin(theta);
    const bool full_circle = hfov_deg >= 360.0;
    const double cos_half = std::cos(0.5 * hfov_deg * std::numbers::pi / 180.0);
    const double range2 = d_max * d_max;

    for (int r = r0; r <= r1; ++r) {
        const double dy = (r + 0.5) * res - pose.position.y;
        for (int c = c0; c <= c1; ++c) {
            const double dx = (c + 0.5) * res - pose.position.x;
            const double d2 = dx * dx + dy * dy;
            if (d2 > range2) continue;
            if (!full_circle && dx * hx + dy * hy < std::sqrt(d2) * cos_half) continue;
            if (!line_of_sight(walls.blocked, agent, {r, c})) continue;
            vm.window(r - r0, c - c0) = true;
        }
    }
    vm.window(agent.row - r0, agent.col - c0) = true;
    return vm;
}

ExplorationState::ExplorationState(int rows, int cols) : explored_(Mask::Constant(rows, cols, false)) {}

void ExplorationState::bind(RegionMap regions) {
    regions_ = std::move(regions);
    region_explored_.assign(regions_.count() + 1, 0);
    for (int r = 0; r < explored_.rows(); ++r)
        for (int c = 0; c < explored_.cols(); ++c)
            if (explored_(r, c))
                if (int l = regions_.labels(r, c)) ++region_explored_[l];
    for (auto& kf : keyframes_) kf.region_coverage = coverage_of(kf.mask);
}

double ExplorationState::rate(int region_id) const {
    const auto& info = regions_.region(region_id);
    return info.size == 0 ? 0.0 : static_cast<double>(region_explored_[region_id]) / info.size;
}

std::map<int, double> ExplorationState::rates() const {
    std::map<int, double> out;
    for (const auto& info : regions_.regions) out[info.id] = rate(info.id);
    return out;
}

void ExplorationState::note_object(const ObjectSighting& sighting) {
    if (int l = regions_.label(sighting.cell)) regions_.region(l).objects.push_back(sighting);
}

void ExplorationState::mark(GridIndex c, int& added) {
    if (explored_(c.row, c.col)) return;
    explored_(c.row, c.col) = true;
    ++explored_count_;
    ++added;
    if (regions_.labels.size() > 0)
        if (int l = regions_.labels(c.row, c.col)) ++region_explored_[l];
}

std::map<int, int> ExplorationState::coverage_of(const VisibilityMask& mask) const {
    std::map<int, int> cov;
    if (regions_.labels.size() == 0) return cov;
    mask.for_each([&](GridIndex c) {
        if (int l = regions_.labels(c.row, c.col)) ++cov[l];
    });
    return cov;
}

int accumulate(ExplorationState& state, const VisibilityMask& mask, std::span<const GridIndex> traversable_now) {
    if (mask.window.size() > 0 &&
        (mask.map_rows != state.explored_.rows() || mask.map_cols != state.explored_.cols()))
        throw std::invalid_argument("accumulate: mask and state dimensions differ");
    int added = 0;
    mask.for_each([&](GridIndex c) { state.mark(c, added); });
    for (const auto& c : traversable_now) state.mark(c, added);
    ++state.step_count_;
    state.last_new_cells_ = added;
    return added;
}

int accumulate(ExplorationState& state, const VisibilityMask& mask, const Mask& traversable_now) {
    if (traversable_now.rows() != state.explored().rows() || traversable_now.cols() != state.explored().cols())
        throw std::invalid_argument("accumulate: traversable mask and state dimensions differ");
    const auto cells = true_cells(traversable_now);
    return accumulate(state, mask, std::span<const GridIndex>(cells));
}

double region_rate(const Mask& explored, const RegionMap& rm, int region_id) {
    static_cast<void>(rm.region(region_id));  // throws on unknown id
    int hit = 0, total = 0;
    for (int r = 0; r < rm.labels.rows(); ++r)
        for (int c = 0; c < rm.labels.cols(); ++c)
            if (rm.labels(r, c) == region_id) {
                ++total;
                hit += explored(r, c) ? 1 : 0;
            }
    return total == 0 ? 0.0 : static_cast<double>(hit) / total;
}

double region_rate(const ExplorationState& state, const RegionMap& rm, int region_id) {
    return region_rate(state.explored(), rm, region_id);
}

void record_keyframe(ExplorationState& state, const VisibilityMask& mask, const KeyframeParams& params) {
    KeyFrame kf;
    kf.frame_id = mask.frame_id;
    kf.pose = mask.pose;
    mask.for_each([&](GridIndex c) { kf.new_cells += state.explored_(c.row, c.col) ? 0 : 1; });
    kf.region_coverage = state.coverage_of(mask);
    kf.mask = mask;
    state.keyframes_.push_back(std::move(kf));
    if (static_cast<int>(state.keyframes_.size()) > std::max(0, params.capacity)) {
        auto victim = std::min_element(state.keyframes_.begin(), state.keyframes_.end(),
                                       [](const KeyFrame& a, const KeyFrame& b) {
                                           if (a.new_cells != b.new_cells) return a.new_cells < b.new_cells;
                                           return a.frame_id < b.frame_id;
                                       });
        state.keyframes_.erase(victim);
    }
}

double keyframe_score(const KeyFrame& frame, int region_size, int region_id, const KeyframeParams& params) {
    const auto it = frame.region_coverage.find(region_id);
    const int cov = it == frame.region_coverage.end() ? 0 : it->second;
    const int visible = frame.mask.count();
    const double view = visible > 0 ? static_cast<double>(cov) / visible : 0.0;
    const double contribution = region_size > 0 ? static_cast<double>(cov) / region_size : 0.0;
    return params.view_weight * view + params.contribution_weight * contribution;
}

std::vector<KeyFrame> select_keyframes(const ExplorationState& state, int region_id, int k,
                                       const KeyframeParams& params) {
    const int size = state.regions().region(region_id).size;
    std::vector<std::pair<double, const KeyFrame*>> scored;
    for (const auto& kf : state.keyframes()) {
        const auto it = kf.region_coverage.find(region_id);
        if (it == kf.region_coverage.end() || it->second == 0) continue;
        scored.emplace_back(keyframe_score(kf, size, region_id, params), &kf);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->frame_id < b.second->frame_id;
    });
    std::vector<KeyFrame> out;
    for (int i = 0; i < std::min<int>(k, static_cast<int>(scored.size())); ++i) out.push_back(*scored[i].second);
    return out;
}

}  // namespace termnav
