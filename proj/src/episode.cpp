#include "termnav/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace termnav {

std::string to_string(Policy p) { return p == Policy::Naive ? "naive" : "rate"; }

Policy policy_from_string(const std::string& s) {
    if (s == "naive") return Policy::Naive;
    if (s == "rate") return Policy::Rate;
    throw std::invalid_argument("unknown policy '" + s + "'");
}

void validate(const EpisodeConfig& c) {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigurationError(std::string("episode config: ") + what);
    };
    require(c.max_steps > 0, "max_steps must be positive");
    require(c.trigger_threshold > 0 && c.trigger_threshold <= 1, "trigger_threshold must lie in (0, 1]");
    require(c.success_radius > 0, "success_radius must be positive");
    require(c.stop_distance >= 0, "stop_distance must be non-negative");
    require(c.sensor.d_max > 0, "d_max must be positive");
    require(c.sensor.hfov_deg > 0 && c.sensor.hfov_deg <= 360, "hfov must lie in (0, 360]");
    require(c.sensor.miss_rate >= 0 && c.sensor.miss_rate <= 1, "miss_rate must lie in [0, 1]");
    require(c.sensor.false_alarm_rate >= 0 && c.sensor.false_alarm_rate <= 1, "false_alarm_rate must lie in [0, 1]");
    require(c.resegment_wall_cells > 0, "resegment_wall_cells must be positive");
    require(c.assessment_keyframes > 0, "assessment_keyframes must be positive");
    require(c.min_frontier_size > 0, "min_frontier_size must be positive");
    require(c.keyframes.capacity > 0, "keyframe capacity must be positive");
    require(c.motion.forward_step_m > 0 && c.motion.turn_deg > 0, "motion steps must be positive");
    static_cast<void>(Assessor(c.assessor));  // validates the assessor settings
}

EpisodeState step(const OccupancyGrid& truth, EpisodeState state, Action action, const MotionParams& motion) {
    if (state.terminated) throw StateError("action after the episode terminated");
    ++state.steps;
    switch (action) {
        case Action::Stop: state.terminated = true; break;
        case Action::TurnLeft:
        case Action::TurnRight: state.pose = apply_motion(state.pose, action, motion); break;
        case Action::Forward: {
            const AgentPose next = apply_motion(state.pose, action, motion);
            bool blocked = false;
            for (const auto& c : swept_cells(state.pose.position, next.position, truth.resolution()))
                if (!truth.contains(c) || truth.at(c) == CellState::Obstacle) blocked = true;
            if (blocked) {
                ++state.collisions;
            } else {
                state.path_length += std::hypot(next.position.x - state.pose.position.x,
                                                next.position.y - state.pose.position.y);
                state.pose = next;
            }
            break;
        }
    }
    return state;
}

namespace {

RegionMap single_region(const OccupancyGrid& known) {
    RegionMap rm;
    const Mask domain = known.traversable() || known.unknown();
    rm.labels = domain.cast<int>();
    if (domain.any()) rm.regions.push_back(RegionInfo{1, 0, {}, {}, {}});
    refresh_region_info(rm);
    return rm;
}

bool within_disk(GridIndex a, GridIndex b, int radius) {
    const int dr = a.row - b.row, dc = a.col - b.col;
    return dr * dr + dc * dc <= radius * radius;
}

// Everything the agent keeps between steps.
class Agent {
public:
    Agent(const Scenario& scenario, const EpisodeConfig& config)
        : scenario_(scenario),
          config_(config),
          truth_walls_(wall_map(scenario.grid)),
          known_(scenario.grid.width(), scenario.grid.height(), scenario.grid.resolution()),
          exploration_(scenario.grid.height(), scenario.grid.width()),
          assessor_(config.assessor),
          cleared_(Mask::Constant(scenario.grid.height(), scenario.grid.width(), false)),
          blacklist_(Mask::Constant(scenario.grid.height(), scenario.grid.width(), false)),
          avoid_(Mask::Constant(scenario.grid.height(), scenario.grid.width(), false)) {}

    EpisodeResult run(const StepObserver& observer);

private:
    void resegment();
    void refill_region_objects(RegionMap& rm) const;
    void handle_detections(const std::vector<Detection>& detections, int t);
    void maybe_assess(GridIndex agent, int t);
    Action plan(GridIndex agent, StepRecord& record);
    Action explore(GridIndex agent, StepRecord& record);
    int track(int local) const { return local >= 1 && local <= static_cast<int>(tracks_.size()) ? tracks_[local - 1] : 0; }
    RegionPriorities local_priorities() const;
    void refresh_planning_map();
    bool avoid_dead_end(const TravelTimeField& field, GridIndex agent);
    void retag_frontiers(std::vector<Frontier>& frontiers, const RegionPriorities& priorities) const;

    const Scenario& scenario_;
    const EpisodeConfig& config_;
    WallMap truth_walls_;
    OccupancyGrid known_;
    ExplorationState exploration_;
    Assessor assessor_;
    std::uint64_t episode_key_ = scenario_.seed;

    std::vector<int> tracks_;  // local region id - 1 -> persistent id
    int next_track_ = 1;
    std::map<int, RegionPriority> track_priority_;
    std::set<int> assessed_;
    Mask cleared_;    // cells of regions judged target-free
    Mask blacklist_;  // frontier cells given up on
    Mask avoid_;      // cells the goal field led into but no step could follow
    OccupancyGrid planning_;
    std::vector<ObjectSighting> seen_;
    std::set<std::pair<int, int>> rejected_;
    std::optional<GridIndex> committed_;
    std::optional<GridIndex> goal_;
    int stalled_turns_ = 0;
    int wall_growth_ = 0;
    EpisodeResult result_;
};

void Agent::refill_region_objects(RegionMap& rm) const {
    for (auto& info : rm.regions) info.objects.clear();
    for (const auto& o : seen_)
        if (int l = rm.label(o.cell)) rm.region(l).objects.push_back(o);
}

void Agent::resegment() {
    RegionMap next = config_.use_segmentation ? segment_regions(wall_map(known_), known_, config_.segmentation)
                                              : single_region(known_);
    const auto matched = match_regions(exploration_.regions(), next);
    std::vector<int> tracks(next.count(), 0);
    for (int i = 0; i < next.count(); ++i) {
        const int prev = matched[i];
        tracks[i] = prev > 0 ? track(prev) : next_track_++;
    }
    tracks_ = std::move(tracks);
    // A region stays demoted only while most of its cells were judged target-free.
    for (const auto& info : next.regions) {
        const int id = tracks_[info.id - 1];
        auto it = track_priority_.find(id);
        if (it == track_priority_.end() || !it->second.demoted) continue;
        int inside = 0;
        for (int r = 0; r < next.labels.rows(); ++r)
            for (int c = 0; c < next.labels.cols(); ++c)
                if (next.labels(r, c) == info.id && cleared_(r, c)) ++inside;
        if (2 * inside < info.size) it->second.demoted = false, it->second.score = config_.priorities.base;
    }
    refill_region_objects(next);
    exploration_.bind(std::move(next));
    wall_growth_ = 0;
    ++result_.resegmentations;
}

void Agent::refresh_planning_map() {
    planning_ = known_;
    for (int r = 0; r < avoid_.rows(); ++r)
        for (int c = 0; c < avoid_.cols(); ++c)
            if (avoid_(r, c) && planning_.at({r, c}) != CellState::Obstacle) planning_.set({r, c}, CellState::Obstacle);
}

// The field runs through cells no 0.25 m step can enter (a sliver, a corner
// still unseen): close the first few and let the next field route around.
bool Agent::avoid_dead_end(const TravelTimeField& field, GridIndex agent) {
    bool added = false;
    const auto path = descent_path(field, agent, 4);
    for (std::size_t i = 1; i < path.size(); ++i) {
        const GridIndex c = path[i];
        if (c == agent || avoid_(c.row, c.col)) continue;
        avoid_(c.row, c.col) = true;
        added = true;
    }
    if (added) refresh_planning_map();
    return added;
}

RegionPriorities Agent::local_priorities() const {
    RegionPriorities local(config_.priorities);
    for (int l = 1; l <= static_cast<int>(tracks_.size()); ++l) {
        auto it = track_priority_.find(tracks_[l - 1]);
        if (it == track_priority_.end()) continue;
        RegionPriority p = it->second;
        p.region_id = l;
        local.set(p);
    }
    return local;
}

// A frontier of a demoted region may still open onto unexplored space that
// belongs elsewhere: look a short way into Unknown and take the best region
// found there.
void Agent::retag_frontiers(std::vector<Frontier>& frontiers, const RegionPriorities& priorities) const {
    const RegionMap& rm = exploration_.regions();
    const int depth = std::max(1, static_cast<int>(std::lround(1.5 / known_.resolution())));
    Raster<int> seen = Raster<int>::Constant(known_.height(), known_.width(), -1);
    for (int fi = 0; fi < static_cast<int>(frontiers.size()); ++fi) {
        Frontier& f = frontiers[fi];
        if (f.region_id == 0 || !priorities.demoted(f.region_id)) continue;
        std::vector<GridIndex> layer = f.cells, next;
        for (const auto& c : layer) seen(c.row, c.col) = fi;
        int best = 0;
        for (int d = 0; d < depth && !layer.empty() && best == 0; ++d) {
            next.clear();
            for (const auto& c : layer)
                for (int k = 0; k < 4; ++k) {
                    const GridIndex n{c.row + kDr4[k], c.col + kDc4[k]};
                    if (!known_.contains(n) || seen(n.row, n.col) == fi || known_.at(n) != CellState::Unknown) continue;
                    seen(n.row, n.col) = fi;
                    next.push_back(n);
                    const int l = rm.label(n);
                    if (l != 0 && !priorities.demoted(l) && (best == 0 || priorities.score(l) > priorities.score(best)))
                        best = l;
                }
            std::swap(layer, next);
        }
        if (best != 0) f.region_id = best;
    }
}

void Agent::handle_detections(const std::vector<Detection>& detections, int t) {
    const RegionMap& rm = exploration_.regions();
    for (const auto& d : detections) {
        const ObjectSighting s{d.category, d.cell};
        if (std::find(seen_.begin(), seen_.end(), s) == seen_.end()) {
            seen_.push_back(s);
            exploration_.note_object(s);
        }
        if (d.category != scenario_.target_category) continue;
        const bool real = std::any_of(scenario_.objects.begin(), scenario_.objects.end(),
                                      [&](const ObjectPlacement& o) { return o.category == d.category && o.cell == d.cell; });
        if (real && !result_.first_detection_step) {
            result_.first_detection_step = t;
            if (int l = rm.label(d.cell)) result_.found_at_rate = exploration_.rate(l);
        }
        if (committed_ || rejected_.contains({d.cell.row, d.cell.col})) continue;
        const QueryKey key{episode_key_, static_cast<std::uint64_t>(d.cell.row * known_.width() + d.cell.col),
                           static_cast<std::uint64_t>(t)};
        if (re_perceive(d, config_.assessor, scenario_.objects, key) && known_.is_free(d.cell)) {
            committed_ = d.cell;
        } else {
            rejected_.insert({d.cell.row, d.cell.col});
            ++result_.rejected_detections;
        }
    }
}

void Agent::maybe_assess(GridIndex agent, int t) {
    const RegionMap& rm = exploration_.regions();
    const int local = rm.label(agent);
    if (local == 0) return;
    const int id = track(local);
    if (assessed_.contains(id)) return;
    const double rate = exploration_.rate(local);
    if (rate < config_.trigger_threshold) return;

    RegionQuery query;
    query.region_id = local;
    query.target_category = scenario_.target_category;
    query.keyframes = select_keyframes(exploration_, local, config_.assessment_keyframes, config_.keyframes);
    for (const auto& o : rm.region(local).objects) query.region_objects.push_back(o.category);
    query.exploration_rate = rate;
    const AssessmentTruth truth{scenario_.objects, &rm, &exploration_.explored()};
    const Verdict v = assessor_.assess(query, truth, {episode_key_, static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(t)});
    assessed_.insert(id);

    RegionPriorities single(config_.priorities);
    if (auto it = track_priority_.find(id); it != track_priority_.end()) {
        RegionPriority p = it->second;
        p.region_id = local;
        single.set(p);
    }
    RegionPriority updated = apply_verdict(single, v, local).get(local);
    updated.region_id = id;
    track_priority_[id] = updated;
    if (v == Verdict::VeryLowProbability) cleared_ = cleared_ || (rm.labels == local);
    result_.termination_events.push_back({t, id, v, rate});
}

Action Agent::plan(GridIndex agent, StepRecord& record) {
    ActionContext ctx;
    ctx.known = &known_;
    ctx.motion = config_.motion;
    if (committed_) {
        record.goal = *committed_;
        ctx.committed_target = true;
        ctx.stop_distance_m = config_.stop_distance;
        FmmOptions opts;
        opts.stop_cells = {agent};
        const auto field = fmm_field(known_, *committed_, opts);
        try {
            return next_action(field, record.pose, ctx);
        } catch (const ReplanSignal&) {
            return Action::TurnRight;
        }
    }
    return explore(agent, record);
}

Action Agent::explore(GridIndex agent, StepRecord& record) {
    std::vector<Frontier> frontiers;
    for (auto& f : detect_frontiers(known_, exploration_.regions(), config_.min_frontier_size))
        if (!blacklist_(f.centroid.row, f.centroid.col)) frontiers.push_back(std::move(f));
    record.frontiers = static_cast<int>(frontiers.size());
    if (frontiers.empty()) return Action::Stop;
    const RegionPriorities priorities = local_priorities();
    retag_frontiers(frontiers, priorities);

    refresh_planning_map();
    FmmOptions reach;
    for (const auto& f : frontiers) reach.stop_cells.push_back(f.centroid);
    const auto from_agent = fmm_field(planning_, agent, reach);
    std::vector<CandidateScore> ranked;
    try {
        ranked = score_candidates(frontiers, exploration_.regions(), priorities, from_agent,
                                  scenario_.target_category, config_.semantic_prior, config_.scoring);
    } catch (const ExplorationExhausted&) {
        return Action::Stop;
    }
    if (goal_) {
        for (auto& c : ranked)
            if (std::find(c.frontier.cells.begin(), c.frontier.cells.end(), *goal_) != c.frontier.cells.end() ||
                c.frontier.centroid == *goal_)
                c.score += config_.goal_hysteresis;
        std::stable_sort(ranked.begin(), ranked.end(), ranks_before);
    }

    ActionContext ctx;
    ctx.known = &planning_;
    ctx.motion = config_.motion;
    for (const auto& cand : ranked) {
        const GridIndex goal = cand.frontier.centroid;
        if (!planning_.is_free(goal)) continue;
        if (goal_ != goal) stalled_turns_ = 0;
        goal_ = goal;
        record.goal = goal;
        FmmOptions opts;
        opts.stop_cells = {agent};
        bool retry = true;
        for (int attempt = 0; retry; ++attempt) {
            retry = false;
            const auto field = fmm_field(planning_, goal, opts);
            try {
                return next_action(field, record.pose, ctx);
            } catch (const ReplanSignal&) {
                // Standing on a frontier that stays unseen: look around first.
                if (within_disk(agent, goal, 4) && stalled_turns_ < 360 / config_.motion.turn_deg) {
                    ++stalled_turns_;
                    return Action::TurnRight;
                }
                if (!within_disk(agent, goal, 4) && attempt < 4 && avoid_dead_end(field, agent))
                    retry = planning_.is_free(goal);
            }
        }
        for (const auto& c : cand.frontier.cells) blacklist_(c.row, c.col) = true;
        for (int dr = -4; dr <= 4; ++dr)
            for (int dc = -4; dc <= 4; ++dc) {
                const GridIndex c{goal.row + dr, goal.col + dc};
                if (in_bounds(blacklist_, c) && within_disk(c, goal, 4)) blacklist_(c.row, c.col) = true;
            }
        stalled_turns_ = 0;
        goal_.reset();
    }
    return Action::TurnRight;
}

EpisodeResult Agent::run(const StepObserver& observer) {
    const auto targets = scenario_.target_cells();
    std::optional<TravelTimeField> truth_field;
    auto geodesic = [&](WorldPoint p) {
        if (!truth_field) return std::numeric_limits<double>::infinity();
        return truth_field->meters(world_to_grid(p, scenario_.grid));
    };
    if (!targets.empty()) {
        FmmOptions opts;
        opts.unknown_traversable = false;
        truth_field = fmm_field(scenario_.grid, targets, opts);
    }
    result_.initial_distance = geodesic(scenario_.start.position);
    result_.shortest_path = std::isfinite(result_.initial_distance) ? result_.initial_distance : 0.0;

    EpisodeState state;
    state.pose = scenario_.start;
    Action action = Action::Stop;
    for (int t = 0; t < config_.max_steps && !state.terminated; ++t) {
        const GridIndex agent = world_to_grid(state.pose.position, known_);
        SenseResult seen = sense(scenario_, truth_walls_, known_, state.pose, config_.sensor, episode_key_, t);
        wall_growth_ += apply_updates(known_, seen.updates);
        const bool reseg = t == 0 || wall_growth_ >= config_.resegment_wall_cells;
        if (reseg) resegment();

        record_keyframe(exploration_, seen.mask, config_.keyframes);
        int added = 0;
        if (config_.use_region_estimation) {
            added = accumulate(exploration_, seen.mask, std::span<const GridIndex>{});
        } else {
            std::vector<GridIndex> revealed;
            for (const auto& u : seen.updates)
                if (u.state == CellState::Free) revealed.push_back(u.cell);
            added = accumulate(exploration_, VisibilityMask{}, revealed);
        }
        handle_detections(seen.detections, t);
        if (config_.policy == Policy::Rate && !committed_) maybe_assess(agent, t);
        if (observer) observer(StepView{t, known_, exploration_, exploration_.regions(), reseg});

        StepRecord record;
        record.step = t;
        record.pose = state.pose;
        record.new_cells = added;
        record.explored = exploration_.explored_count();
        if (const int l = exploration_.regions().label(agent)) {
            record.region = track(l);
            record.region_rate = exploration_.rate(l);
        }
        for (const auto& [l, r] : exploration_.rates()) record.rates[track(l)] = r;

        action = plan(agent, record);
        record.action = action;
        record.committed = committed_.has_value();
        const int before = state.collisions;
        state = step(scenario_.grid, state, action, config_.motion);
        record.collision = state.collisions > before;
        if (config_.record_trace) result_.trace.push_back(std::move(record));
    }

    result_.steps_taken = state.steps;
    result_.path_length = state.path_length;
    result_.collisions = state.collisions;
    result_.regions_seen = next_track_ - 1;
    const double final_d = geodesic(state.pose.position);
    result_.final_distance_to_target = std::isfinite(final_d) ? final_d : 0.0;
    result_.success = state.terminated && std::isfinite(final_d) && final_d <= config_.success_radius;
    if (result_.success)
        result_.end_reason = "success";
    else if (!state.terminated)
        result_.end_reason = "max_steps";
    else if (committed_)
        result_.end_reason = "stopped_away";
    else
        result_.end_reason = "exhausted";
    return result_;
}

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, const EpisodeConfig& config, const StepObserver& observer) {
    validate(config);
    Agent agent(scenario, config);
    return agent.run(observer);
}

Metrics adjudicate(const EpisodeResult& r) {
    Metrics m;
    m.success = r.success ? 1.0 : 0.0;
    const double denom = std::max(r.path_length, r.shortest_path);
    const double efficiency = r.shortest_path <= 0 || denom <= 0 ? 1.0 : r.shortest_path / denom;
    m.spl = m.success * efficiency;
    const double progress = r.initial_distance > 0 ? std::max(0.0, 1.0 - r.final_distance_to_target / r.initial_distance)
                                                   : m.success;
    m.soft_spl = progress * efficiency;
    return m;
}

std::string step_record_to_json(const StepRecord& r) {
    nlohmann::json j;
    j["step"] = r.step;
    j["pose"] = {{"x", r.pose.position.x}, {"y", r.pose.position.y}, {"heading_deg", r.pose.heading_deg}};
    j["action"] = to_string(r.action);
    j["new_cells"] = r.new_cells;
    j["explored"] = r.explored;
    j["region"] = r.region;
    j["region_rate"] = r.region_rate;
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [id, rate] : r.rates) rates[std::to_string(id)] = rate;
    j["rates"] = std::move(rates);
    j["goal"] = r.goal ? nlohmann::json::array({r.goal->row, r.goal->col}) : nlohmann::json(nullptr);
    j["frontiers"] = r.frontiers;
    j["committed"] = r.committed;
    j["collision"] = r.collision;
    return j.dump();
}

std::string termination_events_to_json(const std::vector<TerminationEvent>& events) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : events)
        j.push_back({{"step", e.step}, {"region", e.region_id}, {"verdict", to_string(e.verdict)}, {"rate", e.rate}});
    return j.dump();
}

std::string episode_result_to_json(const EpisodeResult& r) {
    const Metrics m = adjudicate(r);
    nlohmann::json j;
    j["success"] = r.success;
    j["steps_taken"] = r.steps_taken;
    j["path_length"] = r.path_length;
    j["shortest_path"] = r.shortest_path;
    j["initial_distance"] = r.initial_distance;
    j["final_distance_to_target"] = r.final_distance_to_target;
    j["collisions"] = r.collisions;
    j["end_reason"] = r.end_reason;
    j["spl"] = m.spl;
    j["soft_spl"] = m.soft_spl;
    j["termination_events"] = nlohmann::json::parse(termination_events_to_json(r.termination_events));
    j["first_detection_step"] = r.first_detection_step ? nlohmann::json(*r.first_detection_step) : nlohmann::json(nullptr);
    j["found_at_rate"] = r.found_at_rate ? nlohmann::json(*r.found_at_rate) : nlohmann::json(nullptr);
    j["regions_seen"] = r.regions_seen;
    j["resegmentations"] = r.resegmentations;
    j["rejected_detections"] = r.rejected_detections;
    return j.dump();
}

}  // namespace termnav
