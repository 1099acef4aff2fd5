#include "termnav/planner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace termnav {

double SemanticPrior::prior(const std::string& target, std::span<const std::string> objects) const {
    double best = 0.0;
    const auto row = table_.find(target);
    for (const auto& o : objects) {
        if (o == target) return 1.0;
        if (row == table_.end()) continue;
        if (auto it = row->second.find(o); it != row->second.end()) best = std::max(best, it->second);
    }
    return best;
}

SemanticPrior SemanticPrior::defaults() {
    // target -> {context object -> co-occurrence strength}
    return SemanticPrior({
        {"bed", {{"nightstand", 0.95}, {"wardrobe", 0.9}, {"lamp", 0.5}, {"tv_monitor", 0.2}, {"plant", 0.2}}},
        {"chair",
         {{"dining_table", 0.95}, {"desk", 0.9}, {"bookshelf", 0.6}, {"sofa", 0.5}, {"tv_monitor", 0.45},
          {"refrigerator", 0.4}, {"oven", 0.4}, {"nightstand", 0.3}, {"wardrobe", 0.3}}},
        {"plant", {{"sofa", 0.5}, {"bookshelf", 0.4}, {"dining_table", 0.35}, {"desk", 0.3}, {"lamp", 0.3}}},
        {"toilet", {{"bathtub", 0.95}, {"sink", 0.6}}},
        {"tv_monitor", {{"sofa", 0.75}, {"desk", 0.45}, {"bookshelf", 0.4}, {"nightstand", 0.2}}},
        {"sofa", {{"tv_monitor", 0.7}, {"bookshelf", 0.5}, {"plant", 0.4}, {"lamp", 0.4}}},
    });
}

SemanticPrior SemanticPrior::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    std::map<std::string, std::map<std::string, double>> table;
    for (const auto& [target, row] : j.at("cooccurrence").items())
        for (const auto& [obj, v] : row.items()) table[target][obj] = v.get<double>();
    return SemanticPrior(std::move(table));
}

std::string SemanticPrior::to_json() const {
    nlohmann::json j;
    j["format"] = "termnav-semantic-prior";
    j["version"] = 1;
    j["cooccurrence"] = table_;
    return j.dump(2);
}

bool ranks_before(const CandidateScore& a, const CandidateScore& b) {
    if (a.demoted != b.demoted) return !a.demoted;
    if (a.score != b.score) return a.score > b.score;
    if (a.frontier.size != b.frontier.size) return a.frontier.size > b.frontier.size;
    return a.frontier.centroid < b.frontier.centroid;
}

std::vector<CandidateScore> score_candidates(std::span<const Frontier> frontiers, const RegionMap& rm,
                                             const RegionPriorities& priorities, const TravelTimeField& from_agent,
                                             const std::string& target_category, const SemanticPrior& prior,
                                             const ScoringParams& params) {
    if (frontiers.empty()) throw ExplorationExhausted("no frontiers left");
    std::vector<CandidateScore> out;
    for (const auto& f : frontiers) {
        if (!from_agent.reachable(f.centroid)) continue;
        CandidateScore cs;
        cs.frontier = f;
        cs.distance_m = from_agent.meters(f.centroid);
        cs.distance_term = std::exp(-cs.distance_m / params.distance_decay_m);
        cs.priority_term = priorities.score(f.region_id);
        cs.demoted = priorities.demoted(f.region_id);
        std::vector<std::string> objs;
        if (rm.has(f.region_id))
            for (const auto& o : rm.region(f.region_id).objects) objs.push_back(o.category);
        cs.semantic_term = prior.prior(target_category, objs);
        cs.score = params.distance_weight * cs.distance_term + params.priority_weight * cs.priority_term +
                   params.semantic_weight * cs.semantic_term;
        out.push_back(std::move(cs));
    }
    if (out.empty()) throw ExplorationExhausted("no reachable frontiers left");
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

}  // namespace termnav
