#include "termnav/assessor.hpp"

#include "termnav/rng.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace termnav {

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::HighProbability: return "high";
        case Verdict::Uncertain: return "uncertain";
        case Verdict::VeryLowProbability: return "verylow";
    }
    return "uncertain";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "high") return Verdict::HighProbability;
    if (s == "uncertain") return Verdict::Uncertain;
    if (s == "verylow") return Verdict::VeryLowProbability;
    throw ConfigurationError("unknown verdict '" + s + "'");
}

std::string to_string(AssessorKind k) {
    switch (k) {
        case AssessorKind::GroundTruthOracle: return "oracle";
        case AssessorKind::NoisyOracle: return "noisy";
        case AssessorKind::AlwaysContinue: return "always_continue";
        case AssessorKind::AlwaysTerminate: return "always_terminate";
        case AssessorKind::Scripted: return "scripted";
    }
    return "oracle";
}

AssessorKind assessor_kind_from_string(const std::string& s) {
    if (s == "oracle") return AssessorKind::GroundTruthOracle;
    if (s == "noisy") return AssessorKind::NoisyOracle;
    if (s == "always_continue") return AssessorKind::AlwaysContinue;
    if (s == "always_terminate") return AssessorKind::AlwaysTerminate;
    if (s == "scripted") return AssessorKind::Scripted;
    throw ConfigurationError("unknown assessor kind '" + s + "'");
}

Verdict oracle_verdict(const RegionQuery& query, const AssessmentTruth& truth) {
    if (truth.regions == nullptr) throw std::invalid_argument("oracle assessment needs the region map");
    bool present = false, seen = false;
    for (const auto& o : truth.objects) {
        if (o.category != query.target_category) continue;
        if (truth.regions->label(o.cell) != query.region_id) continue;
        present = true;
        if (truth.explored != nullptr && (*truth.explored)(o.cell.row, o.cell.col)) seen = true;
    }
    if (!present) return Verdict::VeryLowProbability;
    return seen ? Verdict::HighProbability : Verdict::Uncertain;
}

Assessor::Assessor(AssessorConfig config) : config_(std::move(config)) {
    if (config_.false_negative_rate < 0 || config_.false_negative_rate > 1 || config_.false_positive_rate < 0 ||
        config_.false_positive_rate > 1)
        throw ConfigurationError("assessor noise rates must lie in [0, 1]");
}

Verdict Assessor::assess(const RegionQuery& query, const AssessmentTruth& truth, const QueryKey& key) {
    switch (config_.kind) {
        case AssessorKind::GroundTruthOracle: return oracle_verdict(query, truth);
        case AssessorKind::NoisyOracle: {
            const Verdict v = oracle_verdict(query, truth);
            const double u = keyed_uniform({config_.rng_seed, key.episode, key.region, key.step, 0xa55e55ull});
            if (v == Verdict::VeryLowProbability) return u < config_.false_positive_rate ? Verdict::Uncertain : v;
            return u < config_.false_negative_rate ? Verdict::VeryLowProbability : v;
        }
        case AssessorKind::AlwaysContinue: return Verdict::Uncertain;
        case AssessorKind::AlwaysTerminate: return Verdict::VeryLowProbability;
        case AssessorKind::Scripted: {
            if (cursor_ >= config_.script.size())
                throw ConfigurationError("scripted assessor exhausted after " + std::to_string(cursor_) + " verdicts");
            const auto& rec = config_.script[cursor_];
            if (rec.region_id != query.region_id)
                throw ConfigurationError("scripted assessor expected region " + std::to_string(rec.region_id) +
                                         " but was asked about region " + std::to_string(query.region_id));
            ++cursor_;
            return rec.verdict;
        }
    }
    return Verdict::Uncertain;
}

Verdict assess_region(const RegionQuery& query, const AssessorConfig& config, const AssessmentTruth& truth,
                      const QueryKey& key) {
    Assessor a(config);
    return a.assess(query, truth, key);
}

RegionPriority RegionPriorities::get(int region_id) const {
    if (auto it = entries_.find(region_id); it != entries_.end()) return it->second;
    return {region_id, params_.base, false};
}

bool operator==(const RegionPriorities& a, const RegionPriorities& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (const auto& [id, p] : a.entries_) {
        auto it = b.entries_.find(id);
        if (it == b.entries_.end() || it->second.score != p.score || it->second.demoted != p.demoted) return false;
    }
    return a.params_.base == b.params_.base && a.params_.high_bonus == b.params_.high_bonus &&
           a.params_.demoted_score == b.params_.demoted_score;
}

RegionPriorities apply_verdict(RegionPriorities priorities, Verdict verdict, int region_id) {
    RegionPriority p = priorities.get(region_id);
    switch (verdict) {
        case Verdict::VeryLowProbability:
            p.demoted = true;
            p.score = priorities.params().demoted_score;
            priorities.set(p);
            break;
        case Verdict::HighProbability:
            if (!p.demoted) {
                p.score += priorities.params().high_bonus;
                priorities.set(p);
            }
            break;
        case Verdict::Uncertain: break;
    }
    return priorities;
}

bool re_perceive(const Detection& detection, const AssessorConfig& config, std::span<const ObjectPlacement> truth,
                 const QueryKey& key) {
    if (!config.reperception) return true;
    bool real = false;
    for (const auto& o : truth)
        if (o.category == detection.category && o.cell == detection.cell) real = true;
    switch (config.kind) {
        case AssessorKind::NoisyOracle: {
            const double u = keyed_uniform({config.rng_seed, key.episode, key.region, key.step, 0x7e7e7eull});
            if (real) return u >= config.false_negative_rate;
            return u < config.false_positive_rate;
        }
        case AssessorKind::AlwaysContinue:
        case AssessorKind::AlwaysTerminate:
        case AssessorKind::Scripted:
        case AssessorKind::GroundTruthOracle: return real;
    }
    return real;
}

std::vector<ScriptedVerdict> read_script(std::istream& is) {
    std::vector<ScriptedVerdict> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        int id;
        std::string verdict;
        if (!(ls >> id)) continue;
        if (!(ls >> verdict)) throw ConfigurationError("script line " + std::to_string(lineno) + ": missing verdict");
        out.push_back({id, verdict_from_string(verdict)});
    }
    return out;
}

void write_script(std::ostream& os, std::span<const ScriptedVerdict> script) {
    for (const auto& rec : script) os << rec.region_id << ' ' << to_string(rec.verdict) << '\n';
}

}  // namespace termnav
