#pragma once

#include "termnav/exploration.hpp"
#include "termnav/segmentation.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace termnav {

using ObjectPlacement = ObjectSighting;

enum class Verdict { HighProbability, Uncertain, VeryLowProbability };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

/// What an assessor sees for one region: the evidence frames, the objects
/// noticed there so far, the target and the region's exploration rate.
struct RegionQuery {
    int region_id = 0;
    std::string target_category;
    std::vector<KeyFrame> keyframes;
    std::vector<std::string> region_objects;
    double exploration_rate = 0.0;
};

/// Ground truth available to oracle assessors.
struct AssessmentTruth {
    std::span<const ObjectPlacement> objects;
    const RegionMap* regions = nullptr;  // the map the query's region id refers to
    const Mask* explored = nullptr;      // accumulated line-of-sight history
};

/// Counter used to address noise draws: identical keys give identical draws.
struct QueryKey {
    std::uint64_t episode = 0;
    std::uint64_t region = 0;
    std::uint64_t step = 0;
};

enum class AssessorKind { GroundTruthOracle, NoisyOracle, AlwaysContinue, AlwaysTerminate, Scripted };

std::string to_string(AssessorKind k);
AssessorKind assessor_kind_from_string(const std::string& s);

struct ScriptedVerdict {
    int region_id = 0;
    Verdict verdict = Verdict::Uncertain;
};

struct AssessorConfig {
    AssessorKind kind = AssessorKind::GroundTruthOracle;
    // NoisyOracle: probability of answering VeryLow for a region that holds
    // the target, and of answering Uncertain for one that does not.
    double false_negative_rate = 0.0;
    double false_positive_rate = 0.0;
    std::uint64_t rng_seed = 0;
    bool reperception = true;
    std::vector<ScriptedVerdict> script;
};

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Noise-free verdict: VeryLow iff no target-category object lies in the
/// region, High iff one does and its cell is already explored.
Verdict oracle_verdict(const RegionQuery& query, const AssessmentTruth& truth);

/// Stand-in for a vision-language region assessor. Stateless except for the
/// scripted replay cursor.
class Assessor {
public:
    explicit Assessor(AssessorConfig config);

    Verdict assess(const RegionQuery& query, const AssessmentTruth& truth, const QueryKey& key);

    const AssessorConfig& config() const { return config_; }
    std::size_t script_cursor() const { return cursor_; }

private:
    AssessorConfig config_;
    std::size_t cursor_ = 0;
};

/// One-shot form; Scripted configs replay from the start each call.
Verdict assess_region(const RegionQuery& query, const AssessorConfig& config, const AssessmentTruth& truth,
                      const QueryKey& key = {});

struct RegionPriority {
    int region_id = 0;
    double score = 0.0;
    bool demoted = false;
};

struct PriorityParams {
    double base = 0.5;
    double high_bonus = 0.5;
    double demoted_score = 0.0;
};

/// Per-region exploration priorities. Regions never touched by a verdict
/// sit at the base score.
class RegionPriorities {
public:
    explicit RegionPriorities(PriorityParams params = {}) : params_(params) {}

    RegionPriority get(int region_id) const;
    double score(int region_id) const { return get(region_id).score; }
    bool demoted(int region_id) const { return get(region_id).demoted; }
    void set(const RegionPriority& p) { entries_[p.region_id] = p; }
    const PriorityParams& params() const { return params_; }
    const std::map<int, RegionPriority>& entries() const { return entries_; }

    friend bool operator==(const RegionPriorities& a, const RegionPriorities& b);

private:
    PriorityParams params_;
    std::map<int, RegionPriority> entries_;
};

/// VeryLow demotes the region, High adds the bonus, Uncertain changes nothing.
RegionPriorities apply_verdict(RegionPriorities priorities, Verdict verdict, int region_id);

struct Detection {
    std::string category;
    GridIndex cell;
};

/// Second look at a detection. Oracle: true iff the cell really holds an
/// object of that category; NoisyOracle flips that answer with the configured
/// rates. With re-perception disabled every detection is accepted.
bool re_perceive(const Detection& detection, const AssessorConfig& config, std::span<const ObjectPlacement> truth,
                 const QueryKey& key = {});

// Scripted-assessor file: one "region_id verdict" record per line, '#'
// comments allowed. Verdicts: high, uncertain, verylow.
std::vector<ScriptedVerdict> read_script(std::istream& is);
void write_script(std::ostream& os, std::span<const ScriptedVerdict> script);

}  // namespace termnav
