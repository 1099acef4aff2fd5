#include "termnav/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace termnav {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "termnav-config";
constexpr int kVersion = 1;

// Reads the keys of one object, remembering which were consumed so that
// leftovers can be reported.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigurationError("config: " + path_ + " must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigurationError("config: " + path_ + "." + key + " has the wrong type");
        }
    }

    template <typename T, typename Parse>
    void get_enum(const char* key, T& out, Parse parse) {
        std::string s;
        known_.insert(key);
        if (!j_.contains(key)) return;
        get(key, s);
        try {
            out = parse(s);
        } catch (const std::exception& e) {
            throw ConfigurationError("config: " + path_ + "." + key + ": " + e.what());
        }
    }

    const json* sub(const char* key) {
        known_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_ + "." + key; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!known_.contains(k)) throw ConfigurationError("config: unknown key " + path_ + "." + k);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

json to_json(const SensorParams& s) {
    return {{"d_max", s.d_max},
            {"hfov_deg", s.hfov_deg},
            {"miss_rate", s.miss_rate},
            {"false_alarm_rate", s.false_alarm_rate},
            {"noise_seed", s.noise_seed}};
}

void apply_json(SensorParams& s, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("d_max", s.d_max);
    sec.get("hfov_deg", s.hfov_deg);
    sec.get("miss_rate", s.miss_rate);
    sec.get("false_alarm_rate", s.false_alarm_rate);
    sec.get("noise_seed", s.noise_seed);
    sec.finish();
}

json to_json(const SegmentationParams& p) {
    return {{"wall_margin", p.wall_margin},
            {"center_threshold", p.center_threshold},
            {"neighborhood_radius", p.neighborhood_radius},
            {"merge_threshold", p.merge_threshold},
            {"hull_as_wall", p.hull_as_wall}};
}

void apply_json(SegmentationParams& p, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("wall_margin", p.wall_margin);
    sec.get("center_threshold", p.center_threshold);
    sec.get("neighborhood_radius", p.neighborhood_radius);
    sec.get("merge_threshold", p.merge_threshold);
    sec.get("hull_as_wall", p.hull_as_wall);
    sec.finish();
}

json to_json(const KeyframeParams& p) {
    return {{"capacity", p.capacity}, {"view_weight", p.view_weight}, {"contribution_weight", p.contribution_weight}};
}

void apply_json(KeyframeParams& p, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("capacity", p.capacity);
    sec.get("view_weight", p.view_weight);
    sec.get("contribution_weight", p.contribution_weight);
    sec.finish();
}

json to_json(const ScoringParams& p) {
    return {{"distance_weight", p.distance_weight},
            {"priority_weight", p.priority_weight},
            {"semantic_weight", p.semantic_weight},
            {"distance_decay_m", p.distance_decay_m}};
}

void apply_json(ScoringParams& p, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("distance_weight", p.distance_weight);
    sec.get("priority_weight", p.priority_weight);
    sec.get("semantic_weight", p.semantic_weight);
    sec.get("distance_decay_m", p.distance_decay_m);
    sec.finish();
}

json to_json(const PriorityParams& p) {
    return {{"base", p.base}, {"high_bonus", p.high_bonus}, {"demoted_score", p.demoted_score}};
}

void apply_json(PriorityParams& p, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("base", p.base);
    sec.get("high_bonus", p.high_bonus);
    sec.get("demoted_score", p.demoted_score);
    sec.finish();
}

json to_json(const MotionParams& p) { return {{"forward_step_m", p.forward_step_m}, {"turn_deg", p.turn_deg}}; }

void apply_json(MotionParams& p, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("forward_step_m", p.forward_step_m);
    sec.get("turn_deg", p.turn_deg);
    sec.finish();
}

json to_json(const Variant& v) {
    return {{"name", v.name},
            {"use_segmentation", v.use_segmentation},
            {"use_region_estimation", v.use_region_estimation},
            {"assessment", v.assessment},
            {"reperception", v.reperception}};
}

Variant variant_from_json(const json& j, const std::string& path) {
    Variant v;
    Section sec(j, path);
    sec.get("name", v.name);
    sec.get("use_segmentation", v.use_segmentation);
    sec.get("use_region_estimation", v.use_region_estimation);
    sec.get("assessment", v.assessment);
    sec.get("reperception", v.reperception);
    sec.finish();
    return v;
}

}  // namespace

json to_json(const AssessorConfig& a) {
    json script = json::array();
    for (const auto& s : a.script) script.push_back({{"region", s.region_id}, {"verdict", to_string(s.verdict)}});
    return {{"kind", to_string(a.kind)},
            {"false_negative_rate", a.false_negative_rate},
            {"false_positive_rate", a.false_positive_rate},
            {"rng_seed", a.rng_seed},
            {"reperception", a.reperception},
            {"script", script}};
}

void apply_json(AssessorConfig& a, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get_enum("kind", a.kind, assessor_kind_from_string);
    sec.get("false_negative_rate", a.false_negative_rate);
    sec.get("false_positive_rate", a.false_positive_rate);
    sec.get("rng_seed", a.rng_seed);
    sec.get("reperception", a.reperception);
    if (const json* script = sec.sub("script")) {
        if (!script->is_array()) throw ConfigurationError("config: " + sec.path("script") + " must be an array");
        a.script.clear();
        for (const auto& item : *script) {
            ScriptedVerdict v;
            Section s(item, sec.path("script[]"));
            s.get("region", v.region_id);
            s.get_enum("verdict", v.verdict, verdict_from_string);
            s.finish();
            a.script.push_back(v);
        }
    }
    if (const json* file = sec.sub("script_file")) {
        if (!file->is_string()) throw ConfigurationError("config: " + sec.path("script_file") + " must be a string");
        std::ifstream is(file->get<std::string>());
        if (!is) throw ConfigurationError("config: cannot open script file " + file->get<std::string>());
        a.script = read_script(is);
    }
    sec.finish();
}

json to_json(const EpisodeConfig& c) {
    return {{"max_steps", c.max_steps},
            {"success_radius", c.success_radius},
            {"stop_distance", c.stop_distance},
            {"sensor", to_json(c.sensor)},
            {"trigger_threshold", c.trigger_threshold},
            {"assessor", to_json(c.assessor)},
            {"policy", to_string(c.policy)},
            {"use_segmentation", c.use_segmentation},
            {"use_region_estimation", c.use_region_estimation},
            {"segmentation", to_json(c.segmentation)},
            {"resegment_wall_cells", c.resegment_wall_cells},
            {"keyframes", to_json(c.keyframes)},
            {"assessment_keyframes", c.assessment_keyframes},
            {"scoring", to_json(c.scoring)},
            {"priorities", to_json(c.priorities)},
            {"motion", to_json(c.motion)},
            {"min_frontier_size", c.min_frontier_size},
            {"goal_hysteresis", c.goal_hysteresis},
            {"semantic_prior", json::parse(c.semantic_prior.to_json())},
            {"record_trace", c.record_trace}};
}

void apply_json(EpisodeConfig& c, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("max_steps", c.max_steps);
    sec.get("success_radius", c.success_radius);
    sec.get("stop_distance", c.stop_distance);
    if (const json* s = sec.sub("sensor")) apply_json(c.sensor, *s, sec.path("sensor"));
    sec.get("trigger_threshold", c.trigger_threshold);
    if (const json* s = sec.sub("assessor")) apply_json(c.assessor, *s, sec.path("assessor"));
    sec.get_enum("policy", c.policy, policy_from_string);
    sec.get("use_segmentation", c.use_segmentation);
    sec.get("use_region_estimation", c.use_region_estimation);
    if (const json* s = sec.sub("segmentation")) apply_json(c.segmentation, *s, sec.path("segmentation"));
    sec.get("resegment_wall_cells", c.resegment_wall_cells);
    if (const json* s = sec.sub("keyframes")) apply_json(c.keyframes, *s, sec.path("keyframes"));
    sec.get("assessment_keyframes", c.assessment_keyframes);
    if (const json* s = sec.sub("scoring")) apply_json(c.scoring, *s, sec.path("scoring"));
    if (const json* s = sec.sub("priorities")) apply_json(c.priorities, *s, sec.path("priorities"));
    if (const json* s = sec.sub("motion")) apply_json(c.motion, *s, sec.path("motion"));
    sec.get("min_frontier_size", c.min_frontier_size);
    sec.get("goal_hysteresis", c.goal_hysteresis);
    if (const json* s = sec.sub("semantic_prior")) {
        try {
            c.semantic_prior = SemanticPrior::from_json(s->dump());
        } catch (const std::exception& e) {
            throw ConfigurationError("config: " + sec.path("semantic_prior") + ": " + e.what());
        }
    }
    sec.get("record_trace", c.record_trace);
    sec.finish();
}

json to_json(const FloorplanParams& p) {
    return {{"min_rooms", p.min_rooms},
            {"max_rooms", p.max_rooms},
            {"min_room_size", p.min_room_size},
            {"max_room_size", p.max_room_size},
            {"corridor_width", p.corridor_width},
            {"wall_thickness", p.wall_thickness},
            {"object_density", p.object_density},
            {"furniture_density", p.furniture_density},
            {"extra_door_probability", p.extra_door_probability},
            {"resolution", p.resolution},
            {"seed", p.seed},
            {"target_category", p.target_category},
            {"target_absent", p.target_absent},
            {"min_start_distance", p.min_start_distance},
            {"max_extent", p.max_extent}};
}

void apply_json(FloorplanParams& p, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("min_rooms", p.min_rooms);
    sec.get("max_rooms", p.max_rooms);
    sec.get("min_room_size", p.min_room_size);
    sec.get("max_room_size", p.max_room_size);
    sec.get("corridor_width", p.corridor_width);
    sec.get("wall_thickness", p.wall_thickness);
    sec.get("object_density", p.object_density);
    sec.get("furniture_density", p.furniture_density);
    sec.get("extra_door_probability", p.extra_door_probability);
    sec.get("resolution", p.resolution);
    sec.get("seed", p.seed);
    sec.get("target_category", p.target_category);
    sec.get("target_absent", p.target_absent);
    sec.get("min_start_distance", p.min_start_distance);
    sec.get("max_extent", p.max_extent);
    sec.finish();
}

json to_json(const SweepSpec& s) {
    json policies = json::array();
    for (auto p : s.policies) policies.push_back(to_string(p));
    json assessors = json::array();
    for (const auto& a : s.assessors) {
        json entry = to_json(a.config);
        entry["name"] = a.name;
        assessors.push_back(entry);
    }
    json variants = json::array();
    for (const auto& v : s.variants) variants.push_back(to_json(v));
    return {{"scenario_seeds", s.scenario_seeds},
            {"policies", policies},
            {"thresholds", s.thresholds},
            {"assessors", assessors},
            {"variants", variants},
            {"repetitions", s.repetitions},
            {"workers", s.workers},
            {"write_traces", s.write_traces},
            {"marginal_window", s.marginal_window}};
}

void apply_json(SweepSpec& s, const json& j, const std::string& path) {
    Section sec(j, path);
    sec.get("scenario_seeds", s.scenario_seeds);
    if (const json* range = sec.sub("seed_range")) {
        std::uint64_t first = 1, count = 0;
        Section r(*range, sec.path("seed_range"));
        r.get("first", first);
        r.get("count", count);
        r.finish();
        s.scenario_seeds.clear();
        for (std::uint64_t i = 0; i < count; ++i) s.scenario_seeds.push_back(first + i);
    }
    if (const json* p = sec.sub("policies")) {
        if (!p->is_array()) throw ConfigurationError("config: " + sec.path("policies") + " must be an array");
        s.policies.clear();
        for (const auto& item : *p) {
            try {
                s.policies.push_back(policy_from_string(item.get<std::string>()));
            } catch (const std::exception& e) {
                throw ConfigurationError("config: " + sec.path("policies") + ": " + e.what());
            }
        }
    }
    sec.get("thresholds", s.thresholds);
    if (const json* a = sec.sub("assessors")) {
        if (!a->is_array()) throw ConfigurationError("config: " + sec.path("assessors") + " must be an array");
        s.assessors.clear();
        for (const auto& item : *a) {
            NamedAssessor na;
            json body = item;
            if (body.is_object() && body.contains("name")) {
                if (!body["name"].is_string()) throw ConfigurationError("config: assessor name must be a string");
                na.name = body["name"];
                body.erase("name");
            }
            apply_json(na.config, body, sec.path("assessors[]"));
            s.assessors.push_back(na);
        }
    }
    if (const json* v = sec.sub("variants")) {
        if (v->is_string()) {
            if (v->get<std::string>() != "ablation")
                throw ConfigurationError("config: " + sec.path("variants") + " preset must be \"ablation\"");
            s.variants = ablation_variants();
        } else if (v->is_array()) {
            s.variants.clear();
            for (const auto& item : *v) s.variants.push_back(variant_from_json(item, sec.path("variants[]")));
        } else {
            throw ConfigurationError("config: " + sec.path("variants") + " must be an array or \"ablation\"");
        }
    }
    sec.get("repetitions", s.repetitions);
    sec.get("workers", s.workers);
    sec.get("write_traces", s.write_traces);
    sec.get("marginal_window", s.marginal_window);
    sec.finish();
}

json to_json(const ConfigFile& f) {
    return {{"format", kFormat},
            {"version", kVersion},
            {"episode", to_json(f.episode)},
            {"floorplan", to_json(f.floorplan)},
            {"sweep", to_json(f.sweep)}};
}

ConfigFile parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigurationError(std::string("config: not valid JSON: ") + e.what());
    }
    ConfigFile f;
    Section sec(j, "config");
    std::string format = kFormat;
    int version = kVersion;
    sec.get("format", format);
    sec.get("version", version);
    if (format != kFormat) throw ConfigurationError("config: unexpected format tag '" + format + "'");
    if (version != kVersion) throw ConfigurationError("config: unsupported version " + std::to_string(version));
    if (const json* e = sec.sub("episode")) apply_json(f.episode, *e);
    if (const json* p = sec.sub("floorplan")) apply_json(f.floorplan, *p);
    if (const json* s = sec.sub("sweep")) apply_json(f.sweep, *s);
    sec.finish();
    validate(f.episode);
    f.sweep.base = f.episode;
    f.sweep.floorplan = f.floorplan;
    return f;
}

ConfigFile load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigurationError("config: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

}  // namespace termnav
