#pragma once

#include "termnav/harness.hpp"
#include "termnav/simulator.hpp"

#include <json.hpp>

#include <string>

namespace termnav {

// Structured config file:
//   {"format": "termnav-config", "version": 1,
//    "episode": {...}, "floorplan": {...}, "sweep": {...}}
// Every section and key is optional; omitted values keep their defaults and
// unknown keys are rejected with a ConfigurationError naming the key path.
// docs/config.schema.json lists every key.

struct ConfigFile {
    EpisodeConfig episode;
    FloorplanParams floorplan;
    SweepSpec sweep;
};

nlohmann::json to_json(const EpisodeConfig& c);
nlohmann::json to_json(const FloorplanParams& p);
nlohmann::json to_json(const AssessorConfig& a);
nlohmann::json to_json(const SweepSpec& s);
nlohmann::json to_json(const ConfigFile& f);

void apply_json(EpisodeConfig& c, const nlohmann::json& j, const std::string& path = "episode");
void apply_json(FloorplanParams& p, const nlohmann::json& j, const std::string& path = "floorplan");
void apply_json(AssessorConfig& a, const nlohmann::json& j, const std::string& path = "assessor");
void apply_json(SweepSpec& s, const nlohmann::json& j, const std::string& path = "sweep");

ConfigFile parse_config(const std::string& text);
ConfigFile load_config(const std::string& path);

}  // namespace termnav
