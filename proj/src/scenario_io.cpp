#include "termnav/simulator.hpp"

#include <json.hpp>

#include <sstream>

namespace termnav {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "termnav-scenario";
constexpr int kVersion = 1;
}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["width"] = s.grid.width();
    j["height"] = s.grid.height();
    j["resolution"] = s.grid.resolution();
    j["seed"] = s.seed;
    json rows = json::array();
    std::string line(s.grid.width(), '.');
    for (int r = 0; r < s.grid.height(); ++r) {
        for (int c = 0; c < s.grid.width(); ++c) line[c] = cell_char(s.grid.at({r, c}), s.grid.tall({r, c}));
        rows.push_back(line);
    }
    j["grid"] = std::move(rows);
    json objects = json::array();
    for (const auto& o : s.objects) objects.push_back({{"category", o.category}, {"row", o.cell.row}, {"col", o.cell.col}});
    j["objects"] = std::move(objects);
    json rooms = json::array();
    for (const auto& r : s.rooms)
        rooms.push_back(
            {{"id", r.id}, {"type", r.type}, {"row0", r.row0}, {"col0", r.col0}, {"row1", r.row1}, {"col1", r.col1}});
    j["rooms"] = std::move(rooms);
    j["start"] = {{"x", s.start.position.x}, {"y", s.start.position.y}, {"heading_deg", s.start.heading_deg}};
    j["target_category"] = s.target_category;
    j["target_absent"] = s.target_absent;
    return j.dump(1);
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario: ") + e.what());
    }
    if (j.value("format", "") != kFormat) throw std::invalid_argument("scenario: unexpected format tag");
    if (j.value("version", 0) != kVersion) throw std::invalid_argument("scenario: unsupported version");
    try {
        Scenario s;
        const int w = j.at("width"), h = j.at("height");
        std::string ascii = std::to_string(w) + " " + std::to_string(h) + " ";
        {
            std::ostringstream res;
            res.precision(17);
            res << j.at("resolution").get<double>();
            ascii += res.str() + "\n";
        }
        const auto& rows = j.at("grid");
        if (static_cast<int>(rows.size()) != h) throw std::invalid_argument("scenario: grid row count mismatch");
        for (const auto& row : rows) ascii += row.get<std::string>() + "\n";
        s.grid = from_ascii(ascii);
        s.seed = j.at("seed");
        for (const auto& o : j.at("objects")) s.objects.push_back({o.at("category"), {o.at("row"), o.at("col")}});
        for (const auto& r : j.at("rooms"))
            s.rooms.push_back({r.at("id"), r.at("type"), r.at("row0"), r.at("col0"), r.at("row1"), r.at("col1")});
        const auto& st = j.at("start");
        s.start.position = {st.at("x"), st.at("y")};
        s.start.heading_deg = st.at("heading_deg");
        s.target_category = j.at("target_category");
        s.target_absent = j.value("target_absent", false);
        for (const auto& o : s.objects)
            if (!s.grid.contains(o.cell) || !s.grid.is_free(o.cell))
                throw std::invalid_argument("scenario: object off the free space");
        return s;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario: ") + e.what());
    }
}

}  // namespace termnav
