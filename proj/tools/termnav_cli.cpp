// termnav: scenario generation, single episodes, sweeps, analysis, replay.

#include "termnav/config.hpp"
#include "termnav/harness.hpp"
#include "termnav/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace termnav;

namespace {

constexpr const char* kTraceFormat = "termnav-trace";

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = "out";

    ConfigFile load() const {
        ConfigFile f = config_path.empty() ? ConfigFile{} : load_config(config_path);
        if (seed) f.floorplan.seed = *seed;
        f.sweep.base = f.episode;
        f.sweep.floorplan = f.floorplan;
        return f;
    }
};

void add_common(CLI::App* app, Common& c, bool with_seed = true) {
    app->add_option("--config", c.config_path, "JSON config file (see docs/config.schema.json)")->check(CLI::ExistingFile);
    if (with_seed) app->add_option("--seed", c.seed, "scenario seed");
    app->add_option("--out", c.out, "output directory");
}

int cmd_generate(const Common& c, int count) {
    ConfigFile f = c.load();
    const std::uint64_t first = f.floorplan.seed;
    for (int i = 0; i < count; ++i) {
        FloorplanParams p = f.floorplan;
        p.seed = first + static_cast<std::uint64_t>(i);
        const Scenario s = generate_floorplan(p);
        const fs::path path = fs::path(c.out) / ("scenario_" + std::to_string(p.seed) + ".json");
        auto os = open_out(path);
        os << scenario_to_json(s) << '\n';
        std::cout << path.string() << ": " << s.grid.width() << "x" << s.grid.height() << ", " << s.rooms.size()
                  << " rooms, " << s.objects.size() << " objects, target " << s.target_category << '\n';
    }
    return 0;
}

json trace_header(const ConfigFile& f, const Scenario& s) {
    return {{"type", "header"},
            {"format", kTraceFormat},
            {"version", 1},
            {"config", to_json(f.episode)},
            {"scenario", json::parse(scenario_to_json(s))}};
}

void write_trace(std::ostream& os, const json& header, const EpisodeResult& r) {
    os << header.dump() << '\n';
    for (const auto& s : r.trace) os << step_record_to_json(s) << '\n';
    json footer = json::parse(episode_result_to_json(r));
    footer["type"] = "result";
    os << footer.dump() << '\n';
}

int cmd_run(const Common& c, const std::string& policy, std::optional<double> threshold,
            const std::string& scenario_path) {
    ConfigFile f = c.load();
    if (!policy.empty()) f.episode.policy = policy_from_string(policy);
    if (threshold) f.episode.trigger_threshold = *threshold;
    f.episode.record_trace = true;
    validate(f.episode);
    const Scenario s = scenario_path.empty() ? generate_floorplan(f.floorplan) : scenario_from_json(slurp(scenario_path));
    const EpisodeResult r = run_episode(s, f.episode);
    const fs::path out(c.out);
    {
        auto os = open_out(out / "scenario.json");
        os << scenario_to_json(s) << '\n';
    }
    {
        auto os = open_out(out / "trace.jsonl");
        write_trace(os, trace_header(f, s), r);
    }
    {
        auto os = open_out(out / "result.json");
        os << episode_result_to_json(r) << '\n';
    }
    const Metrics m = adjudicate(r);
    std::cout << "seed " << s.seed << " target " << s.target_category << ": " << r.end_reason << " after "
              << r.steps_taken << " steps, SPL " << m.spl << ", SoftSPL " << m.soft_spl << ", "
              << r.termination_events.size() << " assessments\n";
    return 0;
}

int cmd_sweep(const Common& c, std::optional<int> workers) {
    ConfigFile f = c.load();
    if (workers) f.sweep.workers = *workers;
    const AggregateReport report = run_sweep(f.sweep, c.out);
    write_aggregate_csv(std::cout, report);
    return 0;
}

int cmd_analyze(const Common& c, const std::string& episodes, int window) {
    std::ifstream is(episodes);
    if (!is) throw std::runtime_error("cannot read " + episodes);
    const AggregateReport report = aggregate(read_episode_records(is), window);
    write_report_files(report, c.out);
    for (const auto& cell : report.cells) {
        const auto& m = cell.marginal;
        std::cout << cell.key.label() << ": " << cell.episodes << " episodes, window marginal trend rho "
                  << m.series.trend.rho << " (p_less " << m.series.trend.p_less << "), detections "
                  << m.found_at_rate.total() << " of which " << m.found_at_rate.below_bin(10)
                  << " before full exploration\n";
    }
    return 0;
}

int cmd_replay(const std::string& trace_path) {
    std::ifstream is(trace_path);
    if (!is) throw std::runtime_error("cannot read " + trace_path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(is, line);)
        if (!line.empty()) lines.push_back(line);
    if (lines.empty()) throw std::runtime_error("empty trace");
    json header;
    try {
        header = json::parse(lines.front());
    } catch (const json::exception&) {
        std::cerr << "replay: trace header is not valid JSON\n";
        return 1;
    }
    if (header.value("format", "") != kTraceFormat) {
        std::cerr << "replay: not a trace file\n";
        return 1;
    }
    EpisodeConfig config;
    apply_json(config, header.at("config"));
    config.record_trace = true;
    const Scenario s = scenario_from_json(header.at("scenario").dump());
    const EpisodeResult r = run_episode(s, config);

    std::vector<std::string> expected;
    for (const auto& st : r.trace) expected.push_back(step_record_to_json(st));
    json footer = json::parse(episode_result_to_json(r));
    footer["type"] = "result";
    expected.push_back(footer.dump());

    const std::size_t recorded = lines.size() - 1;
    for (std::size_t i = 0; i < std::max(recorded, expected.size()); ++i) {
        const bool have = i < recorded, want = i < expected.size();
        if (have && want && lines[i + 1] == expected[i]) continue;
        if (i >= r.trace.size())
            std::cerr << "replay: divergence in the result record\n";
        else
            std::cerr << "replay: first divergent step " << i << '\n';
        return 1;
    }
    std::cout << "replay: " << r.trace.size() << " steps match\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"termnav: region-rate object navigation simulator"};
    app.require_subcommand(0, 1);
    bool dump_config = false;
    app.add_flag("--dump-config", dump_config, "print the default config and exit");

    Common gen_opts, run_opts, sweep_opts, analyze_opts;
    int count = 1;
    auto* gen = app.add_subcommand("generate", "generate scenario files");
    add_common(gen, gen_opts);
    gen->add_option("--count", count, "number of consecutive seeds")->check(CLI::PositiveNumber);

    std::string policy, scenario_path;
    std::optional<double> threshold;
    auto* run = app.add_subcommand("run", "run one episode and write its trace");
    add_common(run, run_opts);
    run->add_option("--policy", policy, "naive or rate")->check(CLI::IsMember({"naive", "rate"}));
    run->add_option("--threshold", threshold, "trigger threshold")->check(CLI::Range(0.0, 1.0));
    run->add_option("--scenario", scenario_path, "scenario file instead of a generated one")->check(CLI::ExistingFile);

    std::optional<int> workers;
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(sweep, sweep_opts, false);
    sweep->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

    std::string episodes;
    int window = 5;
    auto* analyze = app.add_subcommand("analyze", "marginal analysis over episode records");
    add_common(analyze, analyze_opts, false);
    analyze->add_option("--episodes", episodes, "episodes.jsonl from a sweep")->required()->check(CLI::ExistingFile);
    analyze->add_option("--window", window, "steps per window")->check(CLI::PositiveNumber);

    std::string trace_path;
    auto* replay = app.add_subcommand("replay", "re-run a trace and compare it step by step");
    replay->add_option("trace", trace_path, "trace.jsonl written by run")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    if (!dump_config && app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 1;
    }
    try {
        if (dump_config) {
            std::cout << to_json(ConfigFile{}).dump(2) << '\n';
            return 0;
        }
        if (*gen) return cmd_generate(gen_opts, count);
        if (*run) return cmd_run(run_opts, policy, threshold, scenario_path);
        if (*sweep) return cmd_sweep(sweep_opts, workers);
        if (*analyze) return cmd_analyze(analyze_opts, episodes, window);
        if (*replay) return cmd_replay(trace_path);
    } catch (const std::exception& e) {
        std::cerr << "termnav: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
