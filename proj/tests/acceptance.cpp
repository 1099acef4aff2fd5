// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Batch criteria run at 0.1 m cells to keep the wall time in
// minutes; see README for what each line checks.

#include "oracles.hpp"
#include "termnav/config.hpp"
#include "termnav/harness.hpp"
#include "termnav/simulator.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

using namespace termnav;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<GridIndex> true_cells(const Mask& m) {
    std::vector<GridIndex> out;
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            if (m(r, c)) out.push_back({r, c});
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Known map after a full turn at the start pose: a partly explored map whose
// segmentation domain includes Unknown cells.
OccupancyGrid first_look(const Scenario& s) {
    const WallMap walls = wall_map(s.grid);
    OccupancyGrid known(s.grid.width(), s.grid.height(), s.grid.resolution());
    for (int h = 0; h < 360; h += 30) {
        const auto out = sense(s, walls, known, AgentPose{s.start.position, h}, SensorParams{}, s.seed, h / 30);
        apply_updates(known, out.updates);
    }
    return known;
}

bool labels_partition(const RegionMap& rm, const Mask& domain, int threshold, std::string& why) {
    for (int r = 0; r < domain.rows(); ++r)
        for (int c = 0; c < domain.cols(); ++c) {
            const int l = rm.labels(r, c);
            if (domain(r, c) != (l != 0) || l < 0 || l > rm.count()) {
                why = fmt("cell (%d,%d) label %d", r, c, l);
                return false;
            }
        }
    for (const auto& info : rm.regions)
        if (info.size < threshold && !info.adjacent.empty()) {
            why = fmt("region %d has %d cells and neighbours", info.id, info.size);
            return false;
        }
    return true;
}

// Seeds exactly as the pipeline picks them, for the oracle comparison.
std::vector<GridIndex> pipeline_seeds(const Mask& domain, const DistanceField& on_domain, const SegmentationParams& sp) {
    std::vector<GridIndex> seeds = detect_centers(on_domain, sp.center_threshold, sp.neighborhood_radius);
    std::erase_if(seeds, [&](GridIndex s) { return !domain(s.row, s.col); });
    LabelRaster comp;
    const int n = connected_components(domain, comp);
    for (int l = 1; l <= n; ++l) {
        bool seeded = false;
        for (const auto& s : seeds) seeded = seeded || comp(s.row, s.col) == l;
        if (seeded) continue;
        GridIndex best{};
        double bd = -1;
        for (int r = 0; r < comp.rows(); ++r)
            for (int c = 0; c < comp.cols(); ++c)
                if (comp(r, c) == l && on_domain(r, c) > bd) bd = on_domain(r, c), best = {r, c};
        seeds.push_back(best);
    }
    return seeds;
}

Outcome ac1() {
    const auto t0 = Clock::now();
    const SegmentationParams sp;
    int maps = 0, oracle_maps = 0, regions = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        FloorplanParams p;
        p.seed = seed;
        p.resolution = 0.1;
        const Scenario s = generate_floorplan(p);
        for (const OccupancyGrid& occ : {s.grid, first_look(s)}) {
            const Mask domain = occ.traversable() || occ.unknown();
            const RegionMap rm = segment_regions(wall_map(occ), occ, sp);
            std::string why;
            if (!labels_partition(rm, domain, sp.merge_threshold, why))
                return {false, fmt("seed %llu: %s", (unsigned long long)seed, why.c_str())};
            regions += rm.count();
        }
        ++maps;

        // Small maps: the flood itself against the per-seed shortest paths.
        FloorplanParams q;
        q.seed = seed;
        q.resolution = 0.25;
        q.min_rooms = 1;
        q.max_rooms = 3;
        q.max_extent = 10.0;
        const Scenario small = generate_floorplan(q);
        if (small.grid.width() > 40 || small.grid.height() > 40)
            return {false, fmt("seed %llu: small map is %dx%d", (unsigned long long)seed, small.grid.height(),
                               small.grid.width())};
        for (const OccupancyGrid& occ : {small.grid, first_look(small)}) {
            const Mask domain = occ.traversable() || occ.unknown();
            const Mask band = preprocess_walls(wall_map(occ), sp.wall_margin, sp.hull_as_wall);
            const DistanceField dist = euclidean_distance_transform<double>(band);
            const DistanceField on_domain = domain.select(dist, DistanceField::Zero(dist.rows(), dist.cols()));
            const auto seeds = pipeline_seeds(domain, on_domain, sp);
            const RegionMap ws = watershed_segment(dist, seeds, domain);
            const LabelRaster want = oracle::watershed_by_seed(dist, seeds, domain);
            if (!(ws.labels == want).all())
                return {false, fmt("seed %llu: watershed differs from the oracle in %d cells", (unsigned long long)seed,
                                   int((ws.labels != want).count()))};
            ++oracle_maps;
        }
    }
    const double secs = seconds_since(t0);
    return {secs < 60.0, fmt("%d floorplans (full + partial maps, %d regions), %d small maps equal to the oracle, %.1f s "
                             "(limit 60 s)",
                             maps, regions, oracle_maps, secs)};
}

Outcome ac2() {
    int episodes = 0;
    long checks = 0, bad_rate = 0, bad_monotone = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        FloorplanParams p;
        p.seed = seed;
        const Scenario s = generate_floorplan(p);
        EpisodeConfig c;
        c.record_trace = false;
        std::map<int, double> prev;
        Mask prev_explored;
        run_episode(s, c, [&](const StepView& v) {
            const Mask& e = v.exploration.explored();
            if (prev_explored.size() > 0 && (prev_explored && !e).any()) ++bad_monotone;
            std::map<int, double> now;
            for (int id = 1; id <= v.regions.count(); ++id) {
                const double got = v.exploration.rate(id);
                ++checks;
                if (got != oracle::recount_rate(e, v.regions.labels, id)) ++bad_rate;
                now[id] = got;
                if (!v.resegmented && prev.contains(id) && got < prev[id]) ++bad_monotone;
            }
            prev = std::move(now);
            prev_explored = e;
        });
        ++episodes;
    }
    return {bad_rate == 0 && bad_monotone == 0,
            fmt("%d episodes, %ld region-step recounts, %ld mismatches, %ld monotonicity violations", episodes, checks,
                bad_rate, bad_monotone)};
}

Outcome ac3() {
    std::mt19937 gen(2024);
    const double d_max = 5.0, hfov = 79.0;
    long total = 0, exempt = 0, bad = 0, visible = 0;
    for (std::uint64_t m = 1; m <= 20; ++m) {
        FloorplanParams p;
        p.seed = m;
        const Scenario s = generate_floorplan(p);
        const double res = s.grid.resolution();
        const WallMap w = wall_map(s.grid);
        const auto free = true_cells(s.grid.traversable());
        std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
        std::uniform_int_distribution<int> heading(0, 359);
        std::uniform_real_distribution<double> jitter(0.0, 1.0);
        const int reach = static_cast<int>(std::ceil(d_max / res));
        std::uniform_int_distribution<int> off(-reach, reach);
        for (int k = 0; k < 500;) {
            const GridIndex a = free[pick(gen)];
            const AgentPose pose{{(a.col + jitter(gen)) * res, (a.row + jitter(gen)) * res}, heading(gen)};
            // half the cells anywhere in range of the box, half inside the sensor sector
            GridIndex c{a.row + off(gen), a.col + off(gen)};
            if (k % 2 == 1) {
                const double bearing = (pose.heading_deg + (jitter(gen) - 0.5) * hfov) * std::numbers::pi / 180.0;
                const double dist = d_max * std::sqrt(jitter(gen));
                const double x = pose.position.x + dist * std::cos(bearing), y = pose.position.y + dist * std::sin(bearing);
                c = {static_cast<int>(std::floor(y / res)), static_cast<int>(std::floor(x / res))};
            }
            if (!s.grid.contains(c)) continue;
            ++k;
            ++total;
            const bool got = compute_visible(w, pose, d_max, hfov).contains(c);
            visible += got;
            const auto o = oracle::visible_oracle(w.blocked, res, pose, d_max, hfov, c);
            if (o.agent_cell) {
                bad += !got;
            } else if (!(o.in_range && o.in_cone)) {
                bad += got;
            } else if (!o.los.accepts(got)) {
                ++bad;
            } else {
                exempt += o.los.exempt(got);
            }
        }
    }
    const double share = double(exempt) / total;
    return {bad == 0 && share < 0.005,
            fmt("%ld triples (%ld visible), %ld mismatches, %ld corner-grazing exemptions (%.3f%%, limit 0.5%%)", total,
                visible, bad, exempt, 100 * share)};
}

Outcome ac4() {
    const int n = 121, mid = 60;
    const OccupancyGrid open(n, n, 0.05, CellState::Free);
    const auto f = fmm_field(open, GridIndex{mid, mid});
    double worst = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double e = std::hypot(r - double(mid), c - double(mid));
            if (e > 5.0) worst = std::max(worst, std::abs(f.time(r, c) - e) / e);
        }

    std::mt19937 gen(99);
    long cells = 0, out_of_bracket = 0, octile_violations = 0;
    for (int t = 0; t < 50; ++t) {
        OccupancyGrid g = oracle::random_maze(60, 60, 0.2 + 0.01 * (t % 10), gen);
        const auto pass = g.traversable();
        const auto freec = true_cells(pass);
        const GridIndex goal = freec[std::uniform_int_distribution<std::size_t>(0, freec.size() - 1)(gen)];
        const auto fm = fmm_field(g, goal);
        const std::span<const GridIndex> src(&goal, 1);
        const auto lo = oracle::dijkstra(pass, src, 1.0);
        const auto hi = oracle::dijkstra(pass, src, 0.0);
        const auto oct = oracle::dijkstra(pass, src, std::sqrt(2.0));
        for (int r = 0; r < 60; ++r)
            for (int c = 0; c < 60; ++c) {
                if (!pass(r, c)) continue;
                ++cells;
                const double T = fm.time(r, c);
                const bool inside = std::isinf(hi(r, c)) ? std::isinf(T) : (T >= lo(r, c) - 1e-9 && T <= hi(r, c) + 1e-9);
                out_of_bracket += !inside;
                octile_violations += std::isfinite(T) && T < oct(r, c) - 1e-9;
            }
    }
    return {worst < 0.01 && out_of_bracket == 0,
            fmt("open grid worst relative error %.3f%% beyond 5 cells (limit 1%%); 50 mazes, %ld cells, %ld outside "
                "[8-connected unit-diagonal, 4-connected]; %ld cells below the sqrt(2)-diagonal distance",
                100 * worst, cells, out_of_bracket, octile_violations)};
}

int workers() { return std::max(1u, std::thread::hardware_concurrency()); }

struct PolicyRuns {
    AggregateReport naive, rate;
    double seconds = 0;
};

// Shared by the safety and efficiency criteria: oracle assessor, no sensor
// noise, Naive and RATE at two thresholds on the same 300 scenarios.
const PolicyRuns& policy_runs(const fs::path& scratch) {
    static std::optional<PolicyRuns> runs;
    if (runs) return *runs;
    const auto t0 = Clock::now();
    SweepSpec s;
    s.scenario_seeds.clear();
    for (std::uint64_t i = 1; i <= 300; ++i) s.scenario_seeds.push_back(i);
    s.floorplan.resolution = 0.1;
    s.workers = workers();
    s.policies = {Policy::Naive};
    s.thresholds = {0.7};
    PolicyRuns out;
    out.naive = run_sweep(s, scratch / "naive");
    s.policies = {Policy::Rate};
    s.thresholds = {0.7, 0.9};
    out.rate = run_sweep(s, scratch / "rate");
    out.seconds = seconds_since(t0);
    runs = std::move(out);
    return *runs;
}

const CellKey kNaive{Policy::Naive, 0.7, "oracle", "full"};
const CellKey kRate7{Policy::Rate, 0.7, "oracle", "full"};
const CellKey kRate9{Policy::Rate, 0.9, "oracle", "full"};

Outcome ac5(const fs::path& scratch) {
    const auto& runs = policy_runs(scratch);
    const auto naive = cell_metric(runs.naive, kNaive, "success");
    int violations = 0, naive_ok = 0, failures = 0, pairs = 0;
    for (const CellKey& key : {kRate7, kRate9}) {
        const auto rate = cell_metric(runs.rate, key, "success");
        if (rate.size() != naive.size()) return {false, "unpaired runs"};
        for (std::size_t i = 0; i < naive.size(); ++i) {
            ++pairs;
            naive_ok += naive[i] > 0;
            violations += naive[i] > 0 && rate[i] == 0;
        }
    }
    for (const auto* rep : {&runs.naive, &runs.rate})
        for (const auto& c : rep->cells) failures += c.failures;
    return {violations == 0 && failures == 0 && naive.size() == 300,
            fmt("%d pairs (thresholds 0.7 and 0.9), Naive succeeded in %d, RATE failed on %d of those; %d crashed runs",
                pairs, naive_ok, violations, failures)};
}

Outcome ac6(const fs::path& scratch) {
    const auto& runs = policy_runs(scratch);
    const auto naive = cell_metric(runs.naive, kNaive, "spl");
    const auto r7 = cell_metric(runs.rate, kRate7, "spl");
    const auto r9 = cell_metric(runs.rate, kRate9, "spl");
    const PairedTest vs_naive = paired_t_test(r7, naive), vs_high = paired_t_test(r7, r9);
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    const bool pass = naive.size() >= 200 && vs_naive.mean_difference > 0 && vs_naive.p_greater < 0.05 &&
                      vs_high.mean_difference > 0 && vs_high.p_greater < 0.05;
    return {pass, fmt("%zu pairs; SPL Naive %.4f, RATE@0.7 %.4f, RATE@0.9 %.4f; 0.7 vs Naive t=%.2f p=%.2g; 0.7 vs 0.9 "
                      "t=%.2f p=%.2g (one-sided, limit 0.05); %.0f s for both criteria",
                      naive.size(), mean(naive), mean(r7), mean(r9), vs_naive.t, vs_naive.p_greater, vs_high.t,
                      vs_high.p_greater, runs.seconds)};
}

Outcome ac7(const fs::path& data, const fs::path& scratch) {
    ConfigFile cfg = load_config((data / "specs" / "marginal.json").string());
    cfg.sweep.floorplan = cfg.floorplan;
    cfg.sweep.base = cfg.episode;
    cfg.sweep.workers = workers();
    const AggregateReport rep = run_sweep(cfg.sweep, scratch / "marginal");
    const auto& cell = rep.cells.at(0);
    const auto& series = cell.marginal.series;
    const Histogram& h = cell.marginal.found_at_rate;
    const int below = h.below_bin(10);
    const bool pass = cell.episodes >= 100 && series.trend.rho < 0 && series.trend.p_less < 0.05 && 2 * below > h.total();
    std::string windows;
    for (double m : series.window_marginal) windows += fmt("%.4f ", m);
    return {pass, fmt("%d open-room episodes; window marginals %sSpearman rho %.3f p=%.2g (limit 0.05); %d of %d "
                      "detections below full exploration",
                      cell.episodes, windows.c_str(), series.trend.rho, series.trend.p_less, below, h.total())};
}

Outcome ac8(const fs::path& data, const fs::path& scratch) {
    ConfigFile cfg = load_config((data / "specs" / "ablation.json").string());
    cfg.sweep.floorplan = cfg.floorplan;
    cfg.sweep.base = cfg.episode;
    cfg.sweep.workers = workers();
    const AggregateReport rep = run_sweep(cfg.sweep, scratch / "ablation");
    std::ifstream table(scratch / "ablation" / "aggregate.csv");
    int rows = 0;
    for (std::string l; std::getline(table, l);) rows += !l.empty() && l[0] != '#';
    const CellReport* full = nullptr;
    for (const auto& c : rep.cells)
        if (c.key.variant == "full") full = &c;
    if (rep.cells.size() != 5 || full == nullptr || rows != 6) return {false, fmt("table has %d rows", rows - 1)};
    bool ordered = true;
    std::string detail;
    for (const auto& c : rep.cells) {
        ordered = ordered && full->success.mean >= c.success.mean && c.failures == 0;
        detail += fmt("%s %.3f, ", c.key.variant.c_str(), c.success.mean);
    }
    detail.resize(detail.size() - 2);
    return {ordered, fmt("5 rows over %zu scenarios, SR: %s", cfg.sweep.scenario_seeds.size(), detail.c_str())};
}

// Every regular file under `a` equals its counterpart under `b`.
bool same_tree(const fs::path& a, const fs::path& b, int& files, std::string& why) {
    int mine = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), a);
        ++mine;
        ++files;
        if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) {
            why = rel.string();
            return false;
        }
    }
    int other = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
    if (other != mine) why = "file count";
    return other == mine;
}

Outcome ac9(const std::string& cli, const fs::path& scratch) {
    if (cli.empty()) return {false, "no CLI path given (--cli)"};
    const fs::path d = scratch / "determinism";
    fs::create_directories(d);
    {
        std::ofstream os(d / "sweep.json");
        os << R"({"format": "termnav-config", "version": 1, "floorplan": {"resolution": 0.1},
                  "sweep": {"scenario_seeds": [1, 2, 3, 4], "policies": ["naive", "rate"], "thresholds": [0.7, 0.9],
                            "write_traces": true}})";
    }
    const std::string q = "\"" + cli + "\"";
    auto sh = [&](const std::string& args) {
        return std::system((q + " " + args + " > \"" + (d / "log.txt").string() + "\" 2>&1").c_str());
    };
    const std::string cfg = "\"" + (d / "sweep.json").string() + "\"";
    struct Pair {
        std::string what, args, extra_a, extra_b;
    };
    const std::vector<Pair> pairs{
        {"run", "run --seed 1 --policy rate", "", ""},
        {"run naive", "run --seed 6 --policy naive", "", ""},
        {"generate", "generate --seed 5 --count 3", "", ""},
        {"sweep", "sweep --config " + cfg, " --workers 1", " --workers 3"},
        {"analyze", "analyze --episodes \"" + (d / "sweep_a" / "episodes.jsonl").string() + "\"", "", ""},
    };
    int files = 0;
    for (const auto& p : pairs) {
        std::string tag = p.what;
        std::replace(tag.begin(), tag.end(), ' ', '_');
        const fs::path a = d / (tag + "_a"), b = d / (tag + "_b");
        if (sh(p.args + p.extra_a + " --out \"" + a.string() + "\"") != 0 ||
            sh(p.args + p.extra_b + " --out \"" + b.string() + "\"") != 0)
            return {false, p.what + " exited nonzero: " + slurp(d / "log.txt")};
        std::string why;
        if (!same_tree(a, b, files, why)) return {false, p.what + " outputs differ: " + why};
    }
    return {true, fmt("run, generate, sweep (1 vs 3 workers) and analyze repeated: %d files byte-identical", files)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string cli, data = TERMNAV_DATA_DIR, only;
    fs::path scratch = fs::temp_directory_path() / "termnav_acceptance";
    app.add_option("--cli", cli, "path of the termnav binary");
    app.add_option("--data", data, "data directory");
    app.add_option("--scratch", scratch, "scratch directory, wiped first");
    app.add_option("--only", only, "comma-separated criteria to run, e.g. AC3,AC4");
    CLI11_PARSE(app, argc, argv);

    fs::remove_all(scratch);
    fs::create_directories(scratch);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC1", ac1},
        {"AC2", ac2},
        {"AC3", ac3},
        {"AC4", ac4},
        {"AC5", [&] { return ac5(scratch); }},
        {"AC6", [&] { return ac6(scratch); }},
        {"AC7", [&] { return ac7(data, scratch); }},
        {"AC8", [&] { return ac8(data, scratch); }},
        {"AC9", [&] { return ac9(cli, scratch); }},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        if (!only.empty() && ("," + only + ",").find("," + name + ",") == std::string::npos) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << fmt(" [%.1f s]", seconds_since(t0))
                  << std::endl;
    }
    fs::remove_all(scratch);
    return failed == 0 ? 0 : 1;
}
