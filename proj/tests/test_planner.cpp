#include "oracles.hpp"

#include "termnav/planner.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace termnav;

namespace {

OccupancyGrid grid_from(const std::vector<std::string>& rows, double res = 0.05) {
    std::ostringstream os;
    os << rows[0].size() << ' ' << rows.size() << ' ' << res << '\n';
    for (const auto& r : rows) os << r << '\n';
    return from_ascii(os.str());
}

RegionMap one_region(int rows, int cols) {
    RegionMap rm;
    rm.labels = LabelRaster::Ones(rows, cols);
    refresh_region_info(rm);
    return rm;
}

Frontier frontier_at(GridIndex c, int region, int size = 3) {
    Frontier f;
    f.cells = {c};
    f.centroid = c;
    f.region_id = region;
    f.size = size;
    return f;
}

TravelTimeField constant_field(int rows, int cols, double value) {
    return {Raster<double>::Constant(rows, cols, value), 0.05};
}

}  // namespace

TEST_CASE("detect_frontiers examples") {
    SUBCASE("fully known map") {
        OccupancyGrid g = grid_from({"#####", "#...#", "#####"});
        CHECK(detect_frontiers(g, one_region(3, 5)).empty());
    }
    SUBCASE("straight known/unknown boundary") {
        std::vector<std::string> rows(12, std::string(20, '?'));
        for (int r = 0; r < 12; ++r) rows[r].replace(0, 10, std::string(10, '.'));
        OccupancyGrid g = grid_from(rows);
        auto fs = detect_frontiers(g, one_region(12, 20));
        REQUIRE(fs.size() == 1);
        CHECK(fs[0].size == 12);
        for (const auto& c : fs[0].cells) CHECK(c.col == 9);
    }
    SUBCASE("three doorways to unknown space") {
        OccupancyGrid g = grid_from({
            "????????????????????",
            "###...####...###...#",
            "#..................#",
            "#..................#",
            "####################",
        });
        auto fs = detect_frontiers(g, one_region(5, 20));
        CHECK(fs.size() == 3);
        LabelRaster comp;
        CHECK(connected_components(oracle::frontier_scan(g), comp) == 3);
    }
    SUBCASE("small clusters are dropped") {
        OccupancyGrid g = grid_from({"#?##", "#..#", "####"});
        CHECK(detect_frontiers(g, one_region(3, 4), 3).empty());
        CHECK(detect_frontiers(g, one_region(3, 4), 1).size() == 1);
    }
}

TEST_CASE("frontier cells equal the direct scan") {
    std::mt19937 gen(9);
    std::discrete_distribution<int> pick({5, 2, 3});
    for (int t = 0; t < 20; ++t) {
        OccupancyGrid g(25, 18);
        for (int r = 0; r < 18; ++r)
            for (int c = 0; c < 25; ++c) g.set({r, c}, static_cast<CellState>(pick(gen)), true);
        const Mask ref = oracle::frontier_scan(g);
        CHECK((frontier_cells(g) == ref).all());
        // clusters of size >= 1 partition the scan exactly
        Mask covered = Mask::Constant(18, 25, false);
        int cells = 0;
        for (const auto& f : detect_frontiers(g, one_region(18, 25), 1)) {
            CHECK(f.size == static_cast<int>(f.cells.size()));
            CHECK(std::find(f.cells.begin(), f.cells.end(), f.centroid) != f.cells.end());
            for (const auto& c : f.cells) {
                CHECK_FALSE(covered(c.row, c.col));
                covered(c.row, c.col) = true;
                ++cells;
            }
        }
        CHECK((covered == ref).all());
        CHECK(cells == ref.count());
    }
}

TEST_CASE("frontier tag follows the unknown side") {
    // known room on the left (region 1), unknown room on the right (region 2)
    OccupancyGrid g = grid_from({
        "##########",
        "#....?????",
        "#....?????",
        "#....?????",
        "##########",
    });
    RegionMap rm;
    rm.labels = LabelRaster::Ones(5, 10);
    rm.labels.rightCols(5).setConstant(2);
    refresh_region_info(rm);
    auto fs = detect_frontiers(g, rm);
    REQUIRE(fs.size() == 1);
    CHECK(rm.label(fs[0].centroid) == 1);
    CHECK(fs[0].region_id == 2);
}

TEST_CASE("score_candidates examples") {
    const RegionMap rm = [] {
        RegionMap m;
        m.labels = LabelRaster::Ones(20, 20);
        m.labels.rightCols(10).setConstant(2);
        refresh_region_info(m);
        return m;
    }();
    const auto prior = SemanticPrior::defaults();
    RegionPriorities pr;

    SUBCASE("single frontier wins whatever the weights") {
        std::vector<Frontier> fs{frontier_at({5, 5}, 1)};
        for (auto w : {ScoringParams{0, 0, 0, 4}, ScoringParams{1, 0, 0, 4}, ScoringParams{0, 1, 1, 4}}) {
            auto ranked = score_candidates(fs, rm, pr, constant_field(20, 20, 40.0), "bed", prior, w);
            REQUIRE(ranked.size() == 1);
            CHECK(ranked[0].frontier.centroid == GridIndex{5, 5});
        }
    }
    SUBCASE("demoted region comes last at equal distance") {
        std::vector<Frontier> fs{frontier_at({5, 15}, 2), frontier_at({5, 5}, 1)};
        auto demoted = apply_verdict(pr, Verdict::VeryLowProbability, 2);
        auto ranked = score_candidates(fs, rm, demoted, constant_field(20, 20, 20.0), "bed", prior);
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].frontier.region_id == 1);
        CHECK(ranked[1].demoted);
        // even a much closer demoted frontier stays behind
        Raster<double> t = Raster<double>::Constant(20, 20, 200.0);
        t(5, 15) = 1.0;
        ranked = score_candidates(fs, rm, demoted, {t, 0.05}, "bed", prior, {1, 0, 0, 4});
        CHECK(ranked[0].frontier.region_id == 1);
    }
    SUBCASE("distance-only weights at 2 m and 6 m") {
        std::vector<Frontier> fs{frontier_at({1, 1}, 1), frontier_at({2, 2}, 1)};
        Raster<double> t = Raster<double>::Constant(20, 20, 1e9);
        t(1, 1) = 6.0 / 0.05;
        t(2, 2) = 2.0 / 0.05;
        auto ranked = score_candidates(fs, rm, pr, {t, 0.05}, "bed", prior, {1, 0, 0, 4});
        REQUIRE(ranked.size() == 2);
        CHECK(ranked[0].frontier.centroid == GridIndex{2, 2});
        CHECK(ranked[0].score == doctest::Approx(std::exp(-2.0 / 4.0)));
        CHECK(ranked[1].score == doctest::Approx(std::exp(-6.0 / 4.0)));
    }
    SUBCASE("ties go to the larger frontier, then the smaller centroid") {
        std::vector<Frontier> fs{frontier_at({9, 9}, 1, 3), frontier_at({8, 8}, 1, 3), frontier_at({7, 7}, 1, 5)};
        auto ranked = score_candidates(fs, rm, pr, constant_field(20, 20, 10.0), "bed", prior);
        REQUIRE(ranked.size() == 3);
        CHECK(ranked[0].frontier.size == 5);
        CHECK(ranked[1].frontier.centroid == GridIndex{8, 8});
    }
    SUBCASE("semantic term reads the region objects") {
        RegionMap with = rm;
        with.region(2).objects.push_back({"nightstand", {3, 14}});
        std::vector<Frontier> fs{frontier_at({5, 5}, 1), frontier_at({5, 15}, 2)};
        auto ranked = score_candidates(fs, with, pr, constant_field(20, 20, 10.0), "bed", prior);
        CHECK(ranked[0].frontier.region_id == 2);
        CHECK(ranked[0].semantic_term == doctest::Approx(0.95));
    }
    SUBCASE("nothing to score") {
        CHECK_THROWS_AS(score_candidates({}, rm, pr, constant_field(20, 20, 1.0), "bed", prior), ExplorationExhausted);
        std::vector<Frontier> fs{frontier_at({5, 5}, 1)};
        CHECK_THROWS_AS(score_candidates(fs, rm, pr, constant_field(20, 20, oracle::kInf), "bed", prior),
                        ExplorationExhausted);
    }
}

TEST_CASE("semantic prior") {
    const auto p = SemanticPrior::defaults();
    const std::vector<std::string> objs{"sink", "bathtub"};
    CHECK(p.prior("toilet", objs) == doctest::Approx(0.95));
    const std::vector<std::string> self{"toilet"};
    CHECK(p.prior("toilet", self) == 1.0);
    CHECK(p.prior("unknown_category", objs) == 0.0);
    CHECK(SemanticPrior::from_json(p.to_json()).table() == p.table());
}

TEST_CASE("shipped semantic prior file matches the built-in table") {
    std::ifstream in(TERMNAV_DATA_DIR "/semantic_prior.json");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(SemanticPrior::from_json(ss.str()).table() == SemanticPrior::defaults().table());
}

TEST_CASE("fmm on an empty grid tracks the Euclidean distance") {
    OccupancyGrid g(51, 51, 0.05, CellState::Free);
    auto f = fmm_field(g, GridIndex{25, 25});
    double worst = 0;
    for (int r = 0; r < 51; ++r)
        for (int c = 0; c < 51; ++c) {
            const double e = std::hypot(r - 25.0, c - 25.0);
            if (e <= 5.0) {
                CHECK(f.time(r, c) == doctest::Approx(e));
                continue;
            }
            worst = std::max(worst, std::abs(f.time(r, c) - e) / e);
        }
    CHECK(worst < 0.01);
    for (int k = 0; k < 4; ++k) CHECK(f.at({25 + kDr4[k], 25 + kDc4[k]}) == doctest::Approx(1.0));
    CHECK(f.at({25, 25}) == 0.0);
    CHECK(f.meters({25, 35}) == doctest::Approx(0.5));
}

TEST_CASE("fmm is bracketed by grid path oracles on mazes") {
    std::mt19937 gen(77);
    for (int t = 0; t < 10; ++t) {
        OccupancyGrid g = oracle::random_maze(30, 35, 0.25, gen);
        const GridIndex goal{0, 0};
        auto f = fmm_field(g, goal);
        const Mask pass = g.traversable();
        auto lo = oracle::dijkstra(pass, std::span<const GridIndex>(&goal, 1), 1.0);
        auto hi = oracle::dijkstra(pass, std::span<const GridIndex>(&goal, 1), 0.0);
        for (int r = 0; r < 30; ++r)
            for (int c = 0; c < 35; ++c) {
                if (!pass(r, c)) {
                    CHECK(std::isinf(f.time(r, c)));
                    continue;
                }
                CHECK(f.time(r, c) >= lo(r, c) - 1e-9);
                CHECK(f.time(r, c) <= hi(r, c) + 1e-9);
                if (std::isinf(hi(r, c))) CHECK(std::isinf(f.time(r, c)));
            }
    }
}

TEST_CASE("fmm local consistency and descent") {
    std::mt19937 gen(5);
    for (int t = 0; t < 10; ++t) {
        OccupancyGrid g = oracle::random_maze(30, 30, 0.2, gen);
        const GridIndex goal{0, 0};
        auto f = fmm_field(g, goal);
        for (int r = 0; r < 30; ++r)
            for (int c = 0; c < 30; ++c) {
                if (!f.reachable({r, c})) continue;
                for (int k = 0; k < 8; ++k) {
                    const GridIndex n{r + kDr8[k], c + kDc8[k]};
                    if (!f.reachable(n)) continue;
                    const bool diag = kDr8[k] != 0 && kDc8[k] != 0;
                    if (diag && (!g.is_free({r + kDr8[k], c}) || !g.is_free({r, c + kDc8[k]}))) continue;
                    CHECK(f.at({r, c}) <= f.at(n) + (diag ? std::sqrt(2.0) : 1.0) + 1e-9);
                }
                auto path = descent_path(f, {r, c}, 10000);
                CHECK(path.back() == goal);
                CHECK(static_cast<double>(path.size() - 1) <= std::ceil(f.at({r, c})));
            }
    }
}

TEST_CASE("fmm options and errors") {
    OccupancyGrid g = grid_from({"..........", "....??....", "....##....", ".........."});
    CHECK_THROWS_AS(fmm_field(g, GridIndex{2, 4}), std::invalid_argument);
    CHECK_THROWS_AS(fmm_field(g, GridIndex{1, 4}), std::invalid_argument);
    FmmOptions closed;
    closed.unknown_traversable = false;
    CHECK(std::isinf(fmm_field(g, GridIndex{0, 0}, closed).at({1, 4})));
    CHECK(std::isfinite(fmm_field(g, GridIndex{0, 0}).at({1, 4})));

    OccupancyGrid open(200, 10, 0.05, CellState::Free);
    FmmOptions early;
    early.stop_cells = {{5, 20}};
    early.stop_margin = 5;
    auto f = fmm_field(open, GridIndex{5, 0}, early);
    CHECK(f.at({5, 20}) == doctest::Approx(20.0).epsilon(0.01));
    CHECK(std::isinf(f.at({5, 150})));
    auto full = fmm_field(open, GridIndex{5, 0});
    CHECK(f.at({5, 20}) == full.at({5, 20}));
}

TEST_CASE("next_action examples") {
    OccupancyGrid g(60, 60, 0.05, CellState::Free);
    ActionContext ctx;
    ctx.known = &g;
    SUBCASE("goal straight ahead") {
        auto f = fmm_field(g, GridIndex{30, 50});
        CHECK(next_action(f, {grid_to_world({30, 10}, 0.05), 0}, ctx) == Action::Forward);
    }
    SUBCASE("goal 90 degrees to the left") {
        // heading 0 faces +x; left is -y (decreasing row)
        auto f = fmm_field(g, GridIndex{5, 30});
        CHECK(next_action(f, {grid_to_world({40, 30}, 0.05), 0}, ctx) == Action::TurnLeft);
        CHECK(next_action(f, {grid_to_world({40, 30}, 0.05), 180}, ctx) == Action::TurnRight);
    }
    SUBCASE("at the committed goal") {
        auto f = fmm_field(g, GridIndex{30, 30});
        ctx.committed_target = true;
        CHECK(next_action(f, {grid_to_world({30, 30}, 0.05), 90}, ctx) == Action::Stop);
    }
    SUBCASE("unreachable agent cell") {
        OccupancyGrid split = g;
        for (int r = 0; r < 60; ++r) split.set({r, 30}, CellState::Obstacle, true);
        auto f = fmm_field(split, GridIndex{10, 50});
        ctx.known = &split;
        CHECK_THROWS_AS(next_action(f, {grid_to_world({10, 10}, 0.05), 0}, ctx), ReplanSignal);
    }
}

TEST_CASE("next_action never drives into an obstacle") {
    std::mt19937 gen(15);
    std::uniform_int_distribution<int> cell(1, 38), head(0, 11);
    MotionParams motion;
    int forwards = 0;
    for (int t = 0; t < 20; ++t) {
        OccupancyGrid g = oracle::random_maze(40, 40, 0.15, gen);
        GridIndex goal{cell(gen), cell(gen)};
        while (!g.is_free(goal)) goal = {cell(gen), cell(gen)};
        auto f = fmm_field(g, goal);
        ActionContext ctx;
        ctx.known = &g;
        for (int k = 0; k < 50; ++k) {
            GridIndex at{cell(gen), cell(gen)};
            if (!f.reachable(at) || at == goal) continue;
            AgentPose pose{grid_to_world(at, 0.05), 30 * head(gen)};
            Action a;
            try {
                a = next_action(f, pose, ctx);
            } catch (const ReplanSignal&) {
                continue;
            }
            if (a != Action::Forward) continue;
            ++forwards;
            const AgentPose next = apply_motion(pose, a, motion);
            for (const auto& c : swept_cells(pose.position, next.position, 0.05)) {
                REQUIRE(g.contains(c));
                CHECK(g.is_free(c));
            }
        }
    }
    CHECK(forwards > 50);
}

TEST_CASE("following the controller reaches the goal on a static map") {
    // 3 m x 5 m hall, a wall from the bottom leaves a 1 m opening at the top
    OccupancyGrid g(100, 60, 0.05, CellState::Free);
    for (int r = 0; r < 60; ++r) {
        g.set({r, 0}, CellState::Obstacle, true);
        g.set({r, 99}, CellState::Obstacle, true);
        if (r > 20) g.set({r, 50}, CellState::Obstacle, true);
    }
    for (int c = 0; c < 100; ++c) {
        g.set({0, c}, CellState::Obstacle, true);
        g.set({59, c}, CellState::Obstacle, true);
    }
    const GridIndex goal{45, 80};
    auto f = fmm_field(g, goal);
    ActionContext ctx;
    ctx.known = &g;
    ctx.committed_target = true;
    ctx.stop_distance_m = 0.3;
    AgentPose pose{grid_to_world({45, 20}, 0.05), 0};
    const double t0 = f.meters(world_to_grid(pose.position, g));
    int steps = 0, moves = 0;
    for (; steps < 200; ++steps) {
        const Action a = next_action(f, pose, ctx);
        if (a == Action::Stop) break;
        moves += a == Action::Forward;
        pose = apply_motion(pose, a);
        REQUIRE(g.is_free(world_to_grid(pose.position, g)));
    }
    CHECK(steps < 200);
    CHECK(f.meters(world_to_grid(pose.position, g)) <= 0.3);
    CHECK(moves * 0.25 <= 1.5 * t0);
}

TEST_CASE("motion primitives") {
    AgentPose p{{1.0, 1.0}, 0};
    CHECK(apply_motion(p, Action::TurnLeft).heading_deg == 330);
    CHECK(apply_motion(p, Action::TurnRight).heading_deg == 30);
    auto f = apply_motion(p, Action::Forward);
    CHECK(f.position.x == doctest::Approx(1.25));
    CHECK(f.position.y == doctest::Approx(1.0));
    CHECK(apply_motion(p, Action::Stop) == p);
    for (auto a : {Action::Forward, Action::TurnLeft, Action::TurnRight, Action::Stop})
        CHECK(action_from_string(to_string(a)) == a);
    CHECK_THROWS(action_from_string("jump"));
    auto cells = swept_cells({0.01, 0.01}, {0.26, 0.01}, 0.05);
    CHECK(cells.front() == GridIndex{0, 0});
    CHECK(cells.back() == GridIndex{0, 5});
    CHECK(cells.size() == 6);
}
