#include "oracles.hpp"

#include "termnav/exploration.hpp"
#include "termnav/simulator.hpp"

#include <doctest.h>

#include <numbers>
#include <random>

using namespace termnav;

namespace {

VisibilityMask mask_of(const std::vector<GridIndex>& cells, int rows, int cols, int frame = 0) {
    VisibilityMask m;
    m.origin = {0, 0};
    m.window = Mask::Constant(rows, cols, false);
    for (const auto& c : cells) m.window(c.row, c.col) = true;
    m.map_rows = rows;
    m.map_cols = cols;
    m.frame_id = frame;
    return m;
}

std::vector<GridIndex> first_n(int n, int cols, int skip = 0) {
    std::vector<GridIndex> out;
    for (int i = skip; i < skip + n; ++i) out.push_back(from_linear(i, cols));
    return out;
}

RegionMap split_map(int rows, int cols, int first_size) {
    RegionMap rm;
    rm.labels = LabelRaster::Constant(rows, cols, 2);
    for (int i = 0; i < first_size; ++i) rm.labels(i / cols, i % cols) = 1;
    refresh_region_info(rm);
    return rm;
}

AgentPose pose_at(GridIndex c, int heading, double res) {
    return {grid_to_world(c, res), heading};
}

}  // namespace

TEST_CASE("compute_visible in open space is the range disk") {
    WallMap w;
    w.resolution = 0.05;
    w.blocked = Mask::Constant(81, 81, false);
    const AgentPose pose = pose_at({40, 40}, 0, 0.05);
    const double d_max = 1.52;  // off the lattice so no cell sits on the rim
    VisibilityMask vm = compute_visible(w, pose, d_max, 360.0);
    int disk = 0;
    for (int r = 0; r < 81; ++r)
        for (int c = 0; c < 81; ++c) disk += std::hypot(r - 40.0, c - 40.0) * 0.05 <= d_max + 1e-12;
    CHECK(vm.count() == disk);
    CHECK(vm.contains({40, 40}));
}

TEST_CASE("compute_visible stops at a wall ahead") {
    WallMap w;
    w.resolution = 0.05;
    w.blocked = Mask::Constant(41, 121, false);
    w.blocked.col(40).setConstant(true);  // 1 m ahead of the agent at column 20
    const AgentPose pose = pose_at({20, 20}, 0, 0.05);
    VisibilityMask vm = compute_visible(w, pose, 5.0, 79.0);
    CHECK(vm.contains({20, 39}));
    CHECK(vm.contains({20, 40}));  // the wall face itself is seen
    for (int c = 41; c < 121; ++c) CHECK_FALSE(vm.contains({20, c}));
}

TEST_CASE("compute_visible respects the cone") {
    WallMap w;
    w.resolution = 0.05;
    w.blocked = Mask::Constant(101, 101, false);
    for (int heading : {0, 30, 90, 210, 330}) {
        const AgentPose pose = pose_at({50, 50}, heading, 0.05);
        VisibilityMask vm = compute_visible(w, pose, 2.0, 90.0);
        int outside = 0;
        vm.for_each([&](GridIndex c) {
            if (c == GridIndex{50, 50}) return;
            const double b = std::atan2(c.row - 50.0, c.col - 50.0) * 180 / std::numbers::pi;
            if (std::abs(std::remainder(b - heading, 360.0)) > 45.0 + 1e-9) ++outside;
        });
        CHECK(outside == 0);
        CHECK(vm.count() > 100);
    }
}

TEST_CASE("visibility agrees with the brute-force check") {
    std::mt19937 gen(41);
    int exempt = 0, total = 0;
    for (int map = 0; map < 10; ++map) {
        WallMap w;
        w.resolution = 0.05;
        w.blocked = oracle::random_mask(60, 60, 0.03, gen);
        std::uniform_real_distribution<double> u(0.5, 2.5);
        std::uniform_int_distribution<int> h(0, 11);
        for (int k = 0; k < 5; ++k) {
            AgentPose pose{{u(gen), u(gen)}, 30 * h(gen)};
            VisibilityMask vm = compute_visible(w, pose, 1.2, 79.0);
            for (int r = 0; r < 60; ++r)
                for (int c = 0; c < 60; ++c) {
                    auto o = oracle::visible_oracle(w.blocked, 0.05, pose, 1.2, 79.0, {r, c});
                    if (o.agent_cell) {
                        CHECK(vm.contains({r, c}));
                        continue;
                    }
                    if (!(o.in_range && o.in_cone)) {
                        CHECK_FALSE(vm.contains({r, c}));
                        continue;
                    }
                    ++total;
                    CHECK(o.los.accepts(vm.contains({r, c})));
                    exempt += o.los.exempt(vm.contains({r, c}));
                }
        }
    }
    // scattered single-cell blocks are the worst case for grazing rays
    CHECK(exempt < total / 5);
}

TEST_CASE("accumulate examples") {
    const int rows = 20, cols = 20;
    ExplorationState st(rows, cols);
    st.bind(split_map(rows, cols, 200));
    auto m100 = mask_of(first_n(100, cols), rows, cols);
    CHECK(accumulate(st, m100, std::span<const GridIndex>{}) == 100);
    CHECK(st.explored_count() == 100);
    SUBCASE("same mask twice changes nothing") {
        CHECK(accumulate(st, m100, std::span<const GridIndex>{}) == 0);
        CHECK(st.explored_count() == 100);
    }
    SUBCASE("two masks sharing 30 cells") {
        auto other = mask_of(first_n(100, cols, 70), rows, cols);
        accumulate(st, other, std::span<const GridIndex>{});
        CHECK(st.explored_count() == 170);
    }
    SUBCASE("traversable cells join the explored set") {
        const std::vector<GridIndex> extra{{19, 19}, {19, 18}};
        CHECK(accumulate(st, m100, std::span<const GridIndex>(extra)) == 2);
        CHECK(st.explored()(19, 19));
    }
    SUBCASE("dimension mismatch") {
        auto bad = mask_of({{0, 0}}, 5, 5);
        CHECK_THROWS_AS(accumulate(st, bad, std::span<const GridIndex>{}), std::invalid_argument);
    }
}

TEST_CASE("region_rate examples") {
    RegionMap rm;
    rm.labels = LabelRaster::Zero(10, 10);
    rm.labels.block(0, 0, 5, 5).setConstant(1);  // 25 cells
    rm.labels.block(5, 5, 5, 5).setConstant(2);
    rm.labels.block(0, 5, 5, 5).setConstant(3);
    refresh_region_info(rm);
    Mask e = Mask::Constant(10, 10, false);
    e.block(0, 5, 5, 5).setConstant(true);
    for (int i = 0; i < 13; ++i) e(i / 5, i % 5) = true;
    CHECK(region_rate(e, rm, 3) == 1.0);
    CHECK(region_rate(e, rm, 2) == 0.0);
    CHECK(region_rate(e, rm, 1) == doctest::Approx(0.52));
    CHECK_THROWS_AS(region_rate(e, rm, 7), std::out_of_range);

    ExplorationState st(10, 10);
    st.bind(rm);
    accumulate(st, mask_of(true_cells(e), 10, 10), std::span<const GridIndex>{});
    CHECK(st.rate(1) == region_rate(e, rm, 1));
    CHECK_THROWS(st.rate(9));
}

TEST_CASE("incremental rates equal recounts and never drop") {
    std::mt19937 gen(4);
    const int rows = 30, cols = 30;
    RegionMap rm;
    rm.labels = LabelRaster::Zero(rows, cols);
    std::uniform_int_distribution<int> lab(0, 4);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) rm.labels(r, c) = (r / 10) * 3 + c / 10 + 1;
    rm.labels.row(15).setConstant(0);
    refresh_region_info(rm);
    ExplorationState st(rows, cols);
    st.bind(rm);
    std::map<int, double> before = st.rates();
    for (int step = 0; step < 60; ++step) {
        auto m = oracle::random_mask(rows, cols, 0.02, gen);
        accumulate(st, mask_of(true_cells(m), rows, cols, step), std::span<const GridIndex>{});
        for (const auto& info : rm.regions) {
            const double r = st.rate(info.id);
            CHECK(r == oracle::recount_rate(st.explored(), rm.labels, info.id));
            CHECK(r >= before[info.id]);
            before[info.id] = r;
        }
    }
}

TEST_CASE("rebinding recounts against the new regions") {
    ExplorationState st(10, 10);
    st.bind(split_map(10, 10, 50));
    accumulate(st, mask_of(first_n(30, 10), 10, 10), std::span<const GridIndex>{});
    CHECK(st.rate(1) == doctest::Approx(0.6));
    st.bind(split_map(10, 10, 20));
    CHECK(st.rate(1) == 1.0);
    CHECK(st.rate(2) == doctest::Approx(10.0 / 80));
}

TEST_CASE("record_keyframe examples") {
    const int rows = 10, cols = 10;
    ExplorationState st(rows, cols);
    st.bind(split_map(rows, cols, 40));
    auto first = mask_of(first_n(30, cols), rows, cols, 0);
    record_keyframe(st, first);
    REQUIRE(st.keyframes().size() == 1);
    CHECK(st.keyframes()[0].new_cells == 30);
    CHECK(st.keyframes()[0].region_coverage.at(1) == 30);
    accumulate(st, first, std::span<const GridIndex>{});

    auto inside = mask_of(first_n(10, cols, 5), rows, cols, 1);
    record_keyframe(st, inside);
    CHECK(st.keyframes().back().new_cells == 0);

    // coverage sums to the labeled visible cells
    auto straddle = mask_of(first_n(20, cols, 30), rows, cols, 2);
    record_keyframe(st, straddle);
    const auto& cov = st.keyframes().back().region_coverage;
    CHECK(cov.at(1) + cov.at(2) == 20);
}

TEST_CASE("keyframe buffer evicts the weakest frame") {
    std::mt19937 gen(12);
    const int rows = 20, cols = 20;
    KeyframeParams kp;
    kp.capacity = 8;
    ExplorationState st(rows, cols);
    st.bind(split_map(rows, cols, 100));
    // replay: keep (new_cells, frame_id) pairs and drop the minimum by hand
    std::vector<std::pair<int, int>> ref;
    for (int f = 0; f < 40; ++f) {
        auto m = mask_of(true_cells(oracle::random_mask(rows, cols, 0.05, gen)), rows, cols, f);
        int fresh = 0;
        m.for_each([&](GridIndex c) { fresh += !st.explored()(c.row, c.col); });
        record_keyframe(st, m, kp);
        accumulate(st, m, std::span<const GridIndex>{});
        ref.emplace_back(fresh, f);
        if (ref.size() > 8) ref.erase(std::min_element(ref.begin(), ref.end()));
        REQUIRE(st.keyframes().size() == ref.size());
        for (size_t i = 0; i < ref.size(); ++i) {
            CHECK(st.keyframes()[i].new_cells == ref[i].first);
            CHECK(st.keyframes()[i].frame_id == ref[i].second);
        }
    }
}

TEST_CASE("select_keyframes examples") {
    const int rows = 30, cols = 30;
    ExplorationState st(rows, cols);
    st.bind(split_map(rows, cols, 200));
    SUBCASE("view share against region share") {
        // A: 20 region cells out of 25 visible, B: 80 out of 400
        auto a_cells = first_n(20, cols);
        for (auto c : first_n(5, cols, 200)) a_cells.push_back(c);
        auto b_cells = first_n(80, cols, 100);
        for (auto c : first_n(320, cols, 300)) b_cells.push_back(c);
        record_keyframe(st, mask_of(b_cells, rows, cols, 1));
        record_keyframe(st, mask_of(a_cells, rows, cols, 2));
        auto sel = select_keyframes(st, 1, 8);
        REQUIRE(sel.size() == 2);
        CHECK(sel[0].frame_id == 2);
        CHECK(keyframe_score(sel[0], 200, 1, {}) == doctest::Approx(0.45));
        CHECK(keyframe_score(sel[1], 200, 1, {}) == doctest::Approx(0.30));
        CHECK(select_keyframes(st, 1, 0).empty());
        CHECK(select_keyframes(st, 1, 1).size() == 1);
    }
    SUBCASE("only frames that saw the region") {
        record_keyframe(st, mask_of(first_n(10, cols, 500), rows, cols, 0));
        record_keyframe(st, mask_of(first_n(10, cols, 0), rows, cols, 1));
        auto sel = select_keyframes(st, 1, 8);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0].frame_id == 1);
    }
    SUBCASE("ties go to the earlier frame") {
        record_keyframe(st, mask_of(first_n(10, cols, 0), rows, cols, 5));
        record_keyframe(st, mask_of(first_n(10, cols, 20), rows, cols, 3));
        auto sel = select_keyframes(st, 1, 8);
        REQUIRE(sel.size() == 2);
        CHECK(sel[0].frame_id == 3);
    }
}

TEST_CASE("heading normalization") {
    CHECK(normalize_heading(-30) == 330);
    CHECK(normalize_heading(360) == 0);
    CHECK(normalize_heading(750) == 30);
}
