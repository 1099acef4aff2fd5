#include "termnav/rng.hpp"
#include "termnav/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace termnav {

namespace {

struct RoomObject {
    const char* category;
    double probability;
};

struct RoomType {
    const char* name;
    std::vector<RoomObject> objects;
};

// Room-type object table used to populate plans.
const std::vector<RoomType>& room_types() {
    static const std::vector<RoomType> types = {
        {"living_room",
         {{"sofa", 0.9}, {"tv_monitor", 0.7}, {"plant", 0.5}, {"chair", 0.4}, {"bookshelf", 0.4}, {"lamp", 0.4}}},
        {"bedroom",
         {{"bed", 0.95}, {"nightstand", 0.8}, {"wardrobe", 0.6}, {"chair", 0.25}, {"plant", 0.15}, {"tv_monitor", 0.15}}},
        {"kitchen", {{"refrigerator", 0.9}, {"oven", 0.8}, {"sink", 0.8}, {"chair", 0.35}, {"plant", 0.15}}},
        {"bathroom", {{"toilet", 0.95}, {"sink", 0.9}, {"bathtub", 0.6}}},
        {"office", {{"desk", 0.9}, {"chair", 0.9}, {"bookshelf", 0.5}, {"plant", 0.3}, {"tv_monitor", 0.35}}},
        {"dining_room", {{"dining_table", 0.9}, {"chair", 0.95}, {"plant", 0.3}}},
    };
    return types;
}

const RoomType& room_type(const std::string& name) {
    for (const auto& t : room_types())
        if (t.name == name) return t;
    return room_types().front();
}

struct Rect {
    int r0, c0, r1, c1;  // half-open
    int height() const { return r1 - r0; }
    int width() const { return c1 - c0; }
};

struct Adjacency {
    int a, b;
    bool vertical_wall;  // wall runs along rows (rooms side by side)
    int wall0, wall1;    // wall strip span across its thickness
    int lo, hi;          // shared extent along the wall
};

void fill(OccupancyGrid& g, const Rect& r, CellState s, bool tall = false) {
    for (int y = r.r0; y < r.r1; ++y)
        for (int x = r.c0; x < r.c1; ++x) g.set({y, x}, s, tall);
}

// Splits the largest splittable leaf across its long side; false if none can
// be split with both halves at least `min_side` wide.
bool split_largest(std::vector<Rect>& leaves, int min_side, int wall, Rng& rng) {
    std::vector<size_t> order(leaves.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return leaves[a].height() * leaves[a].width() > leaves[b].height() * leaves[b].width();
    });
    for (size_t li : order) {
        const Rect r = leaves[li];
        const bool prefer_cols = r.width() > r.height() || (r.width() == r.height() && rng.bernoulli(0.5));
        for (bool along_cols : {prefer_cols, !prefer_cols}) {
            const int len = along_cols ? r.width() : r.height();
            if (len < 2 * min_side + wall) continue;
            const int lo = min_side, hi = len - min_side - wall;
            const int mid = (lo + hi) / 2, spread = (hi - lo) / 3;
            const int at = rng.uniform_int(mid - spread, mid + spread);
            Rect a = r, b = r;
            if (along_cols) {
                a.c1 = r.c0 + at;
                b.c0 = r.c0 + at + wall;
            } else {
                a.r1 = r.r0 + at;
                b.r0 = r.r0 + at + wall;
            }
            leaves[li] = a;
            leaves.push_back(b);
            return true;
        }
    }
    return false;
}

}  // namespace

const std::vector<std::string>& target_categories() {
    static const std::vector<std::string> cats = {"chair", "bed", "plant", "toilet", "tv_monitor", "sofa"};
    return cats;
}

std::vector<GridIndex> Scenario::target_cells() const {
    std::vector<GridIndex> out;
    for (const auto& o : objects)
        if (o.category == target_category) out.push_back(o.cell);
    return out;
}

bool operator==(const Scenario& a, const Scenario& b) {
    return a.grid == b.grid && a.objects == b.objects && a.rooms == b.rooms && a.target_category == b.target_category &&
           a.start == b.start && a.seed == b.seed && a.target_absent == b.target_absent;
}

bool free_space_connected(const OccupancyGrid& grid) {
    LabelRaster labels;
    return connected_components(grid.traversable(), labels) <= 1;
}

Scenario generate_floorplan(const FloorplanParams& p) {
    if (p.min_rooms < 1 || p.max_rooms < p.min_rooms) throw GenerationError("invalid room count range");
    if (!(p.min_room_size > 0) || p.max_room_size < p.min_room_size) throw GenerationError("invalid room size range");
    if (!(p.resolution > 0)) throw GenerationError("invalid resolution");
    if (p.corridor_width + 2 * p.wall_thickness > p.min_room_size)
        throw GenerationError("doorways do not fit the minimum room size");

    Rng rng(p.seed);
    const double res = p.resolution;
    const int wall = std::max(1, static_cast<int>(std::lround(p.wall_thickness / res)));
    const int min_side = static_cast<int>(std::ceil(p.min_room_size / res));
    const int door = std::max(1, static_cast<int>(std::lround(p.corridor_width / res)));
    const int nrooms = rng.uniform_int(p.min_rooms, p.max_rooms);

    // Footprint sized so that an average room side lands mid-range.
    const double mean_side = 0.5 * (p.min_room_size + p.max_room_size);
    const double area = nrooms * mean_side * mean_side;
    const double aspect = rng.uniform(0.75, 1.33);
    // Grow the footprint until the BSP finds room for every split.
    std::vector<Rect> leaves;
    int W = 0, H = 0;
    for (int attempt = 0; attempt < 8 && static_cast<int>(leaves.size()) < nrooms; ++attempt) {
        const double scale = 1.0 + 0.15 * attempt;
        int inner_w = std::max(min_side, static_cast<int>(std::lround(scale * std::sqrt(area * aspect) / res)));
        int inner_h = std::max(min_side, static_cast<int>(std::lround(scale * std::sqrt(area / aspect) / res)));
        if (p.max_extent > 0) {
            const int cap = static_cast<int>(std::floor(p.max_extent / res)) - 2 * wall;
            inner_w = std::min(inner_w, cap);
            inner_h = std::min(inner_h, cap);
            if (inner_w < min_side || inner_h < min_side) break;
        }
        W = inner_w + 2 * wall;
        H = inner_h + 2 * wall;
        leaves = {{wall, wall, H - wall, W - wall}};
        while (static_cast<int>(leaves.size()) < nrooms && split_largest(leaves, min_side, wall, rng)) {
        }
    }
    if (static_cast<int>(leaves.size()) < nrooms)
        throw GenerationError("rooms do not fit: cannot split the footprint " + std::to_string(nrooms) + " ways");

    Scenario s;
    s.seed = p.seed;
    s.grid = OccupancyGrid(W, H, res, CellState::Obstacle);
    fill(s.grid, {0, 0, H, W}, CellState::Obstacle, true);
    for (const auto& r : leaves) fill(s.grid, r, CellState::Free);

    // Shared wall strips between rooms.
    std::vector<Adjacency> adj;
    const int margin = std::max(1, wall);
    for (int i = 0; i < static_cast<int>(leaves.size()); ++i)
        for (int j = 0; j < static_cast<int>(leaves.size()); ++j) {
            if (i == j) continue;
            const Rect& a = leaves[i];
            const Rect& b = leaves[j];
            if (a.c1 + wall == b.c0) {
                const int lo = std::max(a.r0, b.r0), hi = std::min(a.r1, b.r1);
                if (hi - lo >= door + 2 * margin) adj.push_back({i, j, true, a.c1, b.c0, lo, hi});
            }
            if (a.r1 + wall == b.r0) {
                const int lo = std::max(a.c0, b.c0), hi = std::min(a.c1, b.c1);
                if (hi - lo >= door + 2 * margin) adj.push_back({i, j, false, a.r1, b.r0, lo, hi});
            }
        }
    // Random spanning tree (Kruskal over shuffled edges) plus extra doors.
    for (size_t i = adj.size(); i > 1; --i) std::swap(adj[i - 1], adj[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    std::vector<int> parent(leaves.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<Rect> doors;
    for (const auto& e : adj) {
        const int ra = find(e.a), rb = find(e.b);
        const bool tree_edge = ra != rb;
        if (!tree_edge && !rng.bernoulli(p.extra_door_probability)) continue;
        if (tree_edge) parent[ra] = rb;
        const int start = rng.uniform_int(e.lo + margin, e.hi - margin - door);
        Rect d = e.vertical_wall ? Rect{start, e.wall0, start + door, e.wall1} : Rect{e.wall0, start, e.wall1, start + door};
        fill(s.grid, d, CellState::Free);
        doors.push_back(d);
    }
    for (size_t i = 0; i < leaves.size(); ++i)
        if (find(static_cast<int>(i)) != find(0)) throw GenerationError("rooms could not be connected by doorways");

    // Room types: one of each in a shuffled order, then repeats.
    std::vector<std::string> type_names;
    for (const auto& t : room_types()) type_names.push_back(t.name);
    for (size_t i = type_names.size(); i > 1; --i)
        std::swap(type_names[i - 1], type_names[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    for (size_t i = 0; i < leaves.size(); ++i) {
        const Rect& r = leaves[i];
        s.rooms.push_back({static_cast<int>(i) + 1, type_names[i % type_names.size()], r.r0, r.c0, r.r1, r.c1});
    }

    auto near_door = [&](const Rect& f, int clearance) {
        for (const auto& d : doors)
            if (f.r0 < d.r1 + clearance && d.r0 - clearance < f.r1 && f.c0 < d.c1 + clearance && d.c0 - clearance < f.c1)
                return true;
        return false;
    };

    // Furniture flush against a wall, never near a doorway, keeping free
    // space connected and leaving walkable gaps to other furniture.
    const int door_clear = static_cast<int>(std::ceil(0.7 / res));
    const int gap = static_cast<int>(std::ceil(0.6 / res));
    for (const auto& room : s.rooms) {
        const int n = static_cast<int>(std::floor(rng.uniform(0.0, 2.5) * p.furniture_density));
        std::vector<Rect> placed;
        for (int k = 0; k < n; ++k) {
            for (int attempt = 0; attempt < 12; ++attempt) {
                const int fh = static_cast<int>(std::lround(rng.uniform(0.4, 1.0) / res));
                const int fw = static_cast<int>(std::lround(rng.uniform(0.4, 1.0) / res));
                const int rh = room.row1 - room.row0, rw = room.col1 - room.col0;
                if (fh + gap > rh || fw + gap > rw) continue;
                Rect f{};
                switch (rng.uniform_int(0, 3)) {
                    case 0: f.r0 = room.row0; f.c0 = rng.uniform_int(room.col0, room.col1 - fw); break;
                    case 1: f.r0 = room.row1 - fh; f.c0 = rng.uniform_int(room.col0, room.col1 - fw); break;
                    case 2: f.c0 = room.col0; f.r0 = rng.uniform_int(room.row0, room.row1 - fh); break;
                    default: f.c0 = room.col1 - fw; f.r0 = rng.uniform_int(room.row0, room.row1 - fh); break;
                }
                f.r1 = f.r0 + fh;
                f.c1 = f.c0 + fw;
                if (near_door(f, door_clear)) continue;
                bool clash = false;
                for (const auto& o : placed)
                    if (f.r0 < o.r1 + gap && o.r0 - gap < f.r1 && f.c0 < o.c1 + gap && o.c0 - gap < f.c1) clash = true;
                if (clash) continue;
                const bool tall = rng.bernoulli(0.4);
                OccupancyGrid trial = s.grid;
                fill(trial, f, CellState::Obstacle, tall);
                if (!free_space_connected(trial)) continue;
                s.grid = std::move(trial);
                placed.push_back(f);
                break;
            }
        }
    }

    // Objects on Free cells with some clearance, away from doorways.
    const Mask blocked = !s.grid.traversable().eval();
    const Raster<double> clearance = euclidean_distance_transform<double>(blocked);
    const double min_clear = 0.3 / res;
    auto pick_cell = [&](const Room& room) -> std::optional<GridIndex> {
        for (int attempt = 0; attempt < 64; ++attempt) {
            const GridIndex c{rng.uniform_int(room.row0, room.row1 - 1), rng.uniform_int(room.col0, room.col1 - 1)};
            if (!s.grid.is_free(c) || clearance(c.row, c.col) < min_clear) continue;
            if (near_door({c.row, c.col, c.row + 1, c.col + 1}, door_clear / 2)) continue;
            bool taken = false;
            for (const auto& o : s.objects)
                if (std::abs(o.cell.row - c.row) + std::abs(o.cell.col - c.col) < 4) taken = true;
            if (!taken) return c;
        }
        return std::nullopt;
    };
    for (const auto& room : s.rooms)
        for (const auto& obj : room_type(room.type).objects)
            if (rng.bernoulli(std::min(1.0, obj.probability * p.object_density)))
                if (auto c = pick_cell(room)) s.objects.push_back({obj.category, *c});

    // Target choice.
    std::vector<std::string> present;
    for (const auto& cat : target_categories())
        for (const auto& o : s.objects)
            if (o.category == cat) {
                present.push_back(cat);
                break;
            }
    if (!p.target_category.empty()) {
        s.target_category = p.target_category;
    } else if (p.target_absent) {
        s.target_category = target_categories()[rng.uniform_int(0, static_cast<int>(target_categories().size()) - 1)];
    } else if (!present.empty()) {
        s.target_category = present[rng.uniform_int(0, static_cast<int>(present.size()) - 1)];
    } else {
        s.target_category = "plant";
    }
    if (p.target_absent) {
        std::erase_if(s.objects, [&](const ObjectPlacement& o) { return o.category == s.target_category; });
        s.target_absent = true;
    } else if (s.target_cells().empty()) {
        for (int i = 0; i < static_cast<int>(s.rooms.size()) && s.target_cells().empty(); ++i)
            if (auto c = pick_cell(s.rooms[rng.uniform_int(0, static_cast<int>(s.rooms.size()) - 1)]))
                s.objects.push_back({s.target_category, *c});
        if (s.target_cells().empty()) throw GenerationError("could not place a target object");
    }

    // Start pose: clear of obstacles and away from every target.
    const auto targets = s.target_cells();
    for (int attempt = 0; attempt < 4096; ++attempt) {
        const Room& room = s.rooms[rng.uniform_int(0, static_cast<int>(s.rooms.size()) - 1)];
        const GridIndex c{rng.uniform_int(room.row0, room.row1 - 1), rng.uniform_int(room.col0, room.col1 - 1)};
        if (!s.grid.is_free(c) || clearance(c.row, c.col) < min_clear) continue;
        bool far = true;
        for (const auto& t : targets)
            if (std::hypot(t.row - c.row, t.col - c.col) * res < p.min_start_distance) far = false;
        if (!far && attempt < 4000) continue;
        s.start.position = grid_to_world(c, res);
        s.start.heading_deg = 30 * rng.uniform_int(0, 11);
        return s;
    }
    throw GenerationError("no valid start pose");
}

}  // namespace termnav
