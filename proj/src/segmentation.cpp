#include "termnav/segmentation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace termnav {

const RegionInfo& RegionMap::region(int id) const {
    if (!has(id)) throw std::out_of_range("unknown region id " + std::to_string(id));
    return regions[id - 1];
}

RegionInfo& RegionMap::region(int id) {
    if (!has(id)) throw std::out_of_range("unknown region id " + std::to_string(id));
    return regions[id - 1];
}

Mask preprocess_walls(const WallMap& walls, double margin, bool hull_as_wall) {
    Mask sources = walls.blocked;
    if (hull_as_wall && sources.size() > 0) {
        sources.row(0).setConstant(true);
        sources.row(sources.rows() - 1).setConstant(true);
        sources.col(0).setConstant(true);
        sources.col(sources.cols() - 1).setConstant(true);
    }
    if (!sources.any()) return Mask::Constant(walls.blocked.rows(), walls.blocked.cols(), false);
    const Raster<double> d2 = squared_distance_transform<double>(sources);
    return d2 <= margin * margin;
}

namespace {

// Sliding max over a (2r+1)-wide window, separable.
Raster<double> window_max(const Raster<double>& d, int r) {
    const int rows = static_cast<int>(d.rows()), cols = static_cast<int>(d.cols());
    Raster<double> tmp(rows, cols), out(rows, cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double m = -std::numeric_limits<double>::infinity();
            for (int k = std::max(0, x - r); k <= std::min(cols - 1, x + r); ++k) m = std::max(m, d(y, k));
            tmp(y, x) = m;
        }
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double m = -std::numeric_limits<double>::infinity();
            for (int k = std::max(0, y - r); k <= std::min(rows - 1, y + r); ++k) m = std::max(m, tmp(k, x));
            out(y, x) = m;
        }
    return out;
}

// Fixed-point step costs keep path sums exact, so tie-breaking never
// depends on summation order.
constexpr double kCostScale = 1024.0;

std::int64_t step_cost(int k, double node_cost) {
    const double len = (kDr8[k] != 0 && kDc8[k] != 0) ? std::sqrt(2.0) : 1.0;
    return std::llround(len * node_cost * kCostScale);
}

}  // namespace

std::vector<GridIndex> detect_centers(const DistanceField& distance, double threshold, int neighborhood_radius) {
    const Raster<double> wmax = window_max(distance, std::max(0, neighborhood_radius));
    Mask candidate = (distance >= threshold) && (distance == wmax);
    LabelRaster comp;
    const int n = connected_components(candidate, comp);
    std::vector<double> sr(n + 1, 0.0), sc(n + 1, 0.0);
    std::vector<int> cnt(n + 1, 0);
    for (int r = 0; r < comp.rows(); ++r)
        for (int c = 0; c < comp.cols(); ++c)
            if (int l = comp(r, c)) {
                sr[l] += r;
                sc[l] += c;
                ++cnt[l];
            }
    std::vector<GridIndex> best(n + 1);
    std::vector<double> bestd(n + 1, std::numeric_limits<double>::infinity());
    for (int r = 0; r < comp.rows(); ++r)
        for (int c = 0; c < comp.cols(); ++c)
            if (int l = comp(r, c)) {
                const double dr = r - sr[l] / cnt[l], dc = c - sc[l] / cnt[l];
                const double d2 = dr * dr + dc * dc;
                if (d2 < bestd[l]) {
                    bestd[l] = d2;
                    best[l] = {r, c};
                }
            }
    std::vector<GridIndex> out(best.begin() + 1, best.end());
    std::sort(out.begin(), out.end());
    return out;
}

void refresh_region_info(RegionMap& rm) {
    int n = 0;
    for (int r = 0; r < rm.labels.rows(); ++r)
        for (int c = 0; c < rm.labels.cols(); ++c) n = std::max(n, rm.labels(r, c));
    std::vector<std::vector<ObjectSighting>> objects(n + 1);
    for (auto& info : rm.regions)
        if (info.id >= 1 && info.id <= n) objects[info.id] = std::move(info.objects);
    rm.regions.assign(n, RegionInfo{});
    std::vector<double> sr(n + 1, 0.0), sc(n + 1, 0.0);
    for (int r = 0; r < rm.labels.rows(); ++r) {
        for (int c = 0; c < rm.labels.cols(); ++c) {
            const int l = rm.labels(r, c);
            if (l == 0) continue;
            auto& info = rm.regions[l - 1];
            ++info.size;
            sr[l] += r;
            sc[l] += c;
            if (c + 1 < rm.labels.cols()) {
                const int o = rm.labels(r, c + 1);
                if (o != 0 && o != l) {
                    info.adjacent.insert(o);
                    rm.regions[o - 1].adjacent.insert(l);
                }
            }
            if (r + 1 < rm.labels.rows()) {
                const int o = rm.labels(r + 1, c);
                if (o != 0 && o != l) {
                    info.adjacent.insert(o);
                    rm.regions[o - 1].adjacent.insert(l);
                }
            }
        }
    }
    for (int l = 1; l <= n; ++l) {
        auto& info = rm.regions[l - 1];
        info.id = l;
        info.objects = std::move(objects[l]);
        if (info.size > 0)
            info.centroid = {static_cast<int>(std::lround(sr[l] / info.size)),
                             static_cast<int>(std::lround(sc[l] / info.size))};
    }
}

RegionMap watershed_segment(const DistanceField& distance, std::vector<GridIndex> seeds, const Mask& free_mask) {
    if (seeds.empty()) throw std::invalid_argument("watershed needs at least one seed");
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    for (const auto& s : seeds)
        if (!in_bounds(free_mask, s) || !free_mask(s.row, s.col))
            throw std::invalid_argument("watershed seed (" + std::to_string(s.row) + ", " + std::to_string(s.col) +
                                        ") is not on a free cell");

    const int rows = static_cast<int>(free_mask.rows()), cols = static_cast<int>(free_mask.cols());
    double max_d = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (free_mask(r, c)) max_d = std::max(max_d, distance(r, c));

    constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> cost(static_cast<size_t>(rows) * cols, inf);
    std::vector<int> label(static_cast<size_t>(rows) * cols, 0);
    std::vector<char> done(static_cast<size_t>(rows) * cols, 0);
    using Entry = std::tuple<std::int64_t, int, int>;  // cost, label, linear index
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (size_t i = 0; i < seeds.size(); ++i) {
        const int idx = linear_index(seeds[i], cols);
        cost[idx] = 0;
        label[idx] = static_cast<int>(i) + 1;
        heap.emplace(0, label[idx], idx);
    }
    while (!heap.empty()) {
        const auto [cst, lab, idx] = heap.top();
        heap.pop();
        if (done[idx] || cst != cost[idx] || lab != label[idx]) continue;
        done[idx] = 1;
        const int r = idx / cols, c = idx % cols;
        for (int k = 0; k < 8; ++k) {
            const int nr = r + kDr8[k], nc = c + kDc8[k];
            if (nr < 0 || nc < 0 || nr >= rows || nc >= cols || !free_mask(nr, nc)) continue;
            const int nidx = nr * cols + nc;
            if (done[nidx]) continue;
            const std::int64_t ncost = cst + step_cost(k, max_d - distance(nr, nc));
            if (ncost < cost[nidx] || (ncost == cost[nidx] && lab < label[nidx])) {
                cost[nidx] = ncost;
                label[nidx] = lab;
                heap.emplace(ncost, lab, nidx);
            }
        }
    }

    RegionMap rm;
    rm.labels = LabelRaster::Zero(rows, cols);
    for (int i = 0; i < rows * cols; ++i)
        if (done[i]) rm.labels(i / cols, i % cols) = label[i];
    rm.regions.resize(seeds.size());
    refresh_region_info(rm);
    return rm;
}

namespace {

void compact_ids(RegionMap& rm) {
    std::vector<int> remap(rm.regions.size() + 1, 0);
    std::vector<RegionInfo> kept;
    for (auto& info : rm.regions) {
        if (info.size == 0) continue;
        remap[info.id] = static_cast<int>(kept.size()) + 1;
        kept.push_back(std::move(info));
    }
    for (int r = 0; r < rm.labels.rows(); ++r)
        for (int c = 0; c < rm.labels.cols(); ++c) rm.labels(r, c) = remap[rm.labels(r, c)];
    for (auto& info : kept) info.id = remap[info.id];
    rm.regions = std::move(kept);
    refresh_region_info(rm);
}

}  // namespace

RegionMap merge_small_regions(RegionMap rm, int threshold) {
    refresh_region_info(rm);
    while (true) {
        int victim = 0;
        for (const auto& info : rm.regions) {
            if (info.size == 0 || info.size >= threshold || info.adjacent.empty()) continue;
            if (victim == 0 || info.size < rm.region(victim).size) victim = info.id;
        }
        if (victim == 0) break;
        int into = 0;
        for (int k : rm.region(victim).adjacent)
            if (into == 0 || rm.region(k).size > rm.region(into).size) into = k;
        for (int r = 0; r < rm.labels.rows(); ++r)
            for (int c = 0; c < rm.labels.cols(); ++c)
                if (rm.labels(r, c) == victim) rm.labels(r, c) = into;
        auto& moved = rm.region(victim).objects;
        auto& dest = rm.region(into).objects;
        dest.insert(dest.end(), moved.begin(), moved.end());
        moved.clear();
        refresh_region_info(rm);
    }
    compact_ids(rm);
    for (const auto& info : rm.regions)
        if (info.size < threshold)
            rm.warnings.push_back("region " + std::to_string(info.id) + " (size " + std::to_string(info.size) +
                                  ") is below the merge threshold and has no neighbour");
    return rm;
}

RegionMap segment_regions(const WallMap& walls, const OccupancyGrid& occ, const SegmentationParams& params) {
    const Mask domain = (occ.cells() == CellState::Free) || (occ.cells() == CellState::Unknown);
    if (!domain.any()) throw std::invalid_argument("segmentation: map has no free or unknown cells");

    const Mask band = preprocess_walls(walls, params.wall_margin, params.hull_as_wall);
    DistanceField dist = band.any() ? euclidean_distance_transform<double>(band)
                                    : DistanceField::Zero(domain.rows(), domain.cols());
    const DistanceField on_domain = domain.select(dist, DistanceField::Zero(dist.rows(), dist.cols()));

    std::vector<GridIndex> seeds = detect_centers(on_domain, params.center_threshold, params.neighborhood_radius);
    std::erase_if(seeds, [&](GridIndex s) { return !domain(s.row, s.col); });

    // Every connected piece of the domain needs a seed, otherwise it would
    // stay unlabeled. Unseeded pieces get one at their distance maximum.
    LabelRaster comp;
    const int ncomp = connected_components(domain, comp);
    std::vector<char> seeded(ncomp + 1, 0);
    for (const auto& s : seeds) seeded[comp(s.row, s.col)] = 1;
    std::vector<GridIndex> best(ncomp + 1);
    std::vector<double> bestd(ncomp + 1, -1.0);
    for (int r = 0; r < comp.rows(); ++r)
        for (int c = 0; c < comp.cols(); ++c)
            if (int l = comp(r, c); l != 0 && !seeded[l] && on_domain(r, c) > bestd[l]) {
                bestd[l] = on_domain(r, c);
                best[l] = {r, c};
            }
    for (int l = 1; l <= ncomp; ++l)
        if (!seeded[l]) seeds.push_back(best[l]);

    RegionMap rm = watershed_segment(dist, std::move(seeds), domain);
    return merge_small_regions(std::move(rm), params.merge_threshold);
}

std::vector<int> match_regions(const RegionMap& prev, const RegionMap& next) {
    std::map<std::pair<int, int>, int> overlap;  // (next, prev) -> cells
    const bool same_shape = prev.labels.rows() == next.labels.rows() && prev.labels.cols() == next.labels.cols();
    if (same_shape) {
        for (int r = 0; r < next.labels.rows(); ++r)
            for (int c = 0; c < next.labels.cols(); ++c) {
                const int a = next.labels(r, c), b = prev.labels(r, c);
                if (a != 0 && b != 0) ++overlap[{a, b}];
            }
    }
    std::vector<std::tuple<int, int, int>> pairs;  // -overlap, next, prev
    for (const auto& [key, n] : overlap) pairs.emplace_back(-n, key.first, key.second);
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> result(next.count() + 1, 0);
    std::vector<char> used(prev.count() + 1, 0);
    for (const auto& [neg, a, b] : pairs) {
        if (result[a] != 0 || used[b]) continue;
        result[a] = b;
        used[b] = 1;
    }
    result.erase(result.begin());
    return result;
}

LabelRaster canonical_labels(const LabelRaster& labels) {
    std::map<int, int> remap;
    LabelRaster out = LabelRaster::Zero(labels.rows(), labels.cols());
    for (int r = 0; r < labels.rows(); ++r)
        for (int c = 0; c < labels.cols(); ++c) {
            const int l = labels(r, c);
            if (l == 0) continue;
            auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()) + 1);
            out(r, c) = it->second;
        }
    return out;
}

std::string region_map_to_json(const RegionMap& rm) {
    nlohmann::json j;
    j["format"] = "termnav-regions";
    j["version"] = 1;
    j["width"] = rm.labels.cols();
    j["height"] = rm.labels.rows();
    auto& raster = j["labels"] = nlohmann::json::array();
    for (int r = 0; r < rm.labels.rows(); ++r) {
        std::vector<int> row(rm.labels.cols());
        for (int c = 0; c < rm.labels.cols(); ++c) row[c] = rm.labels(r, c);
        raster.push_back(row);
    }
    auto& table = j["regions"] = nlohmann::json::array();
    for (const auto& info : rm.regions) {
        nlohmann::json o;
        o["id"] = info.id;
        o["size"] = info.size;
        o["centroid"] = {info.centroid.row, info.centroid.col};
        o["adjacent"] = info.adjacent;
        auto& objs = o["objects"] = nlohmann::json::array();
        for (const auto& s : info.objects) objs.push_back({{"category", s.category}, {"cell", {s.cell.row, s.cell.col}}});
        table.push_back(std::move(o));
    }
    j["warnings"] = rm.warnings;
    return j.dump();
}

RegionMap region_map_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "termnav-regions") throw std::invalid_argument("not a region map document");
    RegionMap rm;
    const int w = j.at("width"), h = j.at("height");
    rm.labels = LabelRaster::Zero(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) rm.labels(r, c) = j.at("labels").at(r).at(c).get<int>();
    for (const auto& o : j.at("regions")) {
        RegionInfo info;
        info.id = o.at("id");
        info.size = o.at("size");
        info.centroid = {o.at("centroid").at(0).get<int>(), o.at("centroid").at(1).get<int>()};
        for (int a : o.at("adjacent")) info.adjacent.insert(a);
        for (const auto& s : o.at("objects"))
            info.objects.push_back({s.at("category"), {s.at("cell").at(0).get<int>(), s.at("cell").at(1).get<int>()}});
        rm.regions.push_back(std::move(info));
    }
    rm.warnings = j.value("warnings", std::vector<std::string>{});
    return rm;
}

void write_region_ppm(std::ostream& os, const RegionMap& rm) {
    os << "P6\n" << rm.labels.cols() << ' ' << rm.labels.rows() << "\n255\n";
    for (int r = 0; r < rm.labels.rows(); ++r)
        for (int c = 0; c < rm.labels.cols(); ++c) {
            const auto l = static_cast<std::uint32_t>(rm.labels(r, c));
            unsigned char rgb[3] = {0, 0, 0};
            if (l != 0) {
                std::uint32_t h = l * 2654435761u;
                rgb[0] = static_cast<unsigned char>(64 + (h & 0x7f));
                rgb[1] = static_cast<unsigned char>(64 + ((h >> 8) & 0x7f));
                rgb[2] = static_cast<unsigned char>(64 + ((h >> 16) & 0x7f));
            }
            os.write(reinterpret_cast<const char*>(rgb), 3);
        }
}

}  // namespace termnav
