#pragma once

#include "termnav/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace termnav {

template <typename Scalar>
using DistanceFieldT = Raster<Scalar>;
using DistanceField = DistanceFieldT<double>;

namespace detail {

// Lower envelope of parabolas, 1D squared distance transform (Felzenszwalb &
// Huttenlocher). `f` holds squared distances (inf for no source).
template <typename Scalar>
void squared_dt_1d(const Scalar* f, Scalar* d, int n, std::vector<int>& v, std::vector<Scalar>& z) {
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    v.resize(n);
    z.resize(n + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        Scalar s;
        while (true) {
            const int p = v[k];
            s = ((f[q] + Scalar(q) * q) - (f[p] + Scalar(p) * p)) / (Scalar(2) * (q - p));
            if (s <= z[k]) {
                if (--k < 0) break;
            } else {
                break;
            }
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    if (k < 0) {
        std::fill(d, d + n, inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const Scalar diff = Scalar(q - v[j]);
        d[q] = diff * diff + f[v[j]];
    }
}

}  // namespace detail

/// Exact squared Euclidean distance (in cells) from every cell to the nearest
/// source cell. Two separable passes, columns then rows.
template <typename Scalar = double>
Raster<Scalar> squared_distance_transform(const Mask& sources) {
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    const int rows = static_cast<int>(sources.rows());
    const int cols = static_cast<int>(sources.cols());
    if (!sources.any()) throw std::invalid_argument("distance transform needs at least one source cell");

    Raster<Scalar> f(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) f(r, c) = sources(r, c) ? Scalar(0) : inf;

    std::vector<int> v;
    std::vector<Scalar> z;
    std::vector<Scalar> in(std::max(rows, cols)), out(std::max(rows, cols));
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) in[r] = f(r, c);
        detail::squared_dt_1d(in.data(), out.data(), rows, v, z);
        for (int r = 0; r < rows; ++r) f(r, c) = out[r];
    }
    for (int r = 0; r < rows; ++r) {
        Scalar* row = f.data() + static_cast<std::ptrdiff_t>(r) * cols;
        std::copy(row, row + cols, in.begin());
        detail::squared_dt_1d(in.data(), row, cols, v, z);
    }
    return f;
}

/// Exact Euclidean distance transform; zero exactly on source cells.
/// Throws std::invalid_argument when there is no source.
template <typename Scalar = double>
DistanceFieldT<Scalar> euclidean_distance_transform(const Mask& sources) {
    return squared_distance_transform<Scalar>(sources).sqrt();
}

}  // namespace termnav
