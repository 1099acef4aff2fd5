#include "termnav/harness.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace termnav {

namespace {

double t_cdf(double t, double df) {
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

MeanCI mean_ci(std::span<const double> xs) {
    MeanCI out;
    out.n = static_cast<int>(xs.size());
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / out.n;
    if (out.n < 2) return out;
    double ss = 0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    const double sd = std::sqrt(ss / (out.n - 1));
    const boost::math::students_t_distribution<double> dist(out.n - 1);
    out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(out.n);
    return out;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: samples differ in size");
    if (a.size() < 2) throw std::invalid_argument("paired_t_test: needs at least two pairs");
    const int n = static_cast<int>(a.size());
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];
    PairedTest out;
    out.df = n - 1;
    out.mean_difference = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0;
    for (double x : d) ss += (x - out.mean_difference) * (x - out.mean_difference);
    const double se = std::sqrt(ss / (n - 1)) / std::sqrt(n);
    if (se == 0) {
        out.t = out.mean_difference == 0 ? 0.0
                                         : std::copysign(std::numeric_limits<double>::infinity(), out.mean_difference);
    } else {
        out.t = out.mean_difference / se;
    }
    out.p_greater = 1.0 - t_cdf(out.t, out.df);
    out.p_two_sided = out.t == 0 ? 1.0 : 2.0 * std::min(t_cdf(out.t, out.df), 1.0 - t_cdf(out.t, out.df));
    return out;
}

RankCorrelation spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: samples differ in size");
    RankCorrelation out;
    out.n = static_cast<int>(x.size());
    if (out.n < 3) return out;
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / out.n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / out.n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < out.n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return out;
    out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (out.n <= 9) {
        // small n: exact permutation null over y's ranks, the t approximation is poor here
        std::vector<double> perm = ry;
        std::sort(perm.begin(), perm.end());
        const double eps = 1e-9 * sxx;
        long total = 0, le = 0, extreme = 0;
        do {
            double s = 0;
            for (int i = 0; i < out.n; ++i) s += (rx[i] - mx) * (perm[i] - my);
            ++total;
            if (s <= sxy + eps) ++le;
            if (std::abs(s) >= std::abs(sxy) - eps) ++extreme;
        } while (std::next_permutation(perm.begin(), perm.end()));
        out.p_less = static_cast<double>(le) / total;
        out.p_two_sided = static_cast<double>(extreme) / total;
        return out;
    }
    const int df = out.n - 2;
    const double t = std::abs(out.rho) == 1.0
                         ? std::copysign(std::numeric_limits<double>::infinity(), out.rho)
                         : out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
    out.p_less = t_cdf(t, df);
    out.p_two_sided = 2.0 * std::min(out.p_less, 1.0 - out.p_less);
    return out;
}

}  // namespace termnav
