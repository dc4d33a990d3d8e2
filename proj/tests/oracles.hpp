#pragma once

// Independent reference computations. Nothing here calls the library's
// evaluators or optimizers: norms are written out from their formulas and the
// searches are plain grids.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Norm = std::function<double(const Vec&)>;

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Frozen reference values, each derived by hand.
inline const double sqrt2 = std::sqrt(2.0);
// (3,4) in l^inf: the 2-core is l^2, the 4-core of l^inf = (l^inf)^2 is l^4,
// so ||(9,16)||_2^{1/2} = ||(3,4)||_4 = 337^{1/4}.
inline const double power_core_34 = std::pow(337.0, 0.25);
// sqrt(13) = ||(2,3)||_2.
inline const double derived_23 = std::sqrt(13.0);
// (sqrt3, 2) in L^2 of the identity measure into l^2: ||(3,4)||_2^{1/2}.
inline const double lpm_example = std::sqrt(5.0);

/// sum w_i |f_i|^p ^{1/p}, with sup over w_i > 0 for p = inf and 0*inf = 0.
inline double lp(const Vec& w, double p, const Vec& f) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (w[i] > 0.0)
                m = std::max(m, std::fabs(f[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0 || w[i] == 0.0)
            continue;
        if (std::isinf(w[i]))
            return inf;
        s += w[i] * std::pow(std::fabs(f[i]), p);
    }
    return std::pow(s, 1.0 / p);
}

/// Every way to write `total` as an ordered sum of `parts` nonnegative integers.
inline void compositions(int total, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int a = 0; a <= total; ++a) {
        cur.push_back(a);
        compositions(total - a, parts - 1, cur, out);
        cur.pop_back();
    }
}

/// sup (sum_j ||h_j||^q)^{1/q} over h_j = (c_ij/G)^{1/q} |f_i| with the c_ij a
/// composition of G for each atom: a grid over all q-decompositions of |f|
/// into `parts` pieces.
inline double core_grid(const Norm& norm, double q, const Vec& f, int parts, int grid) {
    const std::size_t n = f.size();
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(grid, parts, cur, comps);
    std::vector<std::size_t> idx(n, 0);
    double best = 0.0;
    while (true) {
        double acc = 0.0;
        for (int j = 0; j < parts; ++j) {
            Vec h(n);
            for (std::size_t i = 0; i < n; ++i)
                h[i] = std::pow(comps[idx[i]][j] / static_cast<double>(grid), 1.0 / q) * std::fabs(f[i]);
            acc += std::pow(norm(h), q);
        }
        best = std::max(best, std::pow(acc, 1.0 / q));
        std::size_t k = 0;
        while (k < n && ++idx[k] == comps.size())
            idx[k++] = 0;
        if (k == n)
            break;
    }
    return best;
}

/// min over f1 = t f, t_i on a grid of [lo, hi], of ||f1||_X + ||f - f1||_Y.
/// The range reaches outside [0,1] so the lattice reduction is itself tested.
inline double sum_grid(const Norm& nx, const Norm& ny, const Vec& f, int grid, double lo = -0.5, double hi = 1.5) {
    const std::size_t n = f.size();
    std::vector<int> idx(n, 0);
    double best = inf;
    Vec a(n), b(n);
    while (true) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = lo + (hi - lo) * idx[i] / static_cast<double>(grid);
            a[i] = t * f[i];
            b[i] = f[i] - a[i];
        }
        best = std::min(best, nx(a) + ny(b));
        std::size_t k = 0;
        while (k < n && ++idx[k] > grid)
            idx[k++] = 0;
        if (k == n)
            break;
    }
    return best;
}

inline double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

/// sup over the l^2 unit ball of sum_i |<x, w_i>|, for w_i in R^d (d <= 3) in
/// general position. The sup sits inside a cell of the arrangement of the
/// hyperplanes w_i^perp; every cell touches a vertex cut out by d-1 of them,
/// so the cells are reached from each such vertex by the 2^{d-1} sign choices
/// on its defining hyperplanes. On a cell with signs e the sup is
/// ||sum e_i w_i||_2.
inline double dual_ball_l2(const std::vector<Vec>& w, std::size_t d) {
    const std::size_t n = w.size();
    auto value_for = [&](const Vec& x, const std::vector<std::size_t>& ties, unsigned choice) {
        Vec s(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double sg;
            auto it = std::find(ties.begin(), ties.end(), i);
            if (it != ties.end())
                sg = ((choice >> (it - ties.begin())) & 1U) ? 1.0 : -1.0;
            else {
                double dot = 0.0;
                for (std::size_t k = 0; k < d; ++k)
                    dot += x[k] * w[i][k];
                sg = dot >= 0.0 ? 1.0 : -1.0;
            }
            for (std::size_t k = 0; k < d; ++k)
                s[k] += sg * w[i][k];
        }
        return norm2(s);
    };
    double best = 0.0;
    if (d == 1) {
        for (const auto& v : w)
            best += std::fabs(v[0]);
        return best;
    }
    if (d == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const Vec x = {-w[i][1], w[i][0]};
            for (unsigned c = 0; c < 2; ++c)
                best = std::max(best, value_for(x, {i}, c));
        }
        return best;
    }
    // A single hyperplane has no vertex; its two cells give +-w_0.
    if (n == 1)
        return norm2(w[0]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec x = {w[i][1] * w[j][2] - w[i][2] * w[j][1], w[i][2] * w[j][0] - w[i][0] * w[j][2],
                           w[i][0] * w[j][1] - w[i][1] * w[j][0]};
            for (unsigned c = 0; c < 4; ++c)
                best = std::max(best, value_for(x, {i, j}, c));
        }
    return best;
}

} // namespace oracle
