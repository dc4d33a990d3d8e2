#pragma once

// Search budgets and the small derivative-free toolkit shared by the norm
// optimizers and the constant estimators: simplex/box/sphere projections and
// a projected ascent with central-difference gradients.

#include "latticelab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace latticelab {

/// Search budget. Every stochastic search is deterministic given this struct.
struct Budget {
    std::size_t restarts = 32;
    /// Cap on family size / number of parts; 0 selects max(4, 2n).
    std::size_t k_max = 0;
    /// Grid resolution for exhaustive oracles (step 1/grid).
    std::size_t grid = 40;
    std::uint64_t seed = 0;
    std::size_t max_iters = 200;
    double stabilization_tol = 1e-4;
    double grad_step = 1e-5;
    /// Refine sum-norm splits to rounding level after the descent. Nested
    /// searches switch it off.
    bool polish = true;

    std::size_t parts_cap(std::size_t n) const { return k_max != 0 ? k_max : std::max<std::size_t>(4, 2 * n); }
};

/// Relative tolerance for optimizer-mediated equalities.
inline constexpr double opt_tol = 1e-3;

/// splitmix64 step; used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Euclidean projection of `v` onto the probability simplex.
inline void project_simplex(std::span<double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0)
            theta = t;
    }
    for (auto& x : v)
        x = std::max(x - theta, 0.0);
}

/// Random point of the simplex, uniform (Dirichlet(1,...,1)).
inline void random_simplex(std::span<double> v, Rng& rng) {
    std::exponential_distribution<double> e(1.0);
    double s = 0.0;
    for (auto& x : v) {
        x = e(rng);
        s += x;
    }
    for (auto& x : v)
        x /= s;
}

inline void normalize_l2(std::span<double> v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    s = std::sqrt(s);
    if (s > 0.0)
        for (auto& x : v)
            x /= s;
}

struct AscentResult {
    std::vector<double> x;
    double value = -inf;
    std::size_t iterations = 0;
};

/// Projected gradient ascent on `objective` from `x0`. `project` maps a point
/// back into the feasible set. Gradients are central differences of step
/// `h`; a non-finite side falls back to the one-sided quotient, two
/// non-finite sides zero the component. Steps are accepted only on strict
/// improvement, so the returned value is the best feasible point visited.
template <class Objective, class Project>
AscentResult projected_ascent(Objective&& objective, std::vector<double> x0, Project&& project,
                              std::size_t max_iters, double h) {
    AscentResult res;
    project(std::span<double>(x0));
    res.x = std::move(x0);
    res.value = objective(std::span<const double>(res.x));
    if (!std::isfinite(res.value))
        return res;
    const std::size_t d = res.x.size();
    std::vector<double> grad(d), trial(d), probe(res.x);
    double step = 0.25;
    std::size_t stalls = 0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        res.iterations = it + 1;
        double gnorm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double orig = probe[i];
            probe[i] = orig + h;
            const double up = objective(std::span<const double>(probe));
            probe[i] = orig - h;
            const double down = objective(std::span<const double>(probe));
            probe[i] = orig;
            const bool fu = std::isfinite(up), fd = std::isfinite(down);
            if (fu && fd)
                grad[i] = (up - down) / (2.0 * h);
            else if (fu)
                grad[i] = (up - res.value) / h;
            else if (fd)
                grad[i] = (res.value - down) / h;
            else
                grad[i] = 0.0;
            gnorm += grad[i] * grad[i];
        }
        gnorm = std::sqrt(gnorm);
        if (gnorm < 1e-14)
            break;
        bool accepted = false;
        while (step > 1e-12) {
            for (std::size_t i = 0; i < d; ++i)
                trial[i] = res.x[i] + step * grad[i] / gnorm;
            project(std::span<double>(trial));
            const double v = objective(std::span<const double>(trial));
            if (std::isfinite(v) && v > res.value) {
                const double gain = (v - res.value) / std::max(std::fabs(res.value), 1e-300);
                res.x = trial;
                probe = trial;
                res.value = v;
                accepted = true;
                step = std::min(step * 1.5, 1.0);
                stalls = gain < 1e-10 ? stalls + 1 : 0;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || stalls >= 5)
            break;
    }
    return res;
}

/// Minimization counterpart: ascent on the negated objective.
template <class Objective, class Project>
AscentResult projected_descent(Objective&& objective, std::vector<double> x0, Project&& project,
                               std::size_t max_iters, double h) {
    auto neg = [&](std::span<const double> x) {
        const double v = objective(x);
        return std::isnan(v) ? -inf : -v;
    };
    auto r = projected_ascent(neg, std::move(x0), project, max_iters, h);
    r.value = -r.value;
    return r;
}

} // namespace latticelab
