#pragma once

// Witness-certified lower bounds for q-concavity, p-convexity and
// (p,q)-power-concavity constants, plus an exhaustive grid oracle for tiny
// instances.
//
// All three constants are suprema of a ratio over finite families
// (f_j)_{j<=k}. The ratio is homogeneous of degree 0 in the whole family, so
// the search runs on the unit sphere of R^{k n} (the nonnegative part of it
// when signs cannot matter) with projected gradient ascent, escalating k
// until the best value stabilizes. Every reported bound is the ratio of a
// stored family, recomputed from that family.

#include "latticelab/operator.hpp"
#include "latticelab/optimize.hpp"
#include "latticelab/space.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace latticelab {

enum class WitnessKind { Concavity, Convexity, PowerConcavity };

inline const char* to_string(WitnessKind k) {
    switch (k) {
    case WitnessKind::Concavity:
        return "concavity";
    case WitnessKind::Convexity:
        return "convexity";
    case WitnessKind::PowerConcavity:
        return "power-concavity";
    }
    return "?";
}

struct Witness {
    std::vector<FnVec> family;
    double reported_ratio = 0.0;
    WitnessKind kind = WitnessKind::Concavity;
};

struct ConstantEstimate {
    /// Certified by `witness`.
    double lower_bound = 0.0;
    Witness witness;
    /// A classical closed form applies and the search matched it within 2%.
    bool exact = false;
    std::optional<double> closed_form;
    /// A family with zero denominator and positive numerator was found, or
    /// the ratio exceeded 1e12: the constant is infinite.
    bool divergent = false;
    std::vector<std::string> trace;
    /// Best ratio per family size.
    std::vector<std::pair<std::size_t, double>> k_trace;
};

/// Numerator and denominator of a defining ratio.
struct RatioParts {
    double num = 0.0;
    double den = 0.0;

    double ratio() const {
        if (den == 0.0)
            return num == 0.0 ? 0.0 : inf;
        if (std::isinf(den))
            return 0.0;
        return num / den;
    }
};

namespace detail {

inline double lq_sum(std::span<const double> values, double q) {
    double acc = 0.0;
    for (double v : values)
        acc += std::pow(v, q);
    return std::pow(acc, 1.0 / q);
}

inline void check_exponent(double e, const char* what) {
    if (!(e > 0.0) || std::isinf(e))
        throw DomainError(std::string(what) + " must lie in (0, inf)");
}

inline Budget inner_budget(const Budget& b) {
    Budget inner = b;
    inner.restarts = std::min<std::size_t>(b.restarts, 4);
    inner.max_iters = std::min<std::size_t>(b.max_iters, 60);
    inner.grid = std::min<std::size_t>(b.grid, 16);
    inner.polish = false;
    return inner;
}

} // namespace detail

/// (sum ||T f_j||^q)^{1/q} over || (sum |f_j|^q)^{1/q} ||_X.
inline RatioParts concavity_ratio(const Operator& t, double q, const std::vector<FnVec>& family,
                                  const Budget& budget = {}) {
    std::vector<double> norms;
    norms.reserve(family.size());
    for (const auto& f : family)
        norms.push_back(t.apply_norm(f));
    return {detail::lq_sum(norms, q), eval_norm(t.domain(), q_sum(family, q, t.cols()), budget)};
}

/// || (sum |f_j|^p)^{1/p} ||_X over (sum ||f_j||_X^p)^{1/p}.
inline RatioParts convexity_ratio(const SpaceExpr& x, double p, const std::vector<FnVec>& family,
                                  const Budget& budget = {}) {
    std::vector<double> norms;
    norms.reserve(family.size());
    for (const auto& f : family)
        norms.push_back(eval_norm(x, f, budget));
    return {eval_norm(x, q_sum(family, p, x.atoms()), budget), detail::lq_sum(norms, p)};
}

/// The space X^{1/p} + X measuring the right side of (p,q)-power-concavity.
inline SpaceExpr power_sum_domain(const SpaceExpr& x, double p) {
    return SpaceExpr::sum(simplify(SpaceExpr::power(x, 1.0 / p)), x);
}

/// (sum ||T f_j||^{q/p})^{p/q} over || (sum |f_j|^{q/p})^{p/q} ||_{X^{1/p}+X}.
inline RatioParts power_concavity_ratio(const Operator& t, double p, double q, const std::vector<FnVec>& family,
                                        const Budget& budget = {}) {
    if (p == 1.0)
        return concavity_ratio(t, q, family, budget);
    const double r = q / p;
    std::vector<double> norms;
    for (const auto& f : family)
        norms.push_back(t.apply_norm(f));
    const FnVec h = q_sum(family, r, t.cols());
    return {detail::lq_sum(norms, r), eval_norm(power_sum_domain(t.domain(), p), h, budget)};
}

namespace detail {

using FamilyRatio = std::function<RatioParts(const std::vector<FnVec>&)>;

inline std::vector<FnVec> unflatten(std::span<const double> x, std::size_t k, std::size_t n) {
    std::vector<FnVec> fam(k, FnVec(n));
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i)
            fam[j][i] = x[j * n + i];
    return fam;
}

inline std::vector<FnVec> drop_zero(std::vector<FnVec> fam) {
    std::erase_if(fam, [](const FnVec& f) {
        for (double v : f)
            if (v != 0.0)
                return false;
        return true;
    });
    return fam;
}

/// Multistart sphere ascent on a family ratio with escalation in k.
inline ConstantEstimate search_families(const FamilyRatio& ratio, std::size_t n, WitnessKind kind, bool signed_search,
                                        const Budget& budget, const std::vector<std::vector<FnVec>>& seeds) {
    ConstantEstimate est;
    est.witness.kind = kind;
    const std::size_t k_max = budget.parts_cap(n);
    std::vector<double> best_x;
    std::size_t best_k = 0;
    double best = -inf;

    auto objective_for = [&](std::size_t k) {
        return [&, k](std::span<const double> x) {
            const auto parts = ratio(unflatten(x, k, n));
            const double r = parts.ratio();
            if (std::isinf(r) || r > 1e12) {
                if (!est.divergent) {
                    est.divergent = true;
                    est.trace.push_back("unbounded ratio at family size " + std::to_string(k) +
                                        " (numerator " + std::to_string(parts.num) + ", denominator " +
                                        std::to_string(parts.den) + ")");
                    est.witness.family = drop_zero(unflatten(x, k, n));
                }
                return -inf;
            }
            return r;
        };
    };
    auto project = [signed_search](std::span<double> x) {
        if (!signed_search)
            for (auto& v : x)
                v = std::max(v, 0.0);
        normalize_l2(x);
    };

    for (std::size_t k = 1; k <= k_max; ++k) {
        auto obj = objective_for(k);
        Rng rng(mix_seed(budget.seed, 77 + k));
        std::vector<std::vector<double>> starts;
        if (best_k > 0) {
            std::vector<double> x(k * n, 0.0);
            std::copy(best_x.begin(), best_x.end(), x.begin());
            // Give the new member a small share so the ascent can grow it.
            for (std::size_t i = 0; i < n; ++i)
                x[(k - 1) * n + i] = 1e-3;
            starts.push_back(std::move(x));
        }
        if (k == n) {
            std::vector<double> x(k * n, 0.0);
            for (std::size_t j = 0; j < k; ++j)
                x[j * n + j] = 1.0;
            starts.push_back(std::move(x));
        }
        {
            std::vector<double> x(k * n, 1.0);
            starts.push_back(std::move(x));
        }
        for (const auto& fam : seeds) {
            if (fam.size() != k)
                continue;
            std::vector<double> x;
            for (const auto& f : fam)
                x.insert(x.end(), f.begin(), f.end());
            starts.push_back(std::move(x));
        }
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t rs = 0; rs < budget.restarts; ++rs) {
            std::vector<double> x(k * n);
            const bool sparse = rs % 3 == 2;
            for (auto& v : x) {
                v = gauss(rng);
                if (!signed_search)
                    v = std::fabs(v);
                if (sparse && uniform01(rng) < 0.5)
                    v = 0.0;
            }
            starts.push_back(std::move(x));
        }

        double k_best = -inf;
        std::vector<double> k_x;
        for (auto& st : starts) {
            // Seeds are scored as given before any ascent.
            std::vector<double> s0 = st;
            project(s0);
            const double v0 = obj(s0);
            if (v0 > k_best) {
                k_best = v0;
                k_x = s0;
            }
            auto res = projected_ascent(obj, st, project, budget.max_iters, budget.grad_step);
            if (res.value > k_best) {
                k_best = res.value;
                k_x = res.x;
            }
        }
        if (est.divergent)
            break;
        est.k_trace.emplace_back(k, k_best);
        const double prev = best;
        if (k_best > best) {
            best = k_best;
            best_x = k_x;
            best_k = k;
        }
        const double gain = prev > 0.0 ? (best - prev) / prev : (best > 0.0 ? 1.0 : 0.0);
        if (k >= std::min(n, k_max) && k >= 2 && gain < budget.stabilization_tol)
            break;
    }

    if (!est.divergent) {
        if (best_k > 0)
            est.witness.family = drop_zero(unflatten(best_x, best_k, n));
        est.witness.reported_ratio = est.witness.family.empty() ? 0.0 : ratio(est.witness.family).ratio();
        // Seeds of sizes the escalation never reached still count.
        for (const auto& fam : seeds) {
            const auto f = drop_zero(fam);
            if (f.empty())
                continue;
            const auto parts = ratio(f);
            const double r = parts.ratio();
            if (std::isinf(r) || r > 1e12) {
                est.divergent = true;
                est.trace.push_back("seed family of size " + std::to_string(f.size()) + " has an unbounded ratio");
                est.witness.family = f;
                break;
            }
            if (r > est.witness.reported_ratio) {
                est.witness.family = f;
                est.witness.reported_ratio = r;
            }
        }
    }
    if (est.divergent) {
        est.lower_bound = inf;
        est.witness.reported_ratio = inf;
        return est;
    }
    est.lower_bound = est.witness.reported_ratio;
    return est;
}

/// Atoms carrying finite positive mass for an l^p leaf.
inline std::size_t effective_atoms(const SpaceExpr& leaf) {
    std::size_t count = 0;
    const auto w = leaf.leaf_weights();
    for (std::size_t i = 0; i < leaf.atoms(); ++i) {
        if (leaf.space().null_atom(i) || w[i] == 0.0)
            continue;
        if (std::isinf(w[i]) && !std::isinf(leaf.exponent()))
            continue;
        ++count;
    }
    return count;
}

/// Classical constant of l^s_N: r-concavity is N^{1/r - 1/s} for r < s, else 1.
inline double leaf_concavity(double s, double r, std::size_t atoms) {
    if (atoms == 0)
        return 0.0;
    const double inv_s = std::isinf(s) ? 0.0 : 1.0 / s;
    return r >= s ? 1.0 : std::pow(static_cast<double>(atoms), 1.0 / r - inv_s);
}

/// Closed-form q-concavity constant when T is the identity on an l^p leaf
/// with the leaf's own norm on the codomain.
inline std::optional<double> concavity_closed_form(const Operator& t, double q) {
    if (!t.is_identity_matrix())
        return std::nullopt;
    const SpaceExpr leaf = simplify(t.domain());
    if (leaf.kind() != SpaceExpr::Kind::Lp)
        return std::nullopt;
    bool same_norm = t.is_space_identity();
    if (!same_norm && t.codomain().is_lp() && t.codomain().s() == leaf.exponent()) {
        same_norm = true;
        const auto w = leaf.leaf_weights();
        for (std::size_t i = 0; i < leaf.atoms(); ++i)
            if (!leaf.space().null_atom(i) && w[i] != 1.0 && !(std::isinf(leaf.exponent()) && w[i] > 0.0))
                same_norm = false;
    }
    if (!same_norm)
        return std::nullopt;
    return leaf_concavity(leaf.exponent(), q, effective_atoms(leaf));
}

inline void apply_closed_form(ConstantEstimate& est, std::optional<double> closed) {
    est.closed_form = closed;
    if (closed && !est.divergent) {
        const double c = *closed;
        est.exact = c == 0.0 ? est.lower_bound == 0.0 : std::fabs(est.lower_bound - c) <= 0.02 * c;
    }
}

} // namespace detail

/// Lower bound for the q-concavity constant of T.
inline ConstantEstimate concavity_constant(const Operator& t, double q, const Budget& budget = {},
                                           const std::vector<std::vector<FnVec>>& seeds = {}) {
    detail::check_exponent(q, "concavity exponent q");
    if (t.zero()) {
        ConstantEstimate est;
        est.witness.kind = WitnessKind::Concavity;
        est.closed_form = 0.0;
        est.exact = true;
        return est;
    }
    const Budget inner = detail::inner_budget(budget);
    detail::FamilyRatio ratio = [&](const std::vector<FnVec>& fam) { return concavity_ratio(t, q, fam, inner); };
    const bool signed_search = !(t.nonnegative() && t.codomain().lattice());
    auto est = detail::search_families(ratio, t.cols(), WitnessKind::Concavity, signed_search, budget, seeds);
    detail::apply_closed_form(est, detail::concavity_closed_form(t, q));
    return est;
}

/// Lower bound for the p-convexity constant M^{(p)} of X.
inline ConstantEstimate convexity_constant(const SpaceExpr& x, double p, const Budget& budget = {},
                                           const std::vector<std::vector<FnVec>>& seeds = {}) {
    detail::check_exponent(p, "convexity exponent p");
    const Budget inner = detail::inner_budget(budget);
    detail::FamilyRatio ratio = [&](const std::vector<FnVec>& fam) { return convexity_ratio(x, p, fam, inner); };
    auto est = detail::search_families(ratio, x.atoms(), WitnessKind::Convexity, false, budget, seeds);
    const SpaceExpr leaf = simplify(x);
    if (leaf.kind() == SpaceExpr::Kind::Lp) {
        // Reverse inequality of the concavity case: p-convexity of l^s_N is N^{1/s - 1/p} for p > s.
        const std::size_t atoms = detail::effective_atoms(leaf);
        const double s = leaf.exponent();
        const double c = atoms == 0 ? 0.0 : (p <= s ? 1.0 : std::pow(static_cast<double>(atoms), 1.0 / s - 1.0 / p));
        detail::apply_closed_form(est, c);
    }
    return est;
}

/// Lower bound for the (p,q)-power-concavity constant of T. For p = 1 this is
/// the q-concavity constant.
inline ConstantEstimate power_concavity_constant(const Operator& t, double p, double q, const Budget& budget = {},
                                                 const std::vector<std::vector<FnVec>>& seeds = {}) {
    detail::check_exponent(p, "power exponent p");
    detail::check_exponent(q, "concavity exponent q");
    if (p == 1.0) {
        auto est = concavity_constant(t, q, budget, seeds);
        est.witness.kind = WitnessKind::PowerConcavity;
        return est;
    }
    if (t.zero()) {
        ConstantEstimate est;
        est.witness.kind = WitnessKind::PowerConcavity;
        est.closed_form = 0.0;
        est.exact = true;
        return est;
    }
    const Budget inner = detail::inner_budget(budget);
    const SpaceExpr denominator = power_sum_domain(t.domain(), p);
    const double r = q / p;
    detail::FamilyRatio ratio = [&](const std::vector<FnVec>& fam) {
        std::vector<double> norms;
        for (const auto& f : fam)
            norms.push_back(t.apply_norm(f));
        return RatioParts{detail::lq_sum(norms, r), eval_norm(denominator, q_sum(fam, r, t.cols()), inner)};
    };
    const bool signed_search = !(t.nonnegative() && t.codomain().lattice());
    return detail::search_families(ratio, t.cols(), WitnessKind::PowerConcavity, signed_search, budget, seeds);
}

/// Recompute the defining ratio of a witness.
inline double replay(const Witness& w, const Operator& t, double q, const Budget& budget = {}) {
    return concavity_ratio(t, q, w.family, detail::inner_budget(budget)).ratio();
}
inline double replay(const Witness& w, const SpaceExpr& x, double p, const Budget& budget = {}) {
    return convexity_ratio(x, p, w.family, detail::inner_budget(budget)).ratio();
}
inline double replay_power(const Witness& w, const Operator& t, double p, double q, const Budget& budget = {}) {
    return power_concavity_ratio(t, p, q, w.family, detail::inner_budget(budget)).ratio();
}

/// Which constant an oracle run computes.
enum class OracleKind { Concavity, Convexity, PowerConcavity };

struct OracleInstance {
    OracleKind kind = OracleKind::Concavity;
    /// Operator for concavity kinds; its domain for convexity.
    std::optional<Operator> op;
    std::optional<SpaceExpr> space;
    double exponent = 1.0;
    /// p of (p,q)-power-concavity.
    double power = 1.0;
    std::size_t k_max = 3;
    std::size_t grid = 40;
    /// Budget on ratio evaluations.
    double max_evals = 2e7;
};

/// Exhaustive grid search over families of at most k_max functions whose
/// coordinates lie on the grid {0, 1/G, ..., 1} (or {-1, ..., 1} when signs
/// matter). Only for n <= 3 atoms, k_max <= 3 and codomain dimension <= 3.
inline double oracle_constant(const OracleInstance& inst) {
    const std::size_t n = inst.kind == OracleKind::Convexity ? inst.space.value().atoms() : inst.op.value().cols();
    if (n > 3 || inst.k_max > 3 || inst.k_max == 0)
        throw DimensionError("instance too large for the oracle: needs n <= 3 atoms and families of size <= 3");
    if (inst.op && inst.op->rows() > 3)
        throw DimensionError("instance too large for the oracle: codomain dimension exceeds 3");
    if (inst.op && inst.op->zero())
        return 0.0;
    const bool signed_grid = inst.kind != OracleKind::Convexity &&
                             !(inst.op->nonnegative() && inst.op->codomain().lattice());
    const std::size_t g = inst.grid;
    const std::size_t per_coord = signed_grid ? 2 * g + 1 : g + 1;
    std::size_t points = 1;
    for (std::size_t i = 0; i < n; ++i)
        points *= per_coord;
    --points; // the zero function never helps
    double evals = 0.0;
    for (std::size_t k = 1; k <= inst.k_max; ++k) {
        double c = 1.0;
        for (std::size_t j = 0; j < k; ++j)
            c = c * static_cast<double>(points + j) / static_cast<double>(j + 1);
        evals += c;
    }
    if (evals > inst.max_evals)
        throw DimensionError("instance too large for the oracle budget (" + std::to_string(evals) + " families)");

    std::vector<FnVec> grid_points;
    grid_points.reserve(points);
    for (std::size_t code = 0; code <= points; ++code) {
        FnVec f(n);
        std::size_t c = code;
        bool zero = true;
        for (std::size_t i = 0; i < n; ++i) {
            const auto digit = static_cast<double>(c % per_coord);
            c /= per_coord;
            f[i] = signed_grid ? (digit - static_cast<double>(g)) / static_cast<double>(g) : digit / static_cast<double>(g);
            zero = zero && f[i] == 0.0;
        }
        if (!zero)
            grid_points.push_back(std::move(f));
    }

    Budget quiet;
    quiet.restarts = 2;
    quiet.max_iters = 40;
    auto score = [&](const std::vector<FnVec>& fam) {
        switch (inst.kind) {
        case OracleKind::Concavity:
            return concavity_ratio(*inst.op, inst.exponent, fam, quiet).ratio();
        case OracleKind::Convexity:
            return convexity_ratio(*inst.space, inst.exponent, fam, quiet).ratio();
        case OracleKind::PowerConcavity:
            return power_concavity_ratio(*inst.op, inst.power, inst.exponent, fam, quiet).ratio();
        }
        return 0.0;
    };

    double best = 0.0;
    std::vector<FnVec> fam;
    // Multisets of grid points, as nondecreasing index tuples.
    for (std::size_t k = 1; k <= inst.k_max; ++k) {
        std::vector<std::size_t> idx(k, 0);
        while (true) {
            fam.clear();
            for (auto i : idx)
                fam.push_back(grid_points[i]);
            const double v = score(fam);
            if (std::isfinite(v))
                best = std::max(best, v);
            std::size_t pos = k;
            while (pos > 0 && idx[pos - 1] + 1 >= grid_points.size())
                --pos;
            if (pos == 0)
                break;
            ++idx[pos - 1];
            for (std::size_t j = pos; j < k; ++j)
                idx[j] = idx[pos - 1];
        }
    }
    return best;
}

} // namespace latticelab
