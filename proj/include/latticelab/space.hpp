#pragma once

// Expression algebra of lattice quasi-norms over a finite atomic measure space.
//
// Leaves are weighted l^p spaces; combinators build p-powers, sums,
// intersections, q-concave cores and the spaces L^1(m), L^p(m) of a vector
// measure. Each node caches whether it is normed and an upper bound K on its
// quasi-triangle modulus ||x+y|| <= K(||x|| + ||y||).
//
// The sum norm and the core norm are optimization problems. `sum_norm`
// returns an upper bound on the infimum with a witnessing split; `core_norm`
// returns a lower bound on the supremum with a witnessing decomposition.

#include "latticelab/measure.hpp"
#include "latticelab/optimize.hpp"
#include "latticelab/vector_measure.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace latticelab {

class SpaceExpr {
  public:
    enum class Kind { Lp, Power, Sum, Intersection, Core, L1m, Lpm };

    /// Weighted l^p(mu) leaf, p in (0, inf]. `weights` overrides the atom
    /// masses in the norm formula; null atoms of the space stay null.
    static SpaceExpr lp(std::shared_ptr<const MeasureSpace> space, double p,
                        std::optional<std::vector<double>> weights = std::nullopt) {
        if (!space)
            throw DomainError("missing measure space");
        if (!(p > 0.0))
            throw DomainError("l^p leaf needs p in (0, inf]");
        if (weights) {
            if (weights->size() != space->size())
                throw DimensionError("weight override has wrong length");
            for (double w : *weights)
                if (std::isnan(w) || w < 0.0)
                    throw DomainError("weights must be nonnegative");
        }
        auto n = std::make_shared<Node>();
        n->kind = Kind::Lp;
        n->space = std::move(space);
        n->exponent = p;
        n->weights = std::move(weights);
        n->normed = p >= 1.0;
        n->modulus = p >= 1.0 ? 1.0 : std::pow(2.0, 1.0 / p - 1.0);
        return SpaceExpr(std::move(n));
    }

    /// X^p, normed by || |f|^p ||_X^{1/p}, p in (0, inf).
    static SpaceExpr power(SpaceExpr base, double p) {
        if (!(p > 0.0) || std::isinf(p))
            throw DomainError("power exponent must lie in (0, inf)");
        auto n = std::make_shared<Node>();
        n->kind = Kind::Power;
        n->space = base.node_->space;
        n->exponent = p;
        const bool leaf_convex = base.kind() == Kind::Lp && base.exponent() * p >= 1.0;
        n->normed = (base.normed() && p >= 1.0) || leaf_convex;
        n->modulus = n->normed ? 1.0 : std::pow(2.0, std::fabs(1.0 - 1.0 / p)) * std::pow(base.modulus(), 1.0 / p);
        n->children = {std::move(base)};
        return SpaceExpr(std::move(n));
    }

    static SpaceExpr sum(SpaceExpr left, SpaceExpr right) { return binary(Kind::Sum, std::move(left), std::move(right)); }

    static SpaceExpr intersection(SpaceExpr left, SpaceExpr right) {
        return binary(Kind::Intersection, std::move(left), std::move(right));
    }

    /// The q-concave core qX.
    static SpaceExpr core(SpaceExpr base, double q) {
        if (!(q > 0.0) || std::isinf(q))
            throw DomainError("core exponent must lie in (0, inf)");
        auto n = std::make_shared<Node>();
        n->kind = Kind::Core;
        n->space = base.node_->space;
        n->exponent = q;
        n->normed = base.normed() && q == 1.0;
        n->modulus = n->normed ? 1.0 : std::pow(2.0, 1.0 + std::fabs(1.0 - 1.0 / q)) * base.modulus();
        n->children = {std::move(base)};
        return SpaceExpr(std::move(n));
    }

    static SpaceExpr l1m(std::shared_ptr<const MeasureSpace> space, VectorMeasure m) {
        return measure_node(Kind::L1m, std::move(space), std::move(m), 1.0);
    }

    static SpaceExpr lpm(std::shared_ptr<const MeasureSpace> space, VectorMeasure m, double p) {
        if (!(p > 0.0) || std::isinf(p))
            throw DomainError("L^p(m) needs 0 < p < inf");
        return measure_node(Kind::Lpm, std::move(space), std::move(m), p);
    }

    Kind kind() const { return node_->kind; }
    /// p of an l^p leaf, power or L^p(m) node; q of a core node.
    double exponent() const { return node_->exponent; }
    const MeasureSpace& space() const { return *node_->space; }
    std::shared_ptr<const MeasureSpace> space_ptr() const { return node_->space; }
    std::size_t atoms() const { return node_->space->size(); }
    const std::optional<std::vector<double>>& weight_override() const { return node_->weights; }

    const SpaceExpr& base() const { return node_->children.at(0); }
    const SpaceExpr& left() const { return node_->children.at(0); }
    const SpaceExpr& right() const { return node_->children.at(1); }
    const VectorMeasure& measure() const {
        if (!node_->measure)
            throw DomainError("node carries no vector measure");
        return *node_->measure;
    }

    /// Satisfies the triangle inequality with K = 1 (known, not searched).
    bool normed() const { return node_->normed; }
    /// Declared quasi-triangle modulus K >= 1.
    double modulus() const { return node_->modulus; }
    /// r in (0, 1] with K = 2^{1/r - 1}.
    double r_exponent() const { return 1.0 / (1.0 + std::log2(modulus())); }

    /// Weights used by an l^p leaf formula.
    std::span<const double> leaf_weights() const {
        if (node_->weights)
            return *node_->weights;
        return node_->space->weights();
    }

    std::string to_string() const {
        const auto e = NormedCodomain::format_exponent;
        switch (kind()) {
        case Kind::Lp:
            return "lp(" + e(exponent()) + (node_->weights ? ";w" : "") + ")";
        case Kind::Power:
            return "power(" + base().to_string() + "," + e(exponent()) + ")";
        case Kind::Sum:
            return "sum(" + left().to_string() + "," + right().to_string() + ")";
        case Kind::Intersection:
            return "cap(" + left().to_string() + "," + right().to_string() + ")";
        case Kind::Core:
            return "core(" + base().to_string() + "," + e(exponent()) + ")";
        case Kind::L1m:
            return "l1m";
        case Kind::Lpm:
            return "lpm(" + e(exponent()) + ")";
        }
        return "?";
    }

    /// Structural equality (exponents, weights and shape; measures by identity).
    bool same_shape(const SpaceExpr& o) const {
        if (kind() != o.kind() || exponent() != o.exponent() || node_->weights != o.node_->weights)
            return false;
        if (node_->children.size() != o.node_->children.size())
            return false;
        for (std::size_t i = 0; i < node_->children.size(); ++i)
            if (!node_->children[i].same_shape(o.node_->children[i]))
                return false;
        return true;
    }

  private:
    struct Node {
        Kind kind = Kind::Lp;
        std::shared_ptr<const MeasureSpace> space;
        double exponent = 1.0;
        std::optional<std::vector<double>> weights;
        std::vector<SpaceExpr> children;
        std::optional<VectorMeasure> measure;
        bool normed = true;
        double modulus = 1.0;
    };

    explicit SpaceExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static SpaceExpr binary(Kind k, SpaceExpr l, SpaceExpr r) {
        if (!(l.space() == r.space()))
            throw DimensionError("combined spaces live on different measure spaces");
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->space = l.node_->space;
        n->normed = l.normed() && r.normed();
        n->modulus = std::max(l.modulus(), r.modulus());
        n->children = {std::move(l), std::move(r)};
        return SpaceExpr(std::move(n));
    }

    static SpaceExpr measure_node(Kind k, std::shared_ptr<const MeasureSpace> space, VectorMeasure m, double p) {
        if (!space)
            throw DomainError("missing measure space");
        if (m.atoms() != space->size())
            throw DimensionError("vector measure and measure space have different atom counts");
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->space = std::move(space);
        n->exponent = p;
        n->measure = std::move(m);
        n->normed = p >= 1.0;
        n->modulus = p >= 1.0 ? 1.0 : std::pow(2.0, 1.0 / p - 1.0);
        return SpaceExpr(std::move(n));
    }

    std::shared_ptr<const Node> node_;
};

/// f = f1 + f2 with the value ||f1||_X + ||f2||_Y.
struct SumSplit {
    double value = 0.0;
    FnVec first;
    FnVec second;
};

/// Parts f_j with |f| = (sum_j |f_j|^q)^{1/q} off null atoms.
struct Decomposition {
    std::vector<FnVec> parts;
    double q = 1.0;

    /// max atomwise |(sum_j |f_j|^q)^{1/q} - |f|| over non-null atoms.
    double reconstruction_error(const MeasureSpace& space, std::span<const double> f) const {
        const FnVec h = q_sum(parts, q, f.size());
        double err = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (!space.null_atom(i))
                err = std::max(err, std::fabs(h[i] - std::fabs(f[i])));
        return err;
    }
};

struct CoreResult {
    /// Certified lower bound on ||f||_{qX}.
    double value = 0.0;
    Decomposition decomposition;
    /// Best value found for each part count tried, in order.
    std::vector<std::pair<std::size_t, double>> trace;
};

inline double eval_norm(const SpaceExpr& x, std::span<const double> f, const Budget& budget = {});
inline SumSplit sum_norm(const SpaceExpr& x, const SpaceExpr& y, std::span<const double> f,
                         const Budget& budget = {});
inline CoreResult core_norm(const SpaceExpr& x, double q, std::span<const double> f, std::size_t parts_cap,
                            const Budget& budget = {});

namespace detail {

inline double lp_leaf_norm(const SpaceExpr& x, std::span<const double> f) {
    const auto& space = x.space();
    const auto w = x.leaf_weights();
    const double p = x.exponent();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
            if (!space.null_atom(i) && w[i] > 0.0)
                m = std::max(m, std::fabs(f[i]));
        return m;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0 || space.null_atom(i) || w[i] == 0.0)
            continue;
        if (std::isinf(w[i]))
            return inf;
        acc += std::pow(std::fabs(f[i]), p) * w[i];
    }
    return std::pow(acc, 1.0 / p);
}

inline std::vector<std::size_t> support_atoms(const MeasureSpace& space, std::span<const double> f) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!space.null_atom(i) && f[i] != 0.0)
            s.push_back(i);
    return s;
}

} // namespace detail

inline double eval_norm(const SpaceExpr& x, std::span<const double> f_in, const Budget& budget) {
    require_size(x.space(), f_in);
    require_finite(f_in);
    const FnVec f = canonical(x.space(), f_in);
    if (ae_zero(x.space(), f))
        return 0.0;
    switch (x.kind()) {
    case SpaceExpr::Kind::Lp:
        return detail::lp_leaf_norm(x, f);
    case SpaceExpr::Kind::Power: {
        const double v = eval_norm(x.base(), pow_abs(f, x.exponent()), budget);
        return std::isinf(v) ? inf : std::pow(v, 1.0 / x.exponent());
    }
    case SpaceExpr::Kind::Intersection:
        return std::max(eval_norm(x.left(), f, budget), eval_norm(x.right(), f, budget));
    case SpaceExpr::Kind::Sum:
        return sum_norm(x.left(), x.right(), f, budget).value;
    case SpaceExpr::Kind::Core: {
        if (std::isinf(eval_norm(x.base(), f, budget)))
            return inf;
        return core_norm(x.base(), x.exponent(), f, budget.parts_cap(x.atoms()), budget).value;
    }
    case SpaceExpr::Kind::L1m:
        return l1m_norm(x.measure(), f);
    case SpaceExpr::Kind::Lpm:
        return lpm_norm(x.measure(), x.exponent(), f);
    }
    return inf;
}

inline SumSplit sum_norm(const SpaceExpr& x, const SpaceExpr& y, std::span<const double> f_in,
                         const Budget& budget) {
    if (!(x.space() == y.space()))
        throw DimensionError("summands live on different measure spaces");
    require_size(x.space(), f_in);
    require_finite(f_in);
    const std::size_t n = f_in.size();
    const FnVec f = canonical(x.space(), f_in);
    SumSplit best{0.0, FnVec(n, 0.0), FnVec(n, 0.0)};
    const auto supp = detail::support_atoms(x.space(), f);
    if (supp.empty())
        return best;

    // For lattice norms the infimum may be taken over splits 0 <= f1 <= |f|
    // with f1 = t f, t in [0,1] atomwise.
    // The search runs on f / max|f| so that f and alpha f follow the same path.
    const std::size_t s = supp.size();
    double scale = 0.0;
    for (double v : f)
        scale = std::max(scale, std::fabs(v));
    FnVec a(n, 0.0), b(n, 0.0);
    const FnVec* src = &f;
    FnVec unit(n);
    for (std::size_t i = 0; i < n; ++i)
        unit[i] = f[i] / scale;
    auto split_value = [&](std::span<const double> t) {
        const FnVec& g = *src;
        for (std::size_t k = 0; k < s; ++k) {
            const std::size_t i = supp[k];
            const double tk = std::clamp(t[k], 0.0, 1.0);
            a[i] = tk * g[i];
            b[i] = (1.0 - tk) * g[i];
        }
        const double vx = eval_norm(x, a, budget);
        if (std::isinf(vx))
            return inf;
        return vx + eval_norm(y, b, budget);
    };

    src = &unit;
    std::vector<double> best_t(s, 1.0);
    double best_v = split_value(best_t);
    auto consider = [&](const std::vector<double>& t) {
        const double v = split_value(t);
        if (v < best_v) {
            best_v = v;
            best_t = t;
        }
    };

    std::vector<double> t(s);
    if (s <= 12) {
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << s); ++bits) {
            for (std::size_t k = 0; k < s; ++k)
                t[k] = ((bits >> k) & 1U) ? 1.0 : 0.0;
            consider(t);
        }
    } else {
        std::fill(t.begin(), t.end(), 0.0);
        consider(t);
    }

    const bool convex = x.normed() && y.normed();
    if (!convex && s <= 3) {
        // Grid oracle over the split cube for quasi-norm summands.
        std::size_t g = std::max<std::size_t>(budget.grid, 1);
        while (g > 2 && std::pow(static_cast<double>(g + 1), static_cast<double>(s)) > 2e4)
            --g;
        std::vector<std::size_t> idx(s, 0);
        while (true) {
            for (std::size_t k = 0; k < s; ++k)
                t[k] = static_cast<double>(idx[k]) / static_cast<double>(g);
            consider(t);
            std::size_t k = 0;
            while (k < s && ++idx[k] > g)
                idx[k++] = 0;
            if (k == s)
                break;
        }
    }

    auto box = [](std::span<double> v) {
        for (auto& z : v)
            z = std::clamp(z, 0.0, 1.0);
    };
    std::vector<std::vector<double>> starts = {best_t, std::vector<double>(s, 0.5)};
    Rng rng(mix_seed(budget.seed, 0x5u));
    const std::size_t extra = convex ? 0 : std::min<std::size_t>(budget.restarts, 8);
    for (std::size_t r = 0; r < extra; ++r) {
        std::vector<double> st(s);
        for (auto& z : st)
            z = uniform01(rng);
        starts.push_back(std::move(st));
    }
    for (auto& st : starts) {
        auto res = projected_descent(split_value, st, box, budget.max_iters, budget.grad_step);
        if (res.value < best_v) {
            best_v = res.value;
            best_t = res.x;
        }
    }

    // Gradient steps stall on ridges, e.g. where an l^inf summand has two
    // atoms tied at its max and the optimum needs both to move together.
    // Pattern search along coordinates, those tie directions and a few
    // random directions gets off them.
    if (budget.polish && std::isfinite(best_v) && s > 1) {
        Rng prng(mix_seed(budget.seed, 0x7a));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> trial(s), d(s);
        auto try_dir = [&](double h) {
            double len = 0.0;
            for (double v : d)
                len += v * v;
            if (!(len > 0.0))
                return false;
            len = std::sqrt(len);
            for (int sign : {1, -1}) {
                // Stop at the first bound so a ridge move stays on the ridge.
                double step = h;
                for (std::size_t k = 0; k < s; ++k) {
                    const double dk = sign * d[k] / len;
                    const double room = dk > 0.0 ? 1.0 - best_t[k] : best_t[k];
                    if (dk != 0.0 && room > 0.0)
                        step = std::min(step, room / std::fabs(dk));
                }
                for (std::size_t k = 0; k < s; ++k)
                    trial[k] = std::clamp(best_t[k] + sign * step * d[k] / len, 0.0, 1.0);
                const double v = split_value(trial);
                if (v < best_v) {
                    best_v = v;
                    best_t = trial;
                    return true;
                }
            }
            return false;
        };
        // Atoms within `tol` of the largest |t u| (or |(1-t) u|) move together,
        // in proportion to 1/|u| so the tie is kept.
        auto tie_dir = [&](bool first, double tol) {
            double top = 0.0;
            for (std::size_t k = 0; k < s; ++k) {
                const double tk = first ? best_t[k] : 1.0 - best_t[k];
                top = std::max(top, tk * std::fabs(unit[supp[k]]));
            }
            std::size_t count = 0;
            for (std::size_t k = 0; k < s; ++k) {
                const double u = std::fabs(unit[supp[k]]);
                const double tk = first ? best_t[k] : 1.0 - best_t[k];
                const bool tied = top > 0.0 && tk * u >= top - tol;
                d[k] = tied ? (first ? 1.0 : -1.0) / u : 0.0;
                count += tied;
            }
            return count >= 2;
        };
        double h = 0.125;
        std::size_t evals = 0;
        while (h > 1e-15 && evals < 600 * s) {
            bool moved = false;
            for (bool first : {true, false}) {
                if (moved)
                    break;
                if (tie_dir(first, 4.0 * h)) {
                    moved = try_dir(h);
                    evals += 2;
                }
            }
            for (std::size_t k = 0; k < s && !moved; ++k) {
                std::fill(d.begin(), d.end(), 0.0);
                d[k] = 1.0;
                moved = try_dir(h);
                evals += 2;
            }
            for (std::size_t r = 0; r < s && !moved; ++r) {
                for (auto& v : d)
                    v = gauss(prng);
                moved = try_dir(h);
                evals += 2;
            }
            h = moved ? std::min(2.0 * h, 0.125) : 0.5 * h;
        }
    }

    // Descent also creeps up on kinks (an l^inf summand switching its max
    // atom); golden-section sweeps per coordinate land on them to rounding
    // level.
    if (budget.polish && std::isfinite(best_v)) {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        std::vector<double> probe = best_t;
        for (int sweep = 0; sweep < 8; ++sweep) {
            const double before = best_v;
            for (std::size_t k = 0; k < s; ++k) {
                probe = best_t;
                auto at = [&](double v) {
                    probe[k] = v;
                    return split_value(probe);
                };
                double lo = 0.0, hi = 1.0;
                double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
                double fc = at(c), fd = at(d);
                for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
                    if (fc <= fd) {
                        hi = d;
                        d = c;
                        fd = fc;
                        c = hi - phi * (hi - lo);
                        fc = at(c);
                    } else {
                        lo = c;
                        c = d;
                        fc = fd;
                        d = lo + phi * (hi - lo);
                        fd = at(d);
                    }
                }
                for (double v : {c, d, lo, hi}) {
                    const double val = at(v);
                    if (val < best_v) {
                        best_v = val;
                        best_t = probe;
                    }
                }
            }
            if (!(best_v < before * (1.0 - 1e-15)))
                break;
        }
    }

    src = &f;
    best_v = split_value(best_t);
    best.value = best_v;
    best.first = a;
    best.second = b;
    if (std::isinf(best_v)) {
        best.first.assign(n, 0.0);
        best.second.assign(n, 0.0);
    }
    return best;
}

namespace detail {

/// Objective of the core search: parts h_j = W_{.j}^{1/q} |f| over the support
/// atoms, value sum_j ||h_j||_X^q. W is s x k, rows on the simplex.
class CoreObjective {
  public:
    CoreObjective(const SpaceExpr& x, double q, const FnVec& abs_f, std::vector<std::size_t> supp, std::size_t k,
                  const Budget& budget)
        : x_(x), q_(q), abs_f_(abs_f), supp_(std::move(supp)), k_(k), budget_(budget), part_(abs_f.size(), 0.0) {}

    double operator()(std::span<const double> w) const {
        double total = 0.0;
        for (std::size_t j = 0; j < k_; ++j) {
            bool any = false;
            for (std::size_t r = 0; r < supp_.size(); ++r) {
                const double wr = std::max(w[r * k_ + j], 0.0);
                part_[supp_[r]] = wr > 0.0 ? std::pow(wr, 1.0 / q_) * abs_f_[supp_[r]] : 0.0;
                any = any || wr > 0.0;
            }
            if (!any)
                continue;
            const double v = eval_norm(x_, part_, budget_);
            if (!std::isfinite(v))
                return inf;
            total += std::pow(v, q_);
        }
        return total;
    }

    std::vector<FnVec> parts(std::span<const double> w, std::span<const double> f) const {
        std::vector<FnVec> out;
        for (std::size_t j = 0; j < k_; ++j) {
            FnVec p(f.size(), 0.0);
            bool any = false;
            for (std::size_t r = 0; r < supp_.size(); ++r) {
                const std::size_t i = supp_[r];
                const double wr = std::max(w[r * k_ + j], 0.0);
                if (wr > 0.0) {
                    p[i] = std::copysign(std::pow(wr, 1.0 / q_) * std::fabs(f[i]), f[i]);
                    any = true;
                }
            }
            if (any)
                out.push_back(std::move(p));
        }
        return out;
    }

  private:
    const SpaceExpr& x_;
    double q_;
    const FnVec& abs_f_;
    std::vector<std::size_t> supp_;
    std::size_t k_;
    const Budget& budget_;
    mutable FnVec part_;
};

inline void project_rows(std::span<double> w, std::size_t k) {
    for (std::size_t r = 0; r * k < w.size(); ++r)
        project_simplex(w.subspan(r * k, k));
}

} // namespace detail

inline CoreResult core_norm(const SpaceExpr& x, double q, std::span<const double> f_in, std::size_t parts_cap,
                            const Budget& budget) {
    if (!(q > 0.0) || std::isinf(q))
        throw DomainError("core exponent must lie in (0, inf)");
    if (parts_cap == 0)
        throw DomainError("parts cap must be at least 1");
    require_size(x.space(), f_in);
    require_finite(f_in);
    const FnVec f = canonical(x.space(), f_in);
    CoreResult out;
    out.decomposition.q = q;
    if (ae_zero(x.space(), f))
        return out;
    const double base_norm = eval_norm(x, f, budget);
    if (std::isinf(base_norm))
        throw DomainError("function is not in the base space of the core");

    const auto supp = detail::support_atoms(x.space(), f);
    const std::size_t s = supp.size();
    // Searched on |f| / max|f|, as in sum_norm; the trace is scaled back.
    FnVec abs_f = abs(f);
    const double scale = *std::max_element(abs_f.begin(), abs_f.end());
    for (auto& v : abs_f)
        v /= scale;

    // Trivial decomposition: one part.
    double best_phi = std::pow(eval_norm(x, abs_f, budget), q);
    std::vector<double> best_w(s, 1.0);
    std::size_t best_k = 1;
    out.trace.emplace_back(1, base_norm);

    for (std::size_t k = 2; k <= parts_cap && s > 1; ++k) {
        detail::CoreObjective phi(x, q, abs_f, supp, k, budget);
        auto project = [k](std::span<double> w) { detail::project_rows(w, k); };
        Rng rng(mix_seed(budget.seed, 1000 + k));
        std::vector<std::vector<double>> starts;

        // Previous best padded with an empty part.
        {
            std::vector<double> w(s * k, 0.0);
            for (std::size_t r = 0; r < s; ++r)
                for (std::size_t j = 0; j < best_k; ++j)
                    w[r * k + j] = best_w[r * best_k + j];
            starts.push_back(std::move(w));
        }
        // Atom separation (exact when k >= s).
        {
            std::vector<double> w(s * k, 0.0);
            for (std::size_t r = 0; r < s; ++r)
                w[r * k + (r % k)] = 1.0;
            starts.push_back(std::move(w));
        }
        const std::size_t n_random = std::max<std::size_t>(budget.restarts, 1);
        for (std::size_t rs = 0; rs < n_random; ++rs) {
            std::vector<double> w(s * k, 0.0);
            if (rs % 2 == 0) {
                // Random vertex, improved by moving whole atoms between parts.
                for (std::size_t r = 0; r < s; ++r)
                    w[r * k + std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
                double cur = phi(w);
                for (bool changed = true; changed;) {
                    changed = false;
                    for (std::size_t r = 0; r < s; ++r) {
                        std::size_t from = 0;
                        for (std::size_t j = 0; j < k; ++j)
                            if (w[r * k + j] == 1.0)
                                from = j;
                        for (std::size_t j = 0; j < k; ++j) {
                            if (j == from)
                                continue;
                            w[r * k + from] = 0.0;
                            w[r * k + j] = 1.0;
                            const double v = phi(w);
                            if (v > cur * (1.0 + 1e-12)) {
                                cur = v;
                                from = j;
                                changed = true;
                            } else {
                                w[r * k + j] = 0.0;
                                w[r * k + from] = 1.0;
                            }
                        }
                    }
                }
            } else {
                for (std::size_t r = 0; r < s; ++r)
                    random_simplex(std::span<double>(w).subspan(r * k, k), rng);
            }
            starts.push_back(std::move(w));
        }

        double k_best = -inf;
        std::vector<double> k_w;
        for (auto& st : starts) {
            auto res = projected_ascent(phi, st, project, budget.max_iters, budget.grad_step);
            if (res.value > k_best) {
                k_best = res.value;
                k_w = res.x;
            }
        }
        const double prev = best_phi;
        if (k_best > best_phi) {
            best_phi = k_best;
            best_w = k_w;
            best_k = k;
        }
        out.trace.emplace_back(k, scale * std::pow(std::max(k_best, 0.0), 1.0 / q));
        const double gain = (best_phi - prev) / std::max(prev, 1e-300);
        if (k >= s && gain < budget.stabilization_tol)
            break;
    }

    detail::CoreObjective final_phi(x, q, abs_f, supp, best_k, budget);
    out.decomposition.parts = final_phi.parts(best_w, f);
    // Recompute the value from the reported parts so the witness is exact.
    double check = 0.0;
    for (const auto& p : out.decomposition.parts)
        check += std::pow(eval_norm(x, p, budget), q);
    out.value = std::pow(check, 1.0 / q);
    return out;
}

/// Norm-preserving rewrites:
///   power(power(X,a),b)  -> power(X,ab)
///   power(lp(s),a)       -> lp(s*a), weights unchanged
///   power(Lp(m),a)       -> L^{pa}(m)
///   power(core(X,q),p)   -> core(power(X,p), qp)
///   power(X,1)           -> X
/// Children are simplified first; the power(X,p) created by the core rule is
/// left as is.
inline SpaceExpr simplify(const SpaceExpr& x) {
    using K = SpaceExpr::Kind;
    switch (x.kind()) {
    case K::Lp:
    case K::L1m:
    case K::Lpm:
        return x;
    case K::Sum:
        return SpaceExpr::sum(simplify(x.left()), simplify(x.right()));
    case K::Intersection:
        return SpaceExpr::intersection(simplify(x.left()), simplify(x.right()));
    case K::Core:
        return SpaceExpr::core(simplify(x.base()), x.exponent());
    case K::Power: {
        SpaceExpr base = simplify(x.base());
        double p = x.exponent();
        if (base.kind() == K::Power) {
            p *= base.exponent();
            base = base.base();
        }
        if (p == 1.0)
            return base;
        if (base.kind() == K::Lp)
            return SpaceExpr::lp(base.space_ptr(), base.exponent() * p, base.weight_override());
        if (base.kind() == K::L1m || base.kind() == K::Lpm) {
            const double e = (base.kind() == K::L1m ? 1.0 : base.exponent()) * p;
            return e == 1.0 ? SpaceExpr::l1m(base.space_ptr(), base.measure())
                            : SpaceExpr::lpm(base.space_ptr(), base.measure(), e);
        }
        if (base.kind() == K::Core)
            return SpaceExpr::core(SpaceExpr::power(base.base(), p), base.exponent() * p);
        return SpaceExpr::power(base, p);
    }
    }
    return x;
}

struct QuasinormProfile {
    double declared_k = 1.0;
    double declared_r = 1.0;
    /// Largest ||x+y|| / (||x|| + ||y||) seen.
    double observed_k = 0.0;
    /// r with observed_k = 2^{1/r - 1}.
    double implied_r = 1.0;
    /// Largest ||sum x_j|| / (4^{1/r} (sum ||x_j||^r)^{1/r}) seen; must stay <= 1.
    double worst_rsum_ratio = 0.0;
    std::size_t modulus_violations = 0;
    std::size_t rsum_violations = 0;
    std::vector<FnVec> counterexample;
};

namespace detail {

inline FnVec random_function(std::size_t n, Rng& rng) {
    FnVec f(n, 0.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto mode = std::uniform_int_distribution<int>(0, 3)(rng);
    for (std::size_t i = 0; i < n; ++i) {
        switch (mode) {
        case 0:
            f[i] = uniform01(rng);
            break;
        case 1:
            f[i] = gauss(rng);
            break;
        case 2:
            f[i] = uniform01(rng) < 0.5 ? 0.0 : uniform01(rng);
            break;
        default:
            f[i] = std::exp(2.0 * gauss(rng)) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
            break;
        }
    }
    return f;
}

} // namespace detail

/// Random search for the triangle defect of X and for violations of
/// ||sum x_j|| <= 4^{1/r} (sum ||x_j||^r)^{1/r} at the declared r.
inline QuasinormProfile quasinorm_profile(const SpaceExpr& x, std::size_t pair_trials, std::size_t family_trials,
                                          std::uint64_t seed, const Budget& budget = {}) {
    QuasinormProfile prof;
    prof.declared_k = x.modulus();
    prof.declared_r = x.r_exponent();
    const std::size_t n = x.atoms();
    Rng rng(mix_seed(seed, 0x9a11));
    const double slack = 1e-12;
    for (std::size_t t = 0; t < pair_trials; ++t) {
        const FnVec a = detail::random_function(n, rng);
        FnVec b = detail::random_function(n, rng);
        // Every fourth pair is made disjoint, where moduli tend to be attained.
        if (t % 4 == 3)
            for (std::size_t i = 0; i < n; ++i)
                if (a[i] != 0.0 && uniform01(rng) < 0.7)
                    b[i] = 0.0;
        FnVec s(n);
        for (std::size_t i = 0; i < n; ++i)
            s[i] = a[i] + b[i];
        const double na = eval_norm(x, a, budget), nb = eval_norm(x, b, budget);
        if (!(na + nb > 0.0) || std::isinf(na + nb))
            continue;
        const double ratio = eval_norm(x, s, budget) / (na + nb);
        if (ratio > prof.observed_k)
            prof.observed_k = ratio;
        if (ratio > prof.declared_k * (1.0 + slack)) {
            ++prof.modulus_violations;
            if (prof.counterexample.empty())
                prof.counterexample = {a, b};
        }
    }
    prof.implied_r = prof.observed_k > 1.0 ? 1.0 / (1.0 + std::log2(prof.observed_k)) : 1.0;

    const double r = prof.declared_r;
    for (std::size_t t = 0; t < family_trials; ++t) {
        const std::size_t size = 1 + t % 5;
        std::vector<FnVec> family;
        FnVec total(n, 0.0);
        double acc = 0.0;
        bool finite = true;
        for (std::size_t j = 0; j < size; ++j) {
            family.push_back(detail::random_function(n, rng));
            for (std::size_t i = 0; i < n; ++i)
                total[i] += family.back()[i];
            const double v = eval_norm(x, family.back(), budget);
            finite = finite && std::isfinite(v);
            acc += std::pow(v, r);
        }
        if (!finite || !(acc > 0.0))
            continue;
        const double bound = std::pow(4.0, 1.0 / r) * std::pow(acc, 1.0 / r);
        const double ratio = eval_norm(x, total, budget) / bound;
        prof.worst_rsum_ratio = std::max(prof.worst_rsum_ratio, ratio);
        if (ratio > 1.0 + slack) {
            ++prof.rsum_violations;
            if (prof.counterexample.empty())
                prof.counterexample = family;
        }
    }
    return prof;
}

} // namespace latticelab
