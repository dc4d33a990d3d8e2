#pragma once

// Executable checkers. Each one takes a concrete instance, runs the relevant
// estimators and emits a CheckReport whose margins carry their own
// tolerance. Hypotheses that cannot be established give a skip, never a
// failure: estimators only certify lower bounds.

#include "latticelab/concavity.hpp"
#include "latticelab/induced.hpp"
#include "latticelab/operator.hpp"
#include "latticelab/ring.hpp"
#include "latticelab/space.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace latticelab {

/// Tolerances by error source: exact linear identities, closed-form norm
/// equalities, optimizer-mediated equalities, constant comparisons.
struct Tolerances {
    double linear = 1e-9;
    double closed_form = 1e-6;
    double optimizer = opt_tol;
    double band = 0.05;
};

enum class CheckStatus { Pass, Fail, Skip };

inline const char* to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::Pass:
        return "pass";
    case CheckStatus::Fail:
        return "fail";
    case CheckStatus::Skip:
        return "skip";
    }
    return "?";
}

struct Margin {
    std::string name;
    double value = 0.0;
    /// Bound the value is compared against.
    double tolerance = 0.0;
    bool ok = true;
};

struct CheckReport {
    std::string theorem_id;
    CheckStatus status = CheckStatus::Pass;
    std::vector<Margin> margins;
    std::vector<Witness> witnesses;
    std::vector<Decomposition> decompositions;
    /// Human-readable instance description and its 64-bit hash.
    std::string instance;
    std::string fingerprint;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;

    bool passed() const { return status == CheckStatus::Pass; }

    /// value <= limit
    void at_most(std::string name, double value, double limit) {
        margins.push_back({std::move(name), value, limit, value <= limit});
    }
    void require(std::string name, bool ok, double value = 0.0) {
        margins.push_back({std::move(name), value, 0.0, ok});
    }
    void skip(std::string why) {
        status = CheckStatus::Skip;
        notes.push_back(std::move(why));
    }
    /// Pass iff every margin is within tolerance; skips stay skips.
    void finish() {
        if (status == CheckStatus::Skip)
            return;
        status = CheckStatus::Pass;
        for (const auto& m : margins)
            if (!m.ok)
                status = CheckStatus::Fail;
    }
};

namespace detail {

inline std::string fnv_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string describe_matrix(const std::vector<std::vector<double>>& m) {
    std::ostringstream os;
    os.precision(17);
    os << '[';
    for (std::size_t r = 0; r < m.size(); ++r) {
        os << (r ? ";" : "");
        for (std::size_t c = 0; c < m[r].size(); ++c)
            os << (c ? "," : "") << m[r][c];
    }
    os << ']';
    return os.str();
}

inline std::string describe_weights(const MeasureSpace& s) {
    std::ostringstream os;
    os.precision(17);
    os << "mu=(";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << (i ? "," : "") << s.weight(i);
    os << ')';
    return os.str();
}

inline std::string describe(const Operator& t) {
    return "T=" + describe_matrix(t.matrix()) + " on " + t.domain().to_string() + " " +
           describe_weights(t.domain().space()) + " into " + t.codomain().label();
}

inline std::string describe(const VectorMeasure& m) {
    std::ostringstream os;
    os.precision(17);
    os << "m=(";
    for (std::size_t i = 0; i < m.atoms(); ++i) {
        os << (i ? ";" : "");
        if (!m.defined(i)) {
            os << "undef";
            continue;
        }
        for (std::size_t k = 0; k < m.atom_value(i).size(); ++k)
            os << (k ? "," : "") << m.atom_value(i)[k];
    }
    os << ") in " << m.codomain().label();
    return os.str();
}

inline CheckReport open_report(std::string id, std::string instance, std::uint64_t seed) {
    CheckReport rep;
    rep.theorem_id = std::move(id);
    rep.fingerprint = fnv_hex(rep.theorem_id + "|" + instance + "|seed=" + std::to_string(seed));
    rep.instance = std::move(instance);
    rep.seed = seed;
    return rep;
}

/// |a-b| / max(|a|,|b|); 0 when both vanish or both are infinite.
inline double relative_gap(double a, double b) {
    if (a == b)
        return 0.0;
    if (std::isinf(a) || std::isinf(b))
        return inf;
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) / scale;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace detail

/// Sample functions supported on `support`: each single-atom indicator, the
/// indicator of the whole support, then random functions.
inline std::vector<FnVec> sample_functions(std::size_t n, MSet support, std::size_t count, std::uint64_t seed) {
    std::vector<FnVec> out;
    for (auto i : support.atoms())
        out.push_back(indicator(n, MSet::single(i)));
    if (support.size() > 1)
        out.push_back(indicator(n, support));
    Rng rng(mix_seed(seed, 0x5a3b1e));
    for (std::size_t t = 0; t < count; ++t) {
        FnVec f = detail::random_function(n, rng);
        for (std::size_t i = 0; i < n; ++i)
            if (!support.contains(i))
                f[i] = 0.0;
        out.push_back(std::move(f));
    }
    return out;
}

/// Samples with finite X-norm.
inline std::vector<FnVec> sample_functions(const SpaceExpr& x, std::size_t count, std::uint64_t seed,
                                           const Budget& budget = {}) {
    return sample_functions(x.atoms(), finite_atoms(x, budget), count, seed);
}

// ---------------------------------------------------------------- power-core

/// ||f||_{(qX)^p} against ||f||_{qp(X^p)}: both are core norms, computed by
/// independent searches.
inline CheckReport check_power_core(const SpaceExpr& x, double p, double q, const std::vector<FnVec>& samples,
                                    const Budget& budget = {}, const Tolerances& tol = {}) {
    detail::check_exponent(p, "power exponent p");
    detail::check_exponent(q, "core exponent q");
    auto rep = detail::open_report("power-core",
                                   "X=" + x.to_string() + " " + detail::describe_weights(x.space()) +
                                       " p=" + detail::fmt(p) + " q=" + detail::fmt(q),
                                   budget.seed);
    const std::size_t cap = budget.parts_cap(x.atoms());
    const SpaceExpr xp = SpaceExpr::power(x, p);
    double worst = 0.0;
    for (const auto& f : samples) {
        require_size(x.space(), f);
        const auto a = core_norm(x, q, pow_abs(f, p), cap, budget);
        const double route_a = std::pow(a.value, 1.0 / p);
        const auto b = core_norm(xp, q * p, f, cap, budget);
        const double gap = detail::relative_gap(route_a, b.value);
        if (gap > worst || rep.decompositions.empty()) {
            worst = std::max(worst, gap);
            rep.decompositions = {a.decomposition, b.decomposition};
        }
        if (gap > tol.optimizer)
            rep.notes.push_back("routes differ: " + detail::fmt(route_a) + " vs " + detail::fmt(b.value));
    }
    rep.at_most("max_relative_discrepancy", worst, tol.optimizer);
    rep.finish();
    return rep;
}

// ----------------------------------------------------------------- sum-lemma

/// max(C_X, C_Y) <= C_{X+Y} <= 2^{1+|1-1/q|} K max(C_X, C_Y), K the modulus of
/// the codomain (1: codomains are normed).
inline CheckReport check_sum_lemma(const SpaceExpr& x, const SpaceExpr& y, const Operator& t, double q,
                                   const Budget& budget = {}, const Tolerances& tol = {}) {
    if (x.atoms() != y.atoms() || x.atoms() != t.cols())
        throw DimensionError("sum lemma needs X, Y and T on the same atoms");
    auto rep = detail::open_report("sum-lemma",
                                   "X=" + x.to_string() + " Y=" + y.to_string() + " " + detail::describe(t) +
                                       " q=" + detail::fmt(q),
                                   budget.seed);
    const auto cx = concavity_constant(t.with_domain(x), q, budget);
    const auto cy = concavity_constant(t.with_domain(y), q, budget);
    std::vector<std::vector<FnVec>> seeds;
    for (const auto* c : {&cx, &cy})
        if (!c->witness.family.empty())
            seeds.push_back(c->witness.family);
    const auto cs = concavity_constant(t.with_domain(SpaceExpr::sum(x, y)), q, budget, seeds);
    rep.witnesses = {cx.witness, cy.witness, cs.witness};
    rep.notes.push_back("C_X >= " + detail::fmt(cx.lower_bound) + ", C_Y >= " + detail::fmt(cy.lower_bound) +
                        ", C_X+Y >= " + detail::fmt(cs.lower_bound));

    const bool part_div = cx.divergent || cy.divergent;
    if (part_div || cs.divergent) {
        if (part_div && !cs.divergent) {
            rep.require("divergence_carries_to_sum", false);
        } else if (!part_div) {
            rep.skip("C_X+Y is infinite but neither summand witness diverged; inconclusive");
            return rep;
        } else {
            rep.require("divergence_carries_to_sum", true);
        }
        rep.finish();
        return rep;
    }
    const double c = std::max(cx.lower_bound, cy.lower_bound);
    const double k_e = 1.0;
    const double factor = std::pow(2.0, 1.0 + std::fabs(1.0 - 1.0 / q)) * k_e;
    rep.at_most("lower_gap", c - cs.lower_bound, tol.optimizer * c);
    rep.at_most("upper_ratio", c > 0.0 ? cs.lower_bound / (factor * c) : (cs.lower_bound > 0.0 ? inf : 0.0), 1.0);
    rep.finish();
    return rep;
}

// ------------------------------------------------------------ optimal domain

/// The optimal domain of a (p,q)-power-concave T: q/p L^1(m_T) cap q L^p(m_T),
/// or q L^1(m_T) for p = 1. With `verify` the power-concavity constant is
/// searched first and a divergent one is refused.
inline SpaceExpr optimal_domain(const Operator& t, double p, double q, const Budget& budget = {}, bool verify = true) {
    detail::check_exponent(p, "power exponent p");
    detail::check_exponent(q, "concavity exponent q");
    const VectorMeasure m = measure_from_operator(t, budget);
    if (verify) {
        const auto c = power_concavity_constant(t, p, q, budget);
        if (c.divergent)
            throw HypothesisError("the (p,q)-power-concavity constant of T is infinite");
    }
    const auto space = t.domain().space_ptr();
    if (p == 1.0)
        return SpaceExpr::core(SpaceExpr::l1m(space, m), q);
    return SpaceExpr::intersection(SpaceExpr::core(SpaceExpr::l1m(space, m), q / p),
                                   SpaceExpr::core(SpaceExpr::lpm(space, m, p), q));
}

// ----------------------------------------------------------------- extension

/// T f = I_{m_T} f on samples of X, and ||f||_{optdom} / ||f||_X bounded.
inline CheckReport check_extension(const Operator& t, double p, double q, const std::vector<FnVec>& samples,
                                   const Budget& budget = {}, const Tolerances& tol = {}) {
    auto rep = detail::open_report("extension", detail::describe(t) + " p=" + detail::fmt(p) + " q=" + detail::fmt(q),
                                   budget.seed);
    std::optional<SpaceExpr> opt_dom;
    std::optional<VectorMeasure> m_t;
    try {
        opt_dom = optimal_domain(t, p, q, budget);
        m_t = measure_from_operator(t, budget);
    } catch (const HypothesisError& e) {
        rep.skip(e.what());
        return rep;
    }
    const SpaceExpr& opt = *opt_dom;
    const VectorMeasure& m = *m_t;
    const Budget inner = detail::inner_budget(budget);
    double worst = 0.0, ratio = 0.0;
    for (const auto& f : samples) {
        const double nx = eval_norm(t.domain(), f, inner);
        if (!std::isfinite(nx))
            continue;
        const FnVec tf = t.apply(f);
        const FnVec im = integrate(m, canonical(t.domain().space(), f));
        double scale = 1.0, err = 0.0;
        for (std::size_t k = 0; k < tf.size(); ++k) {
            scale = std::max(scale, std::fabs(tf[k]));
            err = std::max(err, std::fabs(tf[k] - im[k]));
        }
        worst = std::max(worst, err / scale);
        if (nx > 0.0)
            ratio = std::max(ratio, eval_norm(opt, f, inner) / nx);
    }
    rep.at_most("max_extension_error", worst, tol.linear);
    rep.require("inclusion_ratio_finite", std::isfinite(ratio), ratio);
    rep.finish();
    return rep;
}

// ---------------------------------------------------------------- maximality

/// l^p leaves for p in {1/2, 1, 2, inf} with their pairwise sums and
/// intersections.
inline std::vector<SpaceExpr> default_catalog(const std::shared_ptr<const MeasureSpace>& space) {
    std::vector<SpaceExpr> leaves;
    for (double p : {0.5, 1.0, 2.0, inf})
        leaves.push_back(SpaceExpr::lp(space, p));
    std::vector<SpaceExpr> out = leaves;
    for (std::size_t a = 0; a < leaves.size(); ++a)
        for (std::size_t b = a + 1; b < leaves.size(); ++b) {
            out.push_back(SpaceExpr::sum(leaves[a], leaves[b]));
            out.push_back(SpaceExpr::intersection(leaves[a], leaves[b]));
        }
    return out;
}

/// For every catalog space Z on which I_{m_T} extends T and is (p,q)-power-
/// concave with searched constant <= bound, the optimal domain must contain Z.
inline CheckReport check_maximality(const Operator& t, double p, double q, const std::vector<SpaceExpr>& catalog,
                                    std::size_t samples, const Budget& budget = {}, double bound = 1e6) {
    auto rep = detail::open_report("maximality", detail::describe(t) + " p=" + detail::fmt(p) + " q=" + detail::fmt(q) +
                                                     " catalog=" + std::to_string(catalog.size()),
                                   budget.seed);
    std::optional<SpaceExpr> opt_dom;
    std::optional<VectorMeasure> m_t;
    try {
        opt_dom = optimal_domain(t, p, q, budget);
        m_t = measure_from_operator(t, budget);
    } catch (const HypothesisError& e) {
        rep.skip(e.what());
        return rep;
    }
    const SpaceExpr& opt = *opt_dom;
    const VectorMeasure& m = *m_t;
    const Budget inner = detail::inner_budget(budget);
    const MSet x_fin = finite_atoms(t.domain(), budget);
    std::size_t tested = 0;
    for (std::size_t z = 0; z < catalog.size(); ++z) {
        const SpaceExpr& zs = catalog[z];
        const std::string tag = "inclusion_ratio[" + zs.to_string() + "]";
        const MSet z_fin = finite_atoms(zs, budget);
        const MSet live = z_fin & zs.space().support();
        if (!(x_fin & t.domain().space().support()).subset_of(z_fin)) {
            rep.notes.push_back(zs.to_string() + ": hypothesis unmet (X is not contained in Z)");
            continue;
        }
        if (!live.subset_of(m.ring_atoms())) {
            rep.notes.push_back(zs.to_string() + ": hypothesis unmet (I_m is undefined on part of Z)");
            continue;
        }
        const Operator s = Operator::integration(m, zs);
        const auto c = power_concavity_constant(s, p, q, budget);
        if (c.divergent || c.lower_bound > bound) {
            rep.notes.push_back(zs.to_string() + ": hypothesis unmet (searched constant " +
                                (c.divergent ? std::string("diverges") : detail::fmt(c.lower_bound)) + ")");
            continue;
        }
        double worst = 0.0;
        for (const auto& f : sample_functions(zs.atoms(), live, samples, mix_seed(budget.seed, z))) {
            const double nz = eval_norm(zs, f, inner);
            if (!(nz > 0.0) || std::isinf(nz))
                continue;
            worst = std::max(worst, eval_norm(opt, f, inner) / nz);
        }
        ++tested;
        rep.require(tag, std::isfinite(worst), worst);
    }
    rep.notes.push_back(std::to_string(tested) + " of " + std::to_string(catalog.size()) +
                        " catalog spaces met the hypothesis");
    rep.finish();
    return rep;
}

// -------------------------------------------------------------- im-concavity

/// q-concavity of I_m: L^1(m) -> E against q-concavity of L^1(m) itself.
/// The proof gives the same constant both ways; a 5% band absorbs search error.
inline CheckReport check_im_concavity(const VectorMeasure& m, double q, const Budget& budget = {}, const Tolerances& tol = {}) {
    detail::check_exponent(q, "concavity exponent q");
    auto rep = detail::open_report("im-concavity", detail::describe(m) + " q=" + detail::fmt(q), budget.seed);
    bool zero = true;
    for (std::size_t i = 0; i < m.atoms(); ++i)
        if (m.defined(i))
            for (double v : m.atom_value(i))
                zero = zero && v == 0.0;
    if (zero) {
        rep.skip("zero measure: degenerate instance");
        return rep;
    }
    const SpaceExpr x = SpaceExpr::l1m(control_space(m), m);
    const auto ci = concavity_constant(Operator::integration(m, x), q, budget);
    const auto cl = concavity_constant(Operator::space_identity(x, detail::inner_budget(budget)), q, budget);
    rep.witnesses = {ci.witness, cl.witness};
    rep.notes.push_back("C(I_m) >= " + detail::fmt(ci.lower_bound) + ", C(L1(m)) >= " + detail::fmt(cl.lower_bound));
    rep.notes.push_back("the 5% agreement band is a tooling choice");
    if (ci.divergent != cl.divergent) {
        rep.skip("one side diverged and the other did not; inconclusive");
        return rep;
    }
    if (!ci.divergent)
        rep.at_most("relative_gap", detail::relative_gap(ci.lower_bound, cl.lower_bound), tol.band);
    rep.finish();
    return rep;
}

// ------------------------------------------------------- lpm-power-concavity

/// Finiteness of the (p,q)-power-concavity constant of I_m on L^p(m) against
/// q-concavity of L^p(m).
inline CheckReport check_lpm_power_concavity(const VectorMeasure& m, double p, double q, const Budget& budget = {}, const Tolerances& tol = {}) {
    if (!(p >= 1.0) || std::isinf(p))
        throw DomainError("lpm-power-concavity needs 1 <= p < inf");
    detail::check_exponent(q, "concavity exponent q");
    if (p == 1.0) {
        auto rep = check_im_concavity(m, q, budget, tol);
        rep.theorem_id = "lpm-power-concavity";
        rep.notes.push_back("p = 1 reduces to im-concavity");
        return rep;
    }
    auto rep = detail::open_report("lpm-power-concavity",
                                   detail::describe(m) + " p=" + detail::fmt(p) + " q=" + detail::fmt(q), budget.seed);
    if (m.ring_atoms() != MSet::full(m.atoms())) {
        rep.skip("hypothesis unmet: chi_Omega is not in L1(m)");
        return rep;
    }
    const SpaceExpr x = SpaceExpr::lpm(control_space(m), m, p);
    const auto a = power_concavity_constant(Operator::integration(m, x), p, q, budget);
    const auto b = concavity_constant(Operator::space_identity(x, detail::inner_budget(budget)), q, budget);
    rep.witnesses = {a.witness, b.witness};
    rep.notes.push_back("power-concavity of I_m >= " + detail::fmt(a.lower_bound) + ", concavity of Lp(m) >= " +
                        detail::fmt(b.lower_bound));
    rep.require("finiteness_agrees", a.divergent == b.divergent);
    if (!a.divergent && !b.divergent) {
        double spread = 1.0;
        if (a.lower_bound > 0.0 && b.lower_bound > 0.0)
            spread = std::max(a.lower_bound / b.lower_bound, b.lower_bound / a.lower_bound);
        else if (a.lower_bound != b.lower_bound)
            spread = inf;
        rep.at_most("constant_spread", spread, 10.0);
    }
    rep.finish();
    return rep;
}

// ------------------------------------------------------------ representation

/// The measure m(A) = chi_A valued in Z^{1/p}, defined on the atoms whose
/// indicator lies in Z.
inline VectorMeasure representing_measure(const SpaceExpr& z, double p, const Budget& budget = {}) {
    const std::size_t n = z.atoms();
    const SpaceExpr zp = simplify(SpaceExpr::power(z, 1.0 / p));
    const Budget inner = detail::inner_budget(budget);
    auto norm = [zp, inner](std::span<const double> v) { return eval_norm(zp, v, inner); };
    NormedCodomain cod = NormedCodomain::custom(n, norm, zp.to_string(), true);
    const MSet fin = finite_atoms(z, budget);
    std::vector<std::optional<FnVec>> values(n);
    for (std::size_t i = 0; i < n; ++i)
        if (fin.contains(i))
            values[i] = indicator(n, MSet::single(i));
    return VectorMeasure(std::move(values), std::move(cod));
}

/// ||f||_{L^p(m)} = ||f||_Z for the representing measure, and I_m is
/// q/p-concave.
inline CheckReport check_representation(const SpaceExpr& z, double p, double q, const std::vector<FnVec>& samples,
                                        const Budget& budget = {}, const Tolerances& tol = {}) {
    if (!(p >= 1.0) || std::isinf(p))
        throw DomainError("representation needs 1 <= p < inf");
    detail::check_exponent(q, "concavity exponent q");
    auto rep = detail::open_report("representation",
                                   "Z=" + z.to_string() + " " + detail::describe_weights(z.space()) +
                                       " p=" + detail::fmt(p) + " q=" + detail::fmt(q),
                                   budget.seed);
    const Budget inner = detail::inner_budget(budget);
    const auto cz = concavity_constant(Operator::space_identity(z, inner), q, budget);
    if (cz.divergent) {
        rep.skip("hypothesis unmet: Z is not q-concave");
        return rep;
    }
    if (p > 1.0) {
        const auto mp = convexity_constant(z, p, budget);
        if (mp.divergent) {
            rep.skip("hypothesis unmet: Z is not p-convex");
            return rep;
        }
        const double c = mp.closed_form ? *mp.closed_form : mp.lower_bound;
        if (c > 1.0 + tol.band) {
            rep.skip("p-convexity constant " + detail::fmt(c) + " exceeds 1; renorming is not applied");
            return rep;
        }
    }
    const VectorMeasure m = representing_measure(z, p, budget);
    double worst = 0.0;
    for (const auto& f : samples)
        worst = std::max(worst, detail::relative_gap(lpm_norm(m, p, f), eval_norm(z, f, inner)));
    rep.at_most("max_norm_discrepancy", worst, tol.closed_form);

    const SpaceExpr l1 = SpaceExpr::l1m(z.space_ptr(), m);
    const auto ci = concavity_constant(Operator::integration(m, l1), q / p, budget);
    rep.witnesses = {cz.witness, ci.witness};
    rep.require("im_concavity_finite", !ci.divergent, ci.lower_bound);
    if (!ci.divergent) {
        // The q/p-concavity constant of L^1(m) = Z^{1/p} is C_q(Z)^p.
        const double target = std::pow(std::max(cz.lower_bound, 1e-300), p);
        rep.at_most("im_concavity_over_z", ci.lower_bound / target, 1.0 + tol.band);
    }
    rep.finish();
    return rep;
}

// ---------------------------------------------------------- maurey-rosenthal

struct MaureyRosenthalResult {
    FnVec g;
    double c1 = inf;
    double c2 = inf;
    CheckReport report;
};

/// Search a positive weight g with T = I_{m_T} M_{g^{-1}} M_g, M_g: X -> L^q(mu)
/// and M_{g^{-1}}: L^q(mu) -> qL^1(m_T), minimizing the product of the two
/// sampled operator norms.
inline MaureyRosenthalResult maurey_rosenthal_factor(const Operator& t, double q, const Budget& budget = {},
                                                     std::size_t samples = 8, const Tolerances& tol = {}) {
    if (!(q >= 1.0) || std::isinf(q))
        throw DomainError("Maurey-Rosenthal factorization needs 1 <= q < inf");
    MaureyRosenthalResult res;
    auto& rep = res.report;
    rep = detail::open_report("maurey-rosenthal", detail::describe(t) + " q=" + detail::fmt(q), budget.seed);
    const SpaceExpr& x = t.domain();
    const std::size_t n = x.atoms();

    const auto conv = convexity_constant(x, q, budget);
    if (conv.divergent) {
        rep.skip("precondition unmet: X is not q-convex");
        return res;
    }
    const auto conc = concavity_constant(t, q, budget);
    if (conc.divergent) {
        rep.skip("precondition unmet: T is not q-concave");
        return res;
    }
    std::optional<VectorMeasure> m_t;
    try {
        m_t = measure_from_operator(t, budget);
    } catch (const HypothesisError& e) {
        rep.skip(e.what());
        return res;
    }
    const VectorMeasure& m = *m_t;
    const SpaceExpr opt = SpaceExpr::core(SpaceExpr::l1m(x.space_ptr(), m), q);
    const SpaceExpr lq = SpaceExpr::lp(x.space_ptr(), q);
    const MSet support = x.space().support();
    const auto fs = sample_functions(n, support, samples, budget.seed);
    Budget inner = detail::inner_budget(budget);
    inner.k_max = std::min<std::size_t>(budget.parts_cap(n), 4);

    std::vector<double> nx, nq;
    for (const auto& f : fs) {
        nx.push_back(eval_norm(x, f, inner));
        nq.push_back(eval_norm(lq, f, inner));
    }
    auto factors = [&](std::span<const double> g) {
        double c1 = 0.0, c2 = 0.0;
        FnVec a(n), b(n);
        for (std::size_t s = 0; s < fs.size(); ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                a[i] = fs[s][i] * g[i];
                b[i] = fs[s][i] / g[i];
            }
            if (nx[s] > 0.0)
                c1 = std::max(c1, eval_norm(lq, a, inner) / nx[s]);
            if (nq[s] > 0.0)
                c2 = std::max(c2, eval_norm(opt, b, inner) / nq[s]);
        }
        return std::pair{c1, c2};
    };
    auto product = [&](std::span<const double> logg) {
        FnVec g(n);
        for (std::size_t i = 0; i < n; ++i)
            g[i] = std::exp(logg[i]);
        const auto [c1, c2] = factors(g);
        const double v = c1 * c2;
        return std::isnan(v) ? inf : v;
    };

    // g is scale-free in the product; the first support atom is pinned at 1.
    const auto sup_atoms = support.atoms();
    std::vector<double> best_log(n, 0.0);
    double best = product(best_log);
    Rng rng(mix_seed(budget.seed, 0x3d1));
    const std::size_t starts = 1 + std::min<std::size_t>(budget.restarts, 4);
    for (std::size_t st = 0; st < starts; ++st) {
        std::vector<double> lg(n, 0.0);
        if (st > 0)
            for (std::size_t j = 1; j < sup_atoms.size(); ++j)
                lg[sup_atoms[j]] = 2.0 * (uniform01(rng) - 0.5) * 2.0;
        double val = product(lg);
        for (double step = 1.0; step > 1e-3; step *= 0.5) {
            bool moved = true;
            for (std::size_t round = 0; moved && round < 20; ++round) {
                moved = false;
                for (std::size_t j = 1; j < sup_atoms.size(); ++j) {
                    for (double dir : {1.0, -1.0}) {
                        auto trial = lg;
                        trial[sup_atoms[j]] += dir * step;
                        const double v = product(trial);
                        if (v < val) {
                            val = v;
                            lg = std::move(trial);
                            moved = true;
                            break;
                        }
                    }
                }
            }
        }
        if (val < best) {
            best = val;
            best_log = lg;
        }
    }
    res.g.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        res.g[i] = std::exp(best_log[i]);
    std::tie(res.c1, res.c2) = factors(res.g);

    double worst = 0.0;
    for (const auto& f : fs) {
        const FnVec tf = t.apply(f);
        FnVec h(n);
        for (std::size_t i = 0; i < n; ++i)
            h[i] = (f[i] * res.g[i]) / res.g[i];
        const FnVec im = integrate(m, canonical(x.space(), h));
        double scale = 1.0, err = 0.0;
        for (std::size_t k = 0; k < tf.size(); ++k) {
            scale = std::max(scale, std::fabs(tf[k]));
            err = std::max(err, std::fabs(tf[k] - im[k]));
        }
        worst = std::max(worst, err / scale);
    }
    rep.notes.push_back("c1 = " + detail::fmt(res.c1) + ", c2 = " + detail::fmt(res.c2) + ", c1*c2 = " +
                        detail::fmt(res.c1 * res.c2));
    if (!std::isfinite(res.c1 * res.c2)) {
        rep.skip("inconclusive: no weight with finite c1*c2 found within budget");
        return res;
    }
    rep.require("c1_finite", std::isfinite(res.c1), res.c1);
    rep.require("c2_finite", std::isfinite(res.c2), res.c2);
    rep.at_most("max_commutation_error", worst, tol.linear);
    rep.finish();
    return res;
}

// --------------------------------------------------------- quasinorm-profile

inline CheckReport check_quasinorm_profile(const SpaceExpr& x, std::size_t pairs, std::size_t families,
                                           const Budget& budget = {}) {
    auto rep = detail::open_report("quasinorm-profile",
                                   "X=" + x.to_string() + " " + detail::describe_weights(x.space()) +
                                       " pairs=" + std::to_string(pairs) + " families=" + std::to_string(families),
                                   budget.seed);
    const auto prof = quasinorm_profile(x, pairs, families, budget.seed, detail::inner_budget(budget));
    rep.at_most("modulus_violations", static_cast<double>(prof.modulus_violations), 0.0);
    rep.at_most("rsum_violations", static_cast<double>(prof.rsum_violations), 0.0);
    rep.notes.push_back("declared K = " + detail::fmt(prof.declared_k) + ", observed K = " +
                        detail::fmt(prof.observed_k) + ", implied r = " + detail::fmt(prof.implied_r));
    rep.finish();
    return rep;
}

} // namespace latticelab
