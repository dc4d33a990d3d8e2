#pragma once

// Atomic vector measures on the finite delta-ring, their variation and
// semivariation, the L^1(m) / L^p(m) norms and the integration operator.
//
// On a finite atomic space the sup over |phi| <= 1 in the integral formula for
// ||f||_m is attained at sign patterns (extreme points of the box), so
// ||f||_m = max_eps || sum_i eps_i f_i m({i}) ||_E. Exchanging the two suprema
// in the semivariation gives the same form with f = chi_A.

#include "latticelab/codomain.hpp"
#include "latticelab/measure.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <vector>

namespace latticelab {

/// Largest number of atoms for which sign patterns are enumerated.
inline constexpr std::size_t sign_enumeration_cap = 20;

/// Real measure on the atoms, given by its atom values.
struct ScalarMeasure {
    std::vector<double> atom_values;
};

/// |lambda|(A); the finest partition of A attains the supremum.
inline double variation(const ScalarMeasure& lambda, MSet a) {
    double v = 0.0;
    for (auto i : a.atoms()) {
        if (i >= lambda.atom_values.size())
            throw DimensionError("set exceeds the atom range");
        v += std::fabs(lambda.atom_values[i]);
    }
    return v;
}

class VectorMeasure {
  public:
    /// `values[i]` is m({i}) for atoms in the ring; std::nullopt marks an atom
    /// whose singleton is not in the delta-ring.
    VectorMeasure(std::vector<std::optional<FnVec>> values, NormedCodomain codomain)
        : codomain_(std::move(codomain)) {
        if (values.empty())
            throw DimensionError("a vector measure needs at least one atom");
        if (values.size() > MSet::max_atoms)
            throw DimensionError("too many atoms");
        values_.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i]) {
                values_[i] = FnVec(codomain_.dim(), 0.0);
                continue;
            }
            if (values[i]->size() != codomain_.dim())
                throw DimensionError("atom value " + std::to_string(i) + " has wrong dimension");
            require_finite(*values[i]);
            values_[i] = std::move(*values[i]);
            ring_atoms_.mask |= std::uint64_t{1} << i;
        }
    }

    /// Measure defined on every atom (the ring is the full power set).
    VectorMeasure(std::vector<FnVec> values, NormedCodomain codomain)
        : VectorMeasure(wrap(std::move(values)), std::move(codomain)) {}

    std::size_t atoms() const { return values_.size(); }
    const NormedCodomain& codomain() const { return codomain_; }

    /// Atoms whose singleton lies in the ring. The ring is the power set of this.
    MSet ring_atoms() const { return ring_atoms_; }
    bool in_ring(MSet a) const { return a.subset_of(ring_atoms_); }
    bool defined(std::size_t i) const { return ring_atoms_.contains(i); }

    /// m({i}); zero for atoms outside the ring.
    const FnVec& atom_value(std::size_t i) const { return values_[i]; }

    /// All sets of the delta-ring (subsets of the ring atoms).
    std::vector<MSet> domain_ring() const {
        auto atoms_in = ring_atoms_.atoms();
        if (atoms_in.size() > sign_enumeration_cap)
            throw DimensionError("delta-ring too large to enumerate");
        std::vector<MSet> ring;
        ring.reserve(std::size_t{1} << atoms_in.size());
        for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << atoms_in.size()); ++bits) {
            MSet s;
            for (std::size_t k = 0; k < atoms_in.size(); ++k)
                if ((bits >> k) & 1U)
                    s.mask |= std::uint64_t{1} << atoms_in[k];
            ring.push_back(s);
        }
        return ring;
    }

    /// m(A) = sum of atom values; A must belong to the ring.
    FnVec value(MSet a) const {
        if (!in_ring(a))
            throw DomainError("set is not in the delta-ring of the measure");
        FnVec out(codomain_.dim(), 0.0);
        for (auto i : a.atoms())
            for (std::size_t k = 0; k < out.size(); ++k)
                out[k] += values_[i][k];
        return out;
    }

    /// The scalar measure x* o m.
    ScalarMeasure scalarize(std::span<const double> functional) const {
        if (functional.size() != codomain_.dim())
            throw DimensionError("functional has wrong dimension");
        ScalarMeasure s{std::vector<double>(atoms(), 0.0)};
        for (std::size_t i = 0; i < atoms(); ++i)
            for (std::size_t k = 0; k < functional.size(); ++k)
                s.atom_values[i] += functional[k] * values_[i][k];
        return s;
    }

    bool positive() const {
        for (auto i : ring_atoms_.atoms())
            for (double v : values_[i])
                if (v < 0.0)
                    return false;
        return true;
    }

  private:
    static std::vector<std::optional<FnVec>> wrap(std::vector<FnVec> values) {
        std::vector<std::optional<FnVec>> out;
        out.reserve(values.size());
        for (auto& v : values)
            out.emplace_back(std::move(v));
        return out;
    }

    std::vector<FnVec> values_;
    MSet ring_atoms_;
    NormedCodomain codomain_;
};

namespace detail {

/// Euclidean case in dimension <= 2: the maximizing sign pattern is
/// sign<x*, w_j> for x* inside a cell of the line arrangement {w_j^perp}, so
/// one direction per cell suffices.
inline double planar_signed_sum(const std::vector<FnVec>& terms, std::size_t dim) {
    if (dim == 1) {
        double s = 0.0;
        for (const auto& w : terms)
            s += std::fabs(w[0]);
        return s;
    }
    const double pi = std::acos(-1.0);
    std::vector<double> cuts;
    for (const auto& w : terms)
        if (w[0] != 0.0 || w[1] != 0.0)
            cuts.push_back(std::fmod(std::atan2(w[1], w[0]) + 1.5 * pi, pi));
    if (cuts.empty())
        return 0.0;
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double best = 0.0;
    for (std::size_t c = 0; c < cuts.size(); ++c) {
        const double next = c + 1 < cuts.size() ? cuts[c + 1] : cuts[0] + pi;
        const double a = 0.5 * (cuts[c] + next);
        const double x = std::cos(a), y = std::sin(a);
        double sx = 0.0, sy = 0.0;
        for (const auto& w : terms) {
            const double sg = x * w[0] + y * w[1] >= 0.0 ? 1.0 : -1.0;
            sx += sg * w[0];
            sy += sg * w[1];
        }
        best = std::max(best, std::hypot(sx, sy));
    }
    return best;
}

/// max over eps in {+-1}^k of || sum_j eps_j w_j ||_E, by Gray-code walk with
/// the first sign fixed (the norm is even).
inline double max_signed_sum(const std::vector<FnVec>& terms, const NormedCodomain& codomain) {
    if (terms.empty())
        return 0.0;
    if (terms.size() > sign_enumeration_cap) {
        if (codomain.is_lp() && codomain.s() == 2.0 && codomain.dim() <= 2)
            return planar_signed_sum(terms, codomain.dim());
        throw DimensionError("sign enumeration is capped at 20 atoms (beyond it only l^2 codomains of dimension <= 2)");
    }
    const std::size_t dim = codomain.dim();
    // A lattice norm of nonnegative vectors is maximized at all-plus signs.
    if (codomain.lattice()) {
        bool nonneg = true;
        for (const auto& w : terms)
            for (double v : w)
                nonneg = nonneg && v >= 0.0;
        if (nonneg) {
            FnVec acc(dim, 0.0);
            for (const auto& w : terms)
                for (std::size_t k = 0; k < dim; ++k)
                    acc[k] += w[k];
            return codomain.norm(acc);
        }
    }
    FnVec acc(dim, 0.0);
    for (const auto& w : terms)
        for (std::size_t k = 0; k < dim; ++k)
            acc[k] += w[k];
    std::vector<int> sign(terms.size(), 1);
    double best = codomain.norm(acc);
    const std::uint64_t patterns = std::uint64_t{1} << (terms.size() - 1);
    for (std::uint64_t g = 1; g < patterns; ++g) {
        // Bit that changes between Gray codes g-1 and g; term 0 keeps sign +1.
        const std::size_t j = static_cast<std::size_t>(std::countr_zero(g)) + 1;
        sign[j] = -sign[j];
        for (std::size_t k = 0; k < dim; ++k)
            acc[k] += 2.0 * sign[j] * terms[j][k];
        best = std::max(best, codomain.norm(acc));
    }
    return best;
}

} // namespace detail

/// ||m||(A) = sup over the dual ball of |x* m|(A).
inline double semivariation(const VectorMeasure& m, MSet a) {
    if (!a.subset_of(MSet::full(m.atoms())))
        throw DimensionError("set exceeds the atom range");
    std::vector<FnVec> terms;
    for (auto i : a.atoms())
        if (m.defined(i))
            terms.push_back(m.atom_value(i));
    return detail::max_signed_sum(terms, m.codomain());
}

/// Control measure eta: eta_i = ||m||({i}), equivalent to the semivariation.
inline std::vector<double> control_weights(const VectorMeasure& m) {
    std::vector<double> eta(m.atoms(), 0.0);
    for (auto i : m.ring_atoms().atoms())
        eta[i] = m.codomain().norm(m.atom_value(i));
    return eta;
}

/// Does f vanish off the ring atoms? (Otherwise f is not in L^1(m).)
inline bool supported_in_ring(const VectorMeasure& m, std::span<const double> f) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0 && !m.defined(i))
            return false;
    return true;
}

/// ||f||_{L^1(m)}; +inf when f is nonzero on an atom outside the ring.
inline double l1m_norm(const VectorMeasure& m, std::span<const double> f) {
    if (f.size() != m.atoms())
        throw DimensionError("function and measure have different atom counts");
    require_finite(f);
    if (!supported_in_ring(m, f))
        return inf;
    std::vector<FnVec> terms;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0.0 || std::isinf(f[i]))
            continue;
        FnVec w = m.atom_value(i);
        for (auto& v : w)
            v *= f[i];
        terms.push_back(std::move(w));
    }
    for (std::size_t i = 0; i < f.size(); ++i)
        if (std::isinf(f[i]) && m.codomain().norm(m.atom_value(i)) > 0.0)
            return inf;
    return detail::max_signed_sum(terms, m.codomain());
}

/// ||f||_{L^p(m)} = || |f|^p ||_{L^1(m)}^{1/p}.
inline double lpm_norm(const VectorMeasure& m, double p, std::span<const double> f) {
    if (!(p > 0.0) || std::isinf(p))
        throw DomainError("L^p(m) needs 0 < p < inf");
    const double v = l1m_norm(m, pow_abs(f, p));
    return std::isinf(v) ? inf : std::pow(v, 1.0 / p);
}

/// int_A f dm = sum_{i in A} f_i m({i}).
inline FnVec integrate(const VectorMeasure& m, std::span<const double> f, MSet a) {
    if (f.size() != m.atoms())
        throw DimensionError("function and measure have different atom counts");
    require_finite(f);
    if (!supported_in_ring(m, f))
        throw DomainError("function is not integrable: nonzero outside the delta-ring");
    FnVec out(m.codomain().dim(), 0.0);
    for (auto i : a.atoms()) {
        if (i >= f.size())
            throw DimensionError("set exceeds the atom range");
        if (f[i] == 0.0)
            continue;
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] += f[i] * m.atom_value(i)[k];
    }
    return out;
}

inline FnVec integrate(const VectorMeasure& m, std::span<const double> f) {
    return integrate(m, f, MSet::full(m.atoms()));
}

/// m_g(A) = I_m(g chi_A).
inline VectorMeasure derived_measure(const VectorMeasure& m, std::span<const double> g) {
    if (g.size() != m.atoms())
        throw DimensionError("density and measure have different atom counts");
    if (!std::isfinite(l1m_norm(m, g)))
        throw DomainError("density is not in L^1(m)");
    std::vector<std::optional<FnVec>> values(m.atoms());
    for (std::size_t i = 0; i < m.atoms(); ++i) {
        if (!m.defined(i))
            continue;
        FnVec v = m.atom_value(i);
        for (auto& x : v)
            x *= g[i];
        values[i] = std::move(v);
    }
    return VectorMeasure(std::move(values), m.codomain());
}

/// For a positive measure, ||f||_m = ||I_m(|f|)||_E. Returns whether that holds to 1e-9.
inline bool positive_norm_identity(const VectorMeasure& m, std::span<const double> f) {
    if (!m.positive())
        throw DomainError("measure is not positive");
    const double lhs = l1m_norm(m, f);
    if (std::isinf(lhs))
        return false;
    const double rhs = m.codomain().norm(integrate(m, abs(f)));
    return std::fabs(lhs - rhs) <= 1e-9 * std::max(1.0, lhs);
}

} // namespace latticelab
