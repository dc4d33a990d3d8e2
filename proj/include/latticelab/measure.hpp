#pragma once

// Finite atomic measure spaces, a.e.-classes of functions and measurable sets.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace latticelab {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Base for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shapes of inputs do not agree (atom counts, matrix sizes).
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A mathematical precondition was violated (bad exponent, NaN, f not in X).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A standing hypothesis of a construction is not met (e.g. the sigma-property).
/// Checkers map this to "skip", never to "fail".
class HypothesisError : public Error {
  public:
    using Error::Error;
};

/// A function on the atoms. Equality is only meaningful off null atoms.
using FnVec = std::vector<double>;

/// Subset of the atom index range {0..n-1}, stored as a bitmask.
struct MSet {
    std::uint64_t mask = 0;

    static constexpr std::size_t max_atoms = 64;

    static MSet full(std::size_t n) {
        if (n > max_atoms)
            throw DimensionError("MSet supports at most 64 atoms");
        return MSet{n == max_atoms ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1)};
    }
    static MSet single(std::size_t i) { return MSet{std::uint64_t{1} << i}; }
    static MSet of(std::initializer_list<std::size_t> atoms) {
        MSet s;
        for (auto i : atoms)
            s.mask |= std::uint64_t{1} << i;
        return s;
    }

    bool contains(std::size_t i) const { return (mask >> i) & 1U; }
    bool empty() const { return mask == 0; }
    std::size_t size() const { return static_cast<std::size_t>(std::popcount(mask)); }

    MSet operator|(MSet o) const { return {mask | o.mask}; }
    MSet operator&(MSet o) const { return {mask & o.mask}; }
    MSet operator-(MSet o) const { return {mask & ~o.mask}; }
    bool operator==(const MSet&) const = default;
    auto operator<=>(const MSet&) const = default;

    bool subset_of(MSet o) const { return (mask & ~o.mask) == 0; }

    std::vector<std::size_t> atoms() const {
        std::vector<std::size_t> out;
        for (std::uint64_t m = mask; m != 0; m &= m - 1)
            out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
        return out;
    }
};

inline FnVec indicator(std::size_t n, MSet a) {
    FnVec f(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (a.contains(i))
            f[i] = 1.0;
    return f;
}

/// Finite atomic measure: atom i carries mass weights[i] in [0, +inf].
class MeasureSpace {
  public:
    explicit MeasureSpace(std::vector<double> weights) : weights_(std::move(weights)) {
        if (weights_.empty())
            throw DomainError("a measure space needs at least one atom");
        for (double w : weights_)
            if (std::isnan(w) || w < 0.0)
                throw DomainError("atom weights must be nonnegative");
    }

    static MeasureSpace uniform(std::size_t n, double w = 1.0) {
        return MeasureSpace(std::vector<double>(n, w));
    }

    std::size_t size() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    double weight(std::size_t i) const { return weights_[i]; }
    bool null_atom(std::size_t i) const { return weights_[i] == 0.0; }

    MSet atoms() const { return MSet::full(size()); }

    /// Non-null atoms.
    MSet support() const {
        MSet s;
        for (std::size_t i = 0; i < size(); ++i)
            if (!null_atom(i))
                s.mask |= std::uint64_t{1} << i;
        return s;
    }

    bool operator==(const MeasureSpace&) const = default;

  private:
    std::vector<double> weights_;
};

inline void require_size(const MeasureSpace& space, std::span<const double> f) {
    if (f.size() != space.size())
        throw DimensionError("function has " + std::to_string(f.size()) + " values, space has " +
                             std::to_string(space.size()) + " atoms");
}

inline void require_finite(std::span<const double> f) {
    for (double v : f)
        if (std::isnan(v))
            throw DomainError("NaN in function values");
}

/// True iff every atom of `a` has weight zero.
inline bool is_null(const MeasureSpace& space, MSet a) {
    if (!a.subset_of(space.atoms()))
        throw DimensionError("set exceeds the atom range");
    for (auto i : a.atoms())
        if (!space.null_atom(i))
            return false;
    return true;
}

/// Equality of a.e.-classes: agreement on every atom of positive weight.
inline bool ae_equal(const MeasureSpace& space, std::span<const double> f, std::span<const double> g) {
    require_size(space, f);
    require_size(space, g);
    for (std::size_t i = 0; i < space.size(); ++i)
        if (!space.null_atom(i) && f[i] != g[i])
            return false;
    return true;
}

/// Canonical representative of the a.e.-class of f: null atoms set to zero.
inline FnVec canonical(const MeasureSpace& space, std::span<const double> f) {
    require_size(space, f);
    FnVec out(f.begin(), f.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (space.null_atom(i))
            out[i] = 0.0;
    return out;
}

inline bool ae_zero(const MeasureSpace& space, std::span<const double> f) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!space.null_atom(i) && f[i] != 0.0)
            return false;
    return true;
}

// Atomwise lattice operations.

inline FnVec abs(std::span<const double> f) {
    FnVec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = std::fabs(f[i]);
    return out;
}

inline FnVec pow_abs(std::span<const double> f, double p) {
    FnVec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = std::pow(std::fabs(f[i]), p);
    return out;
}

inline FnVec sup(std::span<const double> f, std::span<const double> g) {
    FnVec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = std::max(f[i], g[i]);
    return out;
}

inline FnVec inf_of(std::span<const double> f, std::span<const double> g) {
    FnVec out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        out[i] = std::min(f[i], g[i]);
    return out;
}

/// (sum_j |f_j|^q)^{1/q} atomwise; q = inf gives the pointwise max.
inline FnVec q_sum(const std::vector<FnVec>& family, double q, std::size_t n) {
    FnVec out(n, 0.0);
    if (std::isinf(q)) {
        for (const auto& f : family)
            for (std::size_t i = 0; i < n; ++i)
                out[i] = std::max(out[i], std::fabs(f[i]));
        return out;
    }
    for (const auto& f : family)
        for (std::size_t i = 0; i < n; ++i)
            out[i] += std::pow(std::fabs(f[i]), q);
    for (auto& v : out)
        v = std::pow(v, 1.0 / q);
    return out;
}

} // namespace latticelab
