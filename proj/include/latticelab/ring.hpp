#pragma once

// The delta-ring Sigma_X = {A : chi_A in X} and the sigma-property.

#include "latticelab/space.hpp"

#include <cmath>
#include <vector>

namespace latticelab {

/// Atoms whose indicator has finite X-norm.
inline MSet finite_atoms(const SpaceExpr& x, const Budget& budget = {}) {
    const std::size_t n = x.atoms();
    MSet out;
    for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(eval_norm(x, indicator(n, MSet::single(i)), budget)))
            out.mask |= std::uint64_t{1} << i;
    return out;
}

/// Every set A with ||chi_A||_X < inf, by direct evaluation of each indicator.
/// Throws if the result fails the finite delta-ring axioms (closure under
/// union, intersection and difference), which would mean an evaluator is not
/// a lattice quasi-norm.
inline std::vector<MSet> delta_ring(const SpaceExpr& x, const Budget& budget = {}) {
    const std::size_t n = x.atoms();
    if (n > sign_enumeration_cap)
        throw DimensionError("delta-ring enumeration is capped at 20 atoms");
    std::vector<MSet> ring;
    std::vector<char> member(std::size_t{1} << n, 0);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
        if (std::isfinite(eval_norm(x, indicator(n, MSet{m}), budget))) {
            ring.push_back(MSet{m});
            member[m] = 1;
        }
    }
    for (const auto a : ring)
        for (const auto b : ring)
            if (!member[(a | b).mask] || !member[(a & b).mask] || !member[(a - b).mask])
                throw Error("delta-ring closure fails for " + x.to_string());
    return ring;
}

/// Every non-null atom has an indicator of finite norm.
inline bool sigma_property(const SpaceExpr& x, const Budget& budget = {}) {
    const MSet fin = finite_atoms(x, budget);
    return x.space().support().subset_of(fin);
}

} // namespace latticelab
