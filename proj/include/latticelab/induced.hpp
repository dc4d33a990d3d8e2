#pragma once

// The vector measure m_T(A) = T(chi_A) induced by an operator on Sigma_X.

#include "latticelab/operator.hpp"
#include "latticelab/ring.hpp"

namespace latticelab {

/// m_T on the delta-ring of T's domain. Refuses when the domain lacks the
/// sigma-property unless `strict` is off, in which case atoms with an
/// infinite-norm indicator are simply left out of the ring.
inline VectorMeasure measure_from_operator(const Operator& t, const Budget& budget = {}, bool strict = true) {
    const SpaceExpr& x = t.domain();
    const MSet fin = finite_atoms(x, budget);
    if (strict && !x.space().support().subset_of(fin))
        throw HypothesisError("domain " + x.to_string() +
                              " lacks the sigma-property: some non-null atom has an indicator of infinite norm");
    const std::size_t n = x.atoms();
    std::vector<std::optional<FnVec>> values(n);
    for (std::size_t i = 0; i < n; ++i)
        if (fin.contains(i))
            values[i] = t.apply(indicator(n, MSet::single(i)));
    return VectorMeasure(std::move(values), t.codomain());
}

/// Measure space carrying L^1(m): atoms of zero semivariation are null. Atoms
/// outside the ring stay non-null so that functions charging them are not
/// integrable.
inline std::shared_ptr<const MeasureSpace> control_space(const VectorMeasure& m) {
    std::vector<double> w = control_weights(m);
    for (std::size_t i = 0; i < m.atoms(); ++i)
        if (!m.defined(i))
            w[i] = 1.0;
    return std::make_shared<const MeasureSpace>(std::move(w));
}

} // namespace latticelab
