#pragma once

// Linear operators from a function space on the atoms into a normed codomain.

#include "latticelab/codomain.hpp"
#include "latticelab/space.hpp"
#include "latticelab/vector_measure.hpp"

#include <vector>

namespace latticelab {

class Operator {
  public:
    /// `matrix` is row-major with codomain.dim() rows and domain.atoms() columns.
    Operator(std::vector<std::vector<double>> matrix, SpaceExpr domain, NormedCodomain codomain)
        : matrix_(std::move(matrix)), domain_(std::move(domain)), codomain_(std::move(codomain)) {
        if (matrix_.size() != codomain_.dim())
            throw DimensionError("operator matrix has " + std::to_string(matrix_.size()) + " rows, codomain has dimension " +
                                 std::to_string(codomain_.dim()));
        for (const auto& row : matrix_) {
            if (row.size() != domain_.atoms())
                throw DimensionError("operator matrix row length differs from the atom count");
            require_finite(row);
        }
    }

    /// Identity matrix into unweighted l^s.
    static Operator identity(SpaceExpr domain, double s) {
        const std::size_t n = domain.atoms();
        return Operator(identity_matrix(n), std::move(domain), NormedCodomain(n, s));
    }

    /// The identity X -> X, the codomain normed by X itself.
    static Operator space_identity(const SpaceExpr& x, const Budget& budget = {}) {
        const std::size_t n = x.atoms();
        auto norm = [x, budget](std::span<const double> v) { return eval_norm(x, v, budget); };
        Operator op(identity_matrix(n), x, NormedCodomain::custom(n, norm, x.to_string(), true));
        op.space_identity_ = true;
        return op;
    }

    /// The integration operator I_m on `domain`: f -> sum_i f_i m({i}).
    static Operator integration(const VectorMeasure& m, SpaceExpr domain) {
        if (m.atoms() != domain.atoms())
            throw DimensionError("measure and domain have different atom counts");
        std::vector<std::vector<double>> mat(m.codomain().dim(), std::vector<double>(m.atoms(), 0.0));
        for (std::size_t i = 0; i < m.atoms(); ++i)
            for (std::size_t k = 0; k < mat.size(); ++k)
                mat[k][i] = m.atom_value(i)[k];
        return Operator(std::move(mat), std::move(domain), m.codomain());
    }

    /// Same matrix and codomain on a different domain space.
    Operator with_domain(SpaceExpr domain) const {
        Operator op(matrix_, std::move(domain), codomain_);
        return op;
    }

    /// Same map with every entry multiplied by alpha.
    Operator scaled(double alpha) const {
        auto mat = matrix_;
        for (auto& row : mat)
            for (auto& v : row)
                v *= alpha;
        return Operator(std::move(mat), domain_, codomain_);
    }

    const std::vector<std::vector<double>>& matrix() const { return matrix_; }
    const SpaceExpr& domain() const { return domain_; }
    const NormedCodomain& codomain() const { return codomain_; }
    std::size_t rows() const { return matrix_.size(); }
    std::size_t cols() const { return domain_.atoms(); }
    bool is_space_identity() const { return space_identity_; }

    bool is_identity_matrix() const {
        if (rows() != cols())
            return false;
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < cols(); ++c)
                if (matrix_[r][c] != (r == c ? 1.0 : 0.0))
                    return false;
        return true;
    }

    bool nonnegative() const {
        for (const auto& row : matrix_)
            for (double v : row)
                if (v < 0.0)
                    return false;
        return true;
    }

    bool zero() const {
        for (const auto& row : matrix_)
            for (double v : row)
                if (v != 0.0)
                    return false;
        return true;
    }

    /// T(f) on the a.e.-class of f (null atoms are zeroed first).
    FnVec apply(std::span<const double> f) const {
        const FnVec g = canonical(domain_.space(), f);
        FnVec out(rows(), 0.0);
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < cols(); ++c)
                if (g[c] != 0.0)
                    out[r] += matrix_[r][c] * g[c];
        return out;
    }

    double apply_norm(std::span<const double> f) const { return codomain_.norm(apply(f)); }

  private:
    static std::vector<std::vector<double>> identity_matrix(std::size_t n) {
        std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            m[i][i] = 1.0;
        return m;
    }

    std::vector<std::vector<double>> matrix_;
    SpaceExpr domain_;
    NormedCodomain codomain_;
    bool space_identity_ = false;
};

} // namespace latticelab
