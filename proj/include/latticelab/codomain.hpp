#pragma once

// Finite-dimensional normed codomains: unweighted l^s for s in [1, inf], or
// an arbitrary lattice norm supplied as a callable (used when the codomain
// is itself a function space).

#include "latticelab/measure.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>

namespace latticelab {

class NormedCodomain {
  public:
    using NormFn = std::function<double(std::span<const double>)>;

    NormedCodomain() = default;

    /// l^s on R^dim.
    NormedCodomain(std::size_t dim, double s) : dim_(dim), s_(s) {
        if (dim == 0)
            throw DimensionError("codomain dimension must be positive");
        if (!(s >= 1.0))
            throw DomainError("codomain exponent must satisfy s >= 1");
    }

    /// R^dim normed by `norm`. `lattice` declares that the norm depends only on
    /// absolute values and is monotone, which some shortcuts rely on.
    static NormedCodomain custom(std::size_t dim, NormFn norm, std::string label, bool lattice) {
        NormedCodomain c;
        c.dim_ = dim;
        c.s_ = 0.0;
        c.custom_ = std::make_shared<NormFn>(std::move(norm));
        c.label_ = std::move(label);
        c.lattice_ = lattice;
        return c;
    }

    std::size_t dim() const { return dim_; }
    bool is_lp() const { return custom_ == nullptr; }
    /// The exponent s of an l^s codomain.
    double s() const { return s_; }
    /// Conjugate exponent s'.
    double dual_s() const {
        if (s_ == 1.0)
            return inf;
        if (std::isinf(s_))
            return 1.0;
        return s_ / (s_ - 1.0);
    }
    bool lattice() const { return lattice_; }

    std::string label() const {
        if (custom_)
            return label_;
        return std::isinf(s_) ? std::string("l^inf") : "l^" + format_exponent(s_);
    }

    double norm(std::span<const double> x) const {
        if (x.size() != dim_)
            throw DimensionError("codomain vector has wrong dimension");
        if (custom_)
            return (*custom_)(x);
        return lp_norm(x, s_);
    }

    static double lp_norm(std::span<const double> x, double s) {
        if (std::isinf(s)) {
            double m = 0.0;
            for (double v : x)
                m = std::max(m, std::fabs(v));
            return m;
        }
        double acc = 0.0;
        for (double v : x)
            acc += std::pow(std::fabs(v), s);
        return std::pow(acc, 1.0 / s);
    }

    static std::string format_exponent(double p) {
        if (std::isinf(p))
            return "inf";
        std::string out = std::to_string(p);
        out.erase(out.find_last_not_of('0') + 1);
        if (!out.empty() && out.back() == '.')
            out.pop_back();
        return out;
    }

  private:
    std::size_t dim_ = 1;
    double s_ = 2.0;
    std::shared_ptr<const NormFn> custom_;
    std::string label_;
    bool lattice_ = true;
};

} // namespace latticelab
