#pragma once

#include <vector>

#include "cmcforge/types.hpp"

namespace cmcforge {

// Dense complex polynomial c[0] + c[1] x + ... Trailing exact zeros are
// trimmed so degree() is meaningful; the zero polynomial has degree -1.
class Poly {
public:
    Poly() = default;
    explicit Poly(std::vector<cplx> coeffs);
    static Poly constant(cplx c);
    static Poly from_roots(const std::vector<cplx>& roots, cplx leading = 1.0);

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    cplx coefficient(int k) const;
    const std::vector<cplx>& coefficients() const { return coeffs_; }

    cplx eval(cplx x) const;
    Poly derivative() const;

    friend Poly operator*(const Poly& a, const Poly& b);
    friend Poly operator+(const Poly& a, const Poly& b);
    friend Poly operator-(const Poly& a, const Poly& b);
    Poly operator*(cplx s) const;

    double max_coefficient_abs() const;

private:
    void trim();
    std::vector<cplx> coeffs_;
};

} // namespace cmcforge
