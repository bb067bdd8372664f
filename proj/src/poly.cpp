#include "cmcforge/poly.hpp"

namespace cmcforge {

Poly::Poly(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

Poly Poly::constant(cplx c) { return Poly(std::vector<cplx>{c}); }

Poly Poly::from_roots(const std::vector<cplx>& roots, cplx leading) {
    Poly p = constant(leading);
    for (cplx r : roots) p = p * Poly({-r, 1.0});
    return p;
}

cplx Poly::coefficient(int k) const {
    if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
    return coeffs_[static_cast<size_t>(k)];
}

cplx Poly::eval(cplx x) const {
    cplx acc = 0.0;
    for (size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
    return acc;
}

Poly Poly::derivative() const {
    if (coeffs_.size() <= 1) return {};
    std::vector<cplx> d(coeffs_.size() - 1);
    for (size_t i = 1; i < coeffs_.size(); ++i) d[i - 1] = coeffs_[i] * double(i);
    return Poly(std::move(d));
}

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<cplx> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (size_t i = 0; i < a.coeffs_.size(); ++i)
        for (size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Poly(std::move(out));
}

Poly operator+(const Poly& a, const Poly& b) {
    std::vector<cplx> out(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.coefficient(static_cast<int>(i)) + b.coefficient(static_cast<int>(i));
    return Poly(std::move(out));
}

Poly operator-(const Poly& a, const Poly& b) { return a + b * cplx(-1.0); }

Poly Poly::operator*(cplx s) const {
    std::vector<cplx> out = coeffs_;
    for (auto& c : out) c *= s;
    return Poly(std::move(out));
}

double Poly::max_coefficient_abs() const {
    double v = 0.0;
    for (cplx c : coeffs_) v = std::max(v, std::abs(c));
    return v;
}

void Poly::trim() {
    while (!coeffs_.empty() && coeffs_.back() == cplx(0.0, 0.0)) coeffs_.pop_back();
}

} // namespace cmcforge
