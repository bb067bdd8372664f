#include <doctest.h>

#include "cmcforge/poly.hpp"

using namespace cmcforge;

TEST_CASE("poly eval and arithmetic") {
    Poly p({cplx(1.0), cplx(2.0), cplx(3.0)}); // 1 + 2x + 3x^2
    CHECK(p.degree() == 2);
    CHECK(std::abs(p.eval(2.0) - cplx(17.0)) < 1e-15);
    Poly q({cplx(0.0), cplx(1.0)});
    Poly pq = p * q;
    CHECK(pq.degree() == 3);
    CHECK(std::abs(pq.eval(cplx(0.5, 0.5)) - p.eval(cplx(0.5, 0.5)) * cplx(0.5, 0.5)) < 1e-15);
    Poly s = p + q - q;
    CHECK(s.degree() == 2);
    for (int k = 0; k <= 2; ++k) CHECK(std::abs(s.coefficient(k) - p.coefficient(k)) < 1e-15);
}

TEST_CASE("trailing zeros trimmed") {
    Poly p({cplx(1.0), cplx(0.0), cplx(0.0)});
    CHECK(p.degree() == 0);
    Poly z({cplx(0.0)});
    CHECK(z.is_zero());
    CHECK(z.degree() == -1);
    CHECK(std::abs(z.eval(3.0)) == 0.0);
    Poly diff = p - Poly::constant(1.0);
    CHECK(diff.is_zero());
}

TEST_CASE("from_roots reproduces its roots") {
    std::vector<cplx> roots{cplx(0.3, 0.1), cplx(-1.2, 0.0), cplx(0.0, 2.0)};
    Poly p = Poly::from_roots(roots, cplx(2.0));
    CHECK(p.degree() == 3);
    CHECK(std::abs(p.coefficient(3) - cplx(2.0)) < 1e-15);
    for (const cplx& r : roots) CHECK(std::abs(p.eval(r)) < 1e-13);
}

TEST_CASE("derivative") {
    Poly p({cplx(5.0), cplx(-1.0), cplx(0.0), cplx(2.0)}); // 5 - x + 2x^3
    Poly d = p.derivative();
    CHECK(d.degree() == 2);
    CHECK(std::abs(d.eval(2.0) - cplx(-1.0 + 24.0)) < 1e-14);
    CHECK(Poly::constant(4.0).derivative().is_zero());
}

TEST_CASE("out-of-range coefficients are zero") {
    Poly p({cplx(1.0), cplx(2.0)});
    CHECK(std::abs(p.coefficient(5)) == 0.0);
    CHECK(std::abs(p.coefficient(-1)) == 0.0);
    CHECK(p.max_coefficient_abs() == 2.0);
}
