#include <doctest.h>

#include <chrono>
#include <random>

#include "cmcforge/iwasawa.hpp"

using namespace cmcforge;

namespace {
std::mt19937_64 rng(17);

LaurentLoop random_unipotent(bool upper, int deg) {
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    LaurentLoop l = LaurentLoop::identity();
    for (int k = 0; k <= deg; ++k) {
        Mat2 c = mat2_zero();
        if (upper)
            c(0, 1) = cplx(u(rng), u(rng));
        else
            c(1, 0) = cplx(u(rng), u(rng));
        LaurentLoop add = LaurentLoop::monomial(k - deg / 2, c);
        l = l + add;
    }
    return l;
}

double circle_recon_error(const LaurentLoop& phi, const IwasawaFactors& fac, int N) {
    double e = 0.0;
    for (cplx lam : LaurentLoop::circle_points(N))
        e = std::max(e, max_abs(Mat2(fac.F.eval(lam) * fac.Bplus.eval(lam) - phi.eval(lam))));
    return e;
}
} // namespace

TEST_CASE("gram loop is the circle adjoint square") {
    LaurentLoop phi = LaurentLoop::identity();
    phi.set_coefficient(-1, (Mat2() << cplx(0.0), cplx(1.0), cplx(0.0), cplx(0.0)).finished());
    LaurentLoop G = gram_loop(phi);
    for (cplx lam : LaurentLoop::circle_points(8)) {
        Mat2 want = phi.eval(lam).adjoint() * phi.eval(lam);
        CHECK(max_abs(Mat2(G.eval(lam) - want)) < 1e-14);
    }
}

TEST_CASE("constant positive loops factor by cholesky") {
    Mat2 g = mat2_zero();
    g(0, 0) = 2.0;
    g(1, 1) = 3.0;
    LaurentLoop B = spectral_factor(LaurentLoop::monomial(0, g));
    CHECK(B.lo() == 0);
    CHECK(B.hi() == 0);
    CHECK(std::abs(B.coefficient(0)(0, 0) - cplx(std::sqrt(2.0))) < 1e-12);
    CHECK(std::abs(B.coefficient(0)(1, 1) - cplx(std::sqrt(3.0))) < 1e-12);
}

TEST_CASE("hand-checked unipotent factorization") {
    LaurentLoop phi = LaurentLoop::identity();
    phi.set_coefficient(-1, (Mat2() << cplx(0.0), cplx(1.0), cplx(0.0), cplx(0.0)).finished());
    IwasawaFactors fac = iwasawa(phi);
    const double is2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(fac.F.coefficient(0)(0, 0) - cplx(is2)) < 1e-10);
    CHECK(std::abs(fac.F.coefficient(0)(1, 1) - cplx(is2)) < 1e-10);
    CHECK(std::abs(fac.F.coefficient(-1)(0, 1) - cplx(is2)) < 1e-10);
    CHECK(std::abs(fac.F.coefficient(1)(1, 0) + cplx(is2)) < 1e-10);
    CHECK(std::abs(fac.Bplus.coefficient(0)(0, 0) - cplx(is2)) < 1e-10);
    CHECK(std::abs(fac.Bplus.coefficient(0)(1, 1) - cplx(std::sqrt(2.0))) < 1e-10);
    CHECK(std::abs(fac.Bplus.coefficient(0)(0, 1)) < 1e-10);
    CHECK(std::abs(fac.Bplus.coefficient(1)(1, 0) - cplx(is2)) < 1e-10);
    CHECK(circle_recon_error(phi, fac, 32) < 1e-10);
}

TEST_CASE("random loops factor with unitary and analytic parts") {
    for (int trial = 0; trial < 8; ++trial) {
        LaurentLoop phi = random_unipotent(true, 2) * random_unipotent(false, 2) *
                          random_unipotent(true, 2);
        auto t0 = std::chrono::steady_clock::now();
        IwasawaFactors fac = iwasawa(phi);
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(elapsed < 1.0);
        CHECK(fac.Bplus.lo() >= 0);
        Mat2 b0 = fac.Bplus.eval(cplx(0.0));
        CHECK(std::abs(b0(1, 0)) < 1e-9);
        CHECK(b0(0, 0).real() > 0.0);
        CHECK(b0(1, 1).real() > 0.0);
        CHECK(std::abs(b0(0, 0).imag()) < 1e-9);
        CHECK(std::abs(b0(1, 1).imag()) < 1e-9);
        CHECK(circle_recon_error(phi, fac, 64) < 1e-8);
        for (cplx lam : LaurentLoop::circle_points(32)) {
            Mat2 F = fac.F.eval(lam);
            CHECK(max_abs(Mat2(F.adjoint() * F - mat2_id())) < 1e-8);
        }
    }
}

TEST_CASE("constant unitary left factors leave the analytic part alone") {
    LaurentLoop phi = random_unipotent(true, 2) * random_unipotent(false, 1);
    Mat2 U;
    const double c = std::cos(0.4), s = std::sin(0.4);
    U << cplx(c), cplx(s), cplx(-s), cplx(c);
    LaurentLoop Uphi = LaurentLoop::monomial(0, U) * phi;
    IwasawaFactors a = iwasawa(phi);
    IwasawaFactors b = iwasawa(Uphi);
    for (int k = a.Bplus.lo(); k <= a.Bplus.hi(); ++k)
        CHECK(max_abs(Mat2(a.Bplus.coefficient(k) - b.Bplus.coefficient(k))) < 1e-8);
}

TEST_CASE("factorization rejects loops that are singular on the circle") {
    // phi with det vanishing at lambda = 1
    Mat2 c0 = mat2_id(), c1 = mat2_zero();
    c1(0, 0) = -1.0;
    LaurentLoop phi(0, {c0, c1});
    CHECK_THROWS(iwasawa(phi));
}
