#include <doctest.h>

#include <random>

#include "cmcforge/unitarizer.hpp"

using namespace cmcforge;

namespace {
Mat2 random_su2(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::Vector4d q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    Mat2 m;
    m << cplx(q[0], q[1]), cplx(q[2], q[3]), cplx(-q[2], q[3]), cplx(q[0], -q[1]);
    return m;
}
} // namespace

TEST_CASE("hand-checked single-matrix unitarizer") {
    Mat2 M;
    M << cplx(0.0), cplx(2.0), cplx(-0.5), cplx(0.0);
    UnitarizerResult r = solve_unitarizer({M});
    CHECK(std::abs(r.rho - 0.5) < 1e-10);
    Mat2 C = r.conjugated(M);
    CHECK(max_abs(Mat2(C.adjoint() * C - mat2_id())) < 1e-12);
    CHECK(r.residual < 1e-10);
}

TEST_CASE("recovers the conjugation scale of a dressed unitary family") {
    std::mt19937_64 rng(5);
    const double s = 2.0;
    Mat2 E = mat2_zero();
    E(0, 0) = s;
    E(1, 1) = 1.0 / s;
    std::vector<Mat2> Ms;
    for (int k = 0; k < 6; ++k) Ms.push_back(E * random_su2(rng) * inv2(E));
    UnitarizerResult r = solve_unitarizer(Ms);
    CHECK(std::abs(r.rho - 1.0 / (s * s)) < 1e-8);
    CHECK(r.residual < 1e-8);
    for (const Mat2& M : Ms) {
        Mat2 C = r.conjugated(M);
        CHECK(max_abs(Mat2(C.adjoint() * C - mat2_id())) < 1e-7);
    }
}

TEST_CASE("warm start agrees with the global scan") {
    std::mt19937_64 rng(9);
    Mat2 E = mat2_zero();
    E(0, 0) = 1.7;
    E(1, 1) = 1.0 / 1.7;
    std::vector<Mat2> Ms;
    for (int k = 0; k < 4; ++k) Ms.push_back(E * random_su2(rng) * inv2(E));
    UnitarizerResult cold = solve_unitarizer(Ms);
    UnitarizerResult warm = solve_unitarizer_near(Ms, 0.5);
    CHECK(std::abs(cold.rho - warm.rho) < 1e-8);
}

TEST_CASE("minimizer sits at an energy minimum") {
    std::mt19937_64 rng(21);
    Mat2 E = mat2_zero();
    E(0, 0) = 1.3;
    E(1, 1) = 1.0 / 1.3;
    std::vector<Mat2> Ms;
    for (int k = 0; k < 3; ++k) Ms.push_back(E * random_su2(rng) * inv2(E));
    UnitarizerResult r = solve_unitarizer(Ms);
    double e0 = unitarizer_energy(Ms, r.rho);
    CHECK(unitarizer_energy(Ms, r.rho * 1.05) >= e0);
    CHECK(unitarizer_energy(Ms, r.rho / 1.05) >= e0);
}

TEST_CASE("field evaluation is reproducible and guarded") {
    SurfaceParams p;
    p.genus = 2;
    p.z0 = unit_phase(-kPi / 4.0);
    p.z1 = unit_phase(kPi / 4.0);
    p.lambda1 = cplx(0.0, 1.0);
    p.lambda2 = cplx(0.0, -1.0);
    p.rectangular = true;
    p.even_lambda = true;
    AccessorySeries s = AccessorySeries::zero(2);
    s.a = {cplx(0.2), cplx(0.0), cplx(0.1)};
    s.c = {cplx(0.8), cplx(0.0), cplx(-0.3)};
    std::vector<cplx> mus;
    for (int j = 0; j < 6; ++j) mus.push_back(unit_phase(0.3 + 2.0 * kPi * j / 6.0));
    UnitarizerField f1 = unitarizer_field(p, s, mus);
    UnitarizerField f2 = unitarizer_field(p, s, mus);
    REQUIRE(f1.at.size() == 6);
    for (size_t k = 0; k < 6; ++k) CHECK(f1.at[k].rho == f2.at[k].rho);
    CHECK(f1.max_residual == f2.max_residual);
    CHECK(f1.max_residual > 0.0);
    // at an unsolved point the family is far from unitarizable, so a strict
    // threshold must trip
    CHECK_THROWS(unitarizer_field(p, s, mus, {}, 1e-12));
}
