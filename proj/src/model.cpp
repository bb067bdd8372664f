#include "cmcforge/model.hpp"

#include <stdexcept>

namespace cmcforge {

namespace {
constexpr double kUnitCircleTol = 1e-12;
}

void SurfaceParams::validate() const {
    if (genus < 1) throw std::invalid_argument("params: genus must be >= 1");
    if (z0 == cplx(0.0) || z1 == cplx(0.0)) throw std::invalid_argument("params: branch values must be nonzero");
    if (z0 == z1 || z0 == -z1) throw std::invalid_argument("params: branch values must be distinct up to sign");
    if (std::abs(std::abs(lambda1) - 1.0) > kUnitCircleTol || std::abs(std::abs(lambda2) - 1.0) > kUnitCircleTol)
        throw std::invalid_argument("params: evaluation points must lie on the unit circle");
    if (std::abs(lambda1 - lambda2) <= kUnitCircleTol)
        throw std::invalid_argument("params: evaluation points must be distinct");
    if (rectangular) {
        if (std::abs(z1 - std::conj(z0)) > kUnitCircleTol || std::abs(std::abs(z0) - 1.0) > kUnitCircleTol)
            throw std::invalid_argument("params: rectangular requires z1 = conj(z0) with |z0| = 1");
        if (std::abs(lambda2 - std::conj(lambda1)) > kUnitCircleTol)
            throw std::invalid_argument("params: rectangular requires lambda2 = conj(lambda1)");
    }
}

double SurfaceParams::min_singular_separation() const {
    std::vector<cplx> pts = punctures();
    pts.push_back(0.0);
    double d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) d = std::min(d, std::abs(pts[i] - pts[j]));
    return d;
}

AccessorySeries AccessorySeries::zero(int N) {
    AccessorySeries s;
    s.N = N;
    s.a.assign(static_cast<size_t>(N) + 1, 0.0);
    s.c.assign(static_cast<size_t>(N) + 1, 0.0);
    return s;
}

void AccessorySeries::validate(const SurfaceParams& params) const {
    if (N < 0) throw std::invalid_argument("series: N must be >= 0");
    if (a.size() != static_cast<size_t>(N) + 1 || c.size() != static_cast<size_t>(N) + 1)
        throw std::invalid_argument("series: coefficient arrays must have length N+1");
    if (params.rectangular) {
        for (cplx v : a)
            if (v.imag() != 0.0) throw std::invalid_argument("series: rectangular requires real a coefficients");
        for (cplx v : c)
            if (v.imag() != 0.0) throw std::invalid_argument("series: rectangular requires real c coefficients");
    }
    if (params.even_lambda) {
        for (int k = 1; k <= N; k += 2)
            if (a[static_cast<size_t>(k)] != cplx(0.0) || c[static_cast<size_t>(k)] != cplx(0.0))
                throw std::invalid_argument("series: even_lambda requires vanishing odd coefficients");
    }
}

AccessorySeries AccessorySeries::padded(int newN) const {
    if (newN < N) throw std::invalid_argument("series: cannot pad to a smaller N");
    AccessorySeries s = zero(newN);
    for (int k = 0; k <= N; ++k) {
        s.a[static_cast<size_t>(k)] = a[static_cast<size_t>(k)];
        s.c[static_cast<size_t>(k)] = c[static_cast<size_t>(k)];
    }
    return s;
}

ClosingPolynomials build_closing(const SurfaceParams& params) {
    params.validate();
    const cplx l1 = params.lambda1, l2 = params.lambda2;
    const cplx w1 = params.z0 * params.z0, w2 = params.z1 * params.z1;

    // Hermite conditions as a 4x4 linear system in the cubic coefficients.
    Eigen::Matrix4cd V;
    Eigen::Vector4cd rhs;
    V << cplx(1.0), l1, l1 * l1, l1 * l1 * l1,
         cplx(1.0), l2, l2 * l2, l2 * l2 * l2,
         cplx(0.0), cplx(1.0), 2.0 * l1, 3.0 * l1 * l1,
         cplx(0.0), cplx(1.0), 2.0 * l2, 3.0 * l2 * l2;
    rhs << w1 * l1, w2 * l2, w1, w2;
    Eigen::Vector4cd sol = V.fullPivLu().solve(rhs);

    ClosingPolynomials cp;
    cp.f = Poly({sol(0), sol(1), sol(2), sol(3)});
    cp.h = Poly::from_roots({l1, l1, l2, l2});
    return cp;
}

Poly auxiliary_R(const SurfaceParams& params, const AccessorySeries& series) {
    const double g = static_cast<double>(params.genus);
    Poly A = series.A_poly();
    return A * (A + Poly::constant((1.0 - g) / (1.0 + g)));
}

Poly reconstruct_B(const SurfaceParams& params, const AccessorySeries& series) {
    series.validate(params);
    ClosingPolynomials cp = build_closing(params);
    return cp.f * auxiliary_R(params, series) + cp.h * series.C_poly();
}

Mat2 eval_potential(const SurfaceParams& params, cplx A_val, cplx B_val, cplx z, cplx lambda) {
    if (lambda == cplx(0.0)) throw std::domain_error("eval_potential: lambda = 0");
    if (B_val == cplx(0.0)) throw std::domain_error("eval_potential: B(lambda) = 0");
    if (z == cplx(0.0) || z == params.z0 || z == -params.z0 || z == params.z1 || z == -params.z1)
        throw std::domain_error("eval_potential: z at a pole");

    const double g = static_cast<double>(params.genus);
    const cplx w0 = params.z0 * params.z0, w1 = params.z1 * params.z1;
    const cplx z2 = z * z;
    const cplx q = (z2 - w0) * (z2 - w1);

    const cplx diag = -(g / (g + 1.0)) * z * (2.0 * z2 - w0 - w1) / q + A_val / z;
    const cplx upper = 1.0 / lambda - (A_val + 2.0 / (g + 1.0)) * (A_val + (1.0 - g) / (1.0 + g)) / B_val * z2;
    const cplx lower = B_val / q - lambda * A_val * (A_val + 1.0) * w0 * w1 / (z2 * q);

    Mat2 eta;
    eta << diag, upper, lower, -diag;
    return eta;
}

cplx mean_curvature(const SurfaceParams& params) {
    return cplx(0.0, 1.0) * (params.lambda1 + params.lambda2) / (params.lambda1 - params.lambda2);
}

cplx conformal_type(const SurfaceParams& params) {
    const cplx s = params.z0 + params.z1;
    if (s == cplx(0.0)) throw std::domain_error("conformal_type: z0 + z1 = 0");
    return 4.0 * params.z0 * params.z1 / (s * s);
}

} // namespace cmcforge
