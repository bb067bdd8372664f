#pragma once

#include <vector>

#include "cmcforge/poly.hpp"
#include "cmcforge/types.hpp"

namespace cmcforge {

// Geometry of one run: genus g, branch values +-z0, +-z1 of the
// (g+1)-fold cyclic cover y^{g+1} = (z^2 - z0^2)/(z^2 - z1^2), and the two
// evaluation points lambda1, lambda2 on the unit circle.
struct SurfaceParams {
    int genus = 2;
    cplx z0{1.0, 0.0};
    cplx z1{0.0, 1.0};
    cplx lambda1{0.0, 1.0};
    cplx lambda2{0.0, -1.0};
    bool rectangular = false; // z1 = conj(z0), |z0| = 1, lambda2 = conj(lambda1); real coefficients
    bool even_lambda = false; // A and B even in lambda; odd coefficients vanish

    void validate() const; // throws std::invalid_argument
    std::vector<cplx> punctures() const { return {z0, z1, -z0, -z1}; }
    // min pairwise distance among {0, z0, z1, -z0, -z1}
    double min_singular_separation() const;
};

// Truncated coefficient series A(lambda) = sum a_k lambda^k,
// C(lambda) = sum c_k lambda^k, k = 0..N.
struct AccessorySeries {
    int N = 0;
    std::vector<cplx> a, c; // each of size N+1

    static AccessorySeries zero(int N);
    void validate(const SurfaceParams& params) const;
    AccessorySeries padded(int newN) const; // zero-pad to a larger N
    Poly A_poly() const { return Poly(a); }
    Poly C_poly() const { return Poly(c); }
};

// Closing polynomials: f is the unique cubic Hermite interpolant with
// f(lambda_k) = z_{k-1}^2 lambda_k, f'(lambda_k) = z_{k-1}^2, and h has
// double roots at both lambda_k, so B = f*Rt + h*C matches the target
// z_{k-1}^2 lambda Rt(lambda) to first order at both points for every C.
struct ClosingPolynomials {
    Poly f; // degree <= 3
    Poly h; // (lambda - lambda1)^2 (lambda - lambda2)^2
};

ClosingPolynomials build_closing(const SurfaceParams& params);

// Rt(lambda) = A(lambda) * (A(lambda) + (1-g)/(1+g))
Poly auxiliary_R(const SurfaceParams& params, const AccessorySeries& series);

// B = f * Rt + h * C
Poly reconstruct_B(const SurfaceParams& params, const AccessorySeries& series);

// The flat family coefficient matrix eta(z, lambda) given the scalar values
// A_val = A(lambda), B_val = B(lambda). Traceless; poles at 0, +-z0, +-z1.
Mat2 eval_potential(const SurfaceParams& params, cplx A_val, cplx B_val, cplx z, cplx lambda);

// H = i (lambda1 + lambda2) / (lambda1 - lambda2); real in the rectangular case
cplx mean_curvature(const SurfaceParams& params);

// Cross-ratio 4 z0 z1 / (z0 + z1)^2 of the branch values (z0, z1; -z0, -z1)
cplx conformal_type(const SurfaceParams& params);

} // namespace cmcforge
