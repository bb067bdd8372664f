#pragma once

#include "cmcforge/loop.hpp"

namespace cmcforge {

// G = circle_adjoint(phi) * phi; self-adjoint and positive definite on the
// unit circle whenever phi is invertible there.
LaurentLoop gram_loop(const LaurentLoop& phi);

struct SpectralOptions {
    int order = 0;            // Toeplitz block order; 0 = 4 * deg(G)
    int max_order = 8192;     // doubling cap
    double tol = 1e-10;       // boundary-row stabilization target
    int circle_checks = 64;   // positivity / reconstruction sample count
};

// Analytic factor Bplus = sum_{k=0}^{deg G} B_k lambda^k with
// circle_adjoint(Bplus) * Bplus = G and Bplus(0) upper triangular with
// positive diagonal. Cholesky of the block Toeplitz section [G_{k-j}]; the
// boundary block row (adjointed) is the factor, stabilized by doubling the
// order until successive rows agree to tol.
LaurentLoop spectral_factor(const LaurentLoop& G, const SpectralOptions& opts = {});

struct IwasawaOptions {
    SpectralOptions spectral;
    double fit_tail_tol = 1e-8; // Fourier tail threshold for the F window
    int min_samples = 64;
};

struct IwasawaFactors {
    LaurentLoop F;      // unitary on the circle
    LaurentLoop Bplus;  // analytic, normalized constant term
    double recon_error = 0.0;      // max ||F Bplus - phi|| on the circle
    double unitarity_error = 0.0;  // max ||F^* F - I|| on the circle
    double holomorphy_error = 0.0; // Fourier tail left outside the F window
};

// phi = F * Bplus via the Gram loop; F recovered by sampling phi * Bplus^-1
// on the circle and Fourier fitting.
IwasawaFactors iwasawa(const LaurentLoop& phi, const IwasawaOptions& opts = {});

} // namespace cmcforge
