#pragma once

#include <limits>
#include <vector>

#include "cmcforge/objective.hpp"

namespace cmcforge {

// Positive Hermitian form h with M_i^* h M_i = h (det h = 1), and the
// conjugation D = h^{1/2} making the set simultaneously unitary. The scalar
// solvers below keep h diagonal, h = diag(rho, 1/rho); energy is the
// normalized metric defect that was minimized; residual is
// max_i || (D M_i D^-1)^* (D M_i D^-1) - I ||_F.
struct UnitarizerResult {
    double rho = 1.0; // diagonal solvers: metric entry; invariant_form: top eigenvalue of h
    double energy = 0.0;
    double residual = 0.0;
    Mat2 h = mat2_id();
    Mat2 D() const;                       // Hermitian square root of h
    Mat2 conjugated(const Mat2& M) const; // D M D^-1
};

double unitarizer_energy(const std::vector<Mat2>& Ms, double rho);

UnitarizerResult solve_unitarizer(const std::vector<Mat2>& Ms, double log_rho_min = -18.0,
                                  double log_rho_max = 18.0);

// Warm-started local solve: golden section inside a bracket grown around
// rho_init until the energy rises on both sides.
UnitarizerResult solve_unitarizer_near(const std::vector<Mat2>& Ms, double rho_init);

// General invariant form: least-squares null vector of the linear system
// M_i^* h M_i = h over Hermitian h, oriented toward the identity when the
// null space is degenerate (reducible sets). No diagonality assumption; this
// is what a generic gauge of the monodromy representation requires.
UnitarizerResult invariant_form(const std::vector<Mat2>& Ms);

// h(mu_k) along the sample circle via invariant_form; the det-1 normalization
// makes each sample unique, so the field is continuous wherever the
// representation stays irreducible and unitarizable.
struct UnitarizerField {
    std::vector<cplx> mu;
    std::vector<UnitarizerResult> at;
    double max_residual = 0.0;
    double max_dlog_rho = 0.0; // max |log rho_k - log rho_{k-1}|
};

// Throws if any sample's residual exceeds residual_error_threshold, naming the
// offending mu in the message.
UnitarizerField unitarizer_field(const SurfaceParams& params, const AccessorySeries& series,
                                 const std::vector<cplx>& mus, const MonodromyOptions& opts = {},
                                 double residual_error_threshold =
                                     std::numeric_limits<double>::infinity());

} // namespace cmcforge
