#pragma once

#include <vector>

#include "cmcforge/model.hpp"

namespace cmcforge {

// All roots via the companion-matrix eigenvalues.
std::vector<cplx> poly_roots(const Poly& p);

struct ZeroInfo {
    cplx z;
    int multiplicity = 1;
    // set when the truncated-series tail at this zero is too large to trust
    bool low_confidence = false;
};

struct DiskZeroReport {
    std::vector<ZeroInfo> zeros_B;        // zeros of B inside the closed unit disk
    std::vector<ZeroInfo> zeros_A_plus_1; // zeros of A + 1 inside the closed unit disk
};

struct AnalysisOptions {
    double disk_radius = 1.0;
    double multiplicity_tol = 1e-6; // derivative-vanishing threshold (relative)
    double match_tol = 1e-5;        // common-zero matching distance
    double tail_fraction = 0.1;     // low-confidence marking threshold
};

DiskZeroReport roots_in_disk(const SurfaceParams& params, const AccessorySeries& series,
                             const AnalysisOptions& opts = {});

struct StabilityReport {
    int unstable_count = 0;
    std::vector<cplx> lambda0; // common zeros with ord B <= ord (A+1)
};

// A run carries an unstable parabolic structure at lambda0 iff B and A+1
// vanish there together with ord B <= ord (A+1), lambda0 inside the disk.
StabilityReport classify_stability(const SurfaceParams& params, const AccessorySeries& series,
                                   const AnalysisOptions& opts = {});

} // namespace cmcforge
