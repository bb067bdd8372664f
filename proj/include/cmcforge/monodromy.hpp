#pragma once

#include <array>
#include <optional>

#include "cmcforge/model.hpp"
#include "cmcforge/ode.hpp"

namespace cmcforge {

struct MonodromyOptions {
    std::optional<cplx> base_point;          // default 0.45 min(|z0|,|z1|) e^{i pi/8}
    std::optional<double> approach_radius;   // default 0.3 * min singular separation
    ToleranceSpec tol;
};

// Monodromies of d + eta around the four punctures z0, z1, -z0, -z1 along
// keyhole loops from a common base point, all with the transport()
// convention, plus the bookkeeping needed by diagnostics.
struct MonodromySet {
    cplx lambda;
    cplx base_point;
    double approach_radius = 0.0;
    std::array<cplx, 4> puncture; // z0, z1, -z0, -z1
    std::array<Mat2, 4> M;

    cplx half_trace(int i, int j) const { return 0.5 * (M[i] * M[j]).trace(); }
    // t12, t13, t14, t23, t24, t34 in that order
    std::array<cplx, 6> half_traces() const;
    // product over keyholes traversed in increasing argument seen from the
    // base point (equals M4 M3 M2 M1 for the standard configurations)
    Mat2 ordered_product() const;
};

// Scalar potential values at fixed lambda bundled as a PotentialFn.
PotentialFn potential_at(const SurfaceParams& params, const AccessorySeries& series, cplx lambda);

// Keyhole contour around `puncture`: base -> circle entry, full ccw circle,
// back. Validated to stay >= approach_radius/2 away from the other punctures
// and from z = 0.
Path keyhole_path(const SurfaceParams& params, cplx base, cplx puncture, double radius);

MonodromySet monodromy_set(const SurfaceParams& params, const AccessorySeries& series, cplx lambda,
                           const MonodromyOptions& opts = {});

// || transport around a small ccw loop at z = 0  -  I ||_max; the puncture at
// the origin has integer exponents, so this measures the logarithmic defect.
double apparency_defect(const SurfaceParams& params, const AccessorySeries& series, cplx lambda,
                        const MonodromyOptions& opts = {});

cplx default_base_point(const SurfaceParams& params);
double default_approach_radius(const SurfaceParams& params);

} // namespace cmcforge
