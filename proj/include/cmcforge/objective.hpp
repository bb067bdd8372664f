#pragma once

#include <vector>

#include "cmcforge/monodromy.hpp"

namespace cmcforge {

// Distance of a half-trace from the interval [-1, 1] on the real axis.
inline double chi(cplx t) {
    double re_excess = std::max(0.0, std::abs(t.real()) - 1.0);
    return t.imag() * t.imag() + re_excess * re_excess;
}

// Circle sample phases for the objective; offset half a spacing so no point
// hits lambda1/lambda2 (nudged once more if a collision remains).
struct SampleSet {
    std::vector<cplx> points;
    bool upper_half_only = false;

    static SampleSet make(const SurfaceParams& params, int K, bool upper_half_only);
    // points plus complex conjugates; meaningful for upper-half sets
    SampleSet mirror_completed() const;
};

struct SampleEval {
    cplx mu;
    double F1 = 0.0;
    std::array<cplx, 6> t{}; // t12, t13, t14, t23, t24, t34
    bool failed = false;
};

struct ObjectiveReport {
    double F = 0.0;
    std::vector<SampleEval> samples;
    int worst_index = -1;     // largest F1
    double max_im_half_trace = 0.0;
    bool failed = false;      // any sample failed to evaluate
};

// F1(mu) = ( chi(t12) + chi(t13) + chi(t23) + chi(t24) ) / 4
double F1_at(const SurfaceParams& params, const AccessorySeries& series, cplx mu,
             const MonodromyOptions& opts = {}, SampleEval* detail = nullptr);

// F = sqrt( mean_k F1(mu_k) ); samples evaluated concurrently, reduced in
// index order.
ObjectiveReport evaluate_F(const SurfaceParams& params, const AccessorySeries& series,
                           const SampleSet& samples, const MonodromyOptions& opts = {});

// Validation variant averaging chi over all six half-traces.
double evaluate_F_six(const SurfaceParams& params, const AccessorySeries& series,
                      const SampleSet& samples, const MonodromyOptions& opts = {});

} // namespace cmcforge
