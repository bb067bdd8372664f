#include "cmcforge/objective.hpp"

#include <cmath>

#include "cmcforge/parallel.hpp"

namespace cmcforge {

SampleSet SampleSet::make(const SurfaceParams& params, int K, bool upper_half_only) {
    if (K <= 0) throw std::invalid_argument("SampleSet: K must be positive");
    SampleSet s;
    s.upper_half_only = upper_half_only;
    const double arc = upper_half_only ? kPi : 2.0 * kPi;
    double offset = 0.5;
    auto build = [&](double off) {
        std::vector<cplx> pts(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) pts[static_cast<size_t>(k)] = unit_phase(arc * (k + off) / K);
        return pts;
    };
    s.points = build(offset);
    auto collides = [&](const std::vector<cplx>& pts) {
        for (cplx p : pts)
            if (std::abs(p - params.lambda1) < 1e-9 || std::abs(p - params.lambda2) < 1e-9) return true;
        return false;
    };
    if (collides(s.points)) s.points = build(offset + 0.25);
    if (collides(s.points)) throw std::logic_error("SampleSet: cannot avoid evaluation points");
    return s;
}

SampleSet SampleSet::mirror_completed() const {
    SampleSet s;
    s.upper_half_only = false;
    s.points = points;
    for (cplx p : points) s.points.push_back(std::conj(p));
    return s;
}

double F1_at(const SurfaceParams& params, const AccessorySeries& series, cplx mu,
             const MonodromyOptions& opts, SampleEval* detail) {
    MonodromySet ms = monodromy_set(params, series, mu, opts);
    auto t = ms.half_traces();
    // indices in half_traces(): 0:t12 1:t13 2:t14 3:t23 4:t24 5:t34
    double F1 = 0.25 * (chi(t[0]) + chi(t[1]) + chi(t[3]) + chi(t[4]));
    if (detail) {
        detail->mu = mu;
        detail->F1 = F1;
        detail->t = t;
        detail->failed = false;
    }
    return F1;
}

namespace {

ObjectiveReport evaluate_impl(const SurfaceParams& params, const AccessorySeries& series,
                              const SampleSet& samples, const MonodromyOptions& opts, bool six) {
    ObjectiveReport rep;
    rep.samples.resize(samples.points.size());
    parallel_for(samples.points.size(), [&](size_t k) {
        SampleEval& ev = rep.samples[k];
        try {
            F1_at(params, series, samples.points[k], opts, &ev);
            if (six) {
                double s = 0.0;
                for (const cplx& t : ev.t) s += chi(t);
                ev.F1 = s / 6.0;
            }
        } catch (const std::exception&) {
            ev.mu = samples.points[k];
            ev.failed = true;
        }
    });
    double acc = 0.0;
    for (size_t k = 0; k < rep.samples.size(); ++k) {
        const SampleEval& ev = rep.samples[k];
        if (ev.failed) {
            rep.failed = true;
            continue;
        }
        acc += ev.F1;
        if (rep.worst_index < 0 || ev.F1 > rep.samples[static_cast<size_t>(rep.worst_index)].F1)
            rep.worst_index = static_cast<int>(k);
        for (const cplx& t : ev.t) rep.max_im_half_trace = std::max(rep.max_im_half_trace, std::abs(t.imag()));
    }
    rep.F = rep.failed ? std::numeric_limits<double>::infinity()
                       : std::sqrt(acc / double(rep.samples.size()));
    return rep;
}

} // namespace

ObjectiveReport evaluate_F(const SurfaceParams& params, const AccessorySeries& series,
                           const SampleSet& samples, const MonodromyOptions& opts) {
    return evaluate_impl(params, series, samples, opts, false);
}

double evaluate_F_six(const SurfaceParams& params, const AccessorySeries& series,
                      const SampleSet& samples, const MonodromyOptions& opts) {
    return evaluate_impl(params, series, samples, opts, true).F;
}

} // namespace cmcforge
