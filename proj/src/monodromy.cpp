#include "cmcforge/monodromy.hpp"

#include <algorithm>
#include <numeric>

namespace cmcforge {

cplx default_base_point(const SurfaceParams& params) {
    double r = 0.45 * std::min(std::abs(params.z0), std::abs(params.z1));
    return r * unit_phase(kPi / 8.0);
}

double default_approach_radius(const SurfaceParams& params) {
    return 0.3 * params.min_singular_separation();
}

PotentialFn potential_at(const SurfaceParams& params, const AccessorySeries& series, cplx lambda) {
    series.validate(params);
    const cplx A_val = series.A_poly().eval(lambda);
    const cplx B_val = reconstruct_B(params, series).eval(lambda);
    return [params, A_val, B_val, lambda](cplx z) { return eval_potential(params, A_val, B_val, z, lambda); };
}

Path keyhole_path(const SurfaceParams& params, cplx base, cplx puncture, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("keyhole_path: radius must be positive");
    if (std::abs(base - puncture) <= radius)
        throw std::invalid_argument("keyhole_path: base point inside approach circle");
    // route around the origin pole at the base-point radius, then radially in;
    // a straight leg could pass between the origin and an opposite puncture
    const double rb = std::abs(base);
    const double rp = std::abs(puncture) - radius;
    if (!(rb > 0.0) || rb >= rp)
        throw std::invalid_argument("keyhole_path: base circle meets the approach circle");
    const double theta_b = std::arg(base);
    const double theta_p = std::arg(puncture);
    const double sweep = std::remainder(theta_p - theta_b, 2.0 * kPi);
    const cplx turn = rb * unit_phase(theta_p);
    const cplx entry = puncture - radius * unit_phase(theta_p);

    Path p;
    if (sweep != 0.0) {
        p.append_arc(0.0, rb, theta_b, theta_b + sweep);
        p.append_line(entry);
    } else {
        p = Path::line(base, entry);
    }
    p.append_arc(puncture, radius, theta_p + kPi, theta_p + 3.0 * kPi);
    p.append_line(turn);
    if (sweep != 0.0) p.append_arc(0.0, rb, theta_b + sweep, theta_b);

    std::vector<cplx> others = params.punctures();
    others.push_back(0.0);
    for (cplx q : others) {
        if (q == puncture) continue;
        if (p.min_distance_to(q) < radius / 2.0)
            throw std::invalid_argument("keyhole_path: contour violates clearance to another singular point");
    }
    return p;
}

MonodromySet monodromy_set(const SurfaceParams& params, const AccessorySeries& series, cplx lambda,
                           const MonodromyOptions& opts) {
    params.validate();
    MonodromySet ms;
    ms.lambda = lambda;
    ms.base_point = opts.base_point.value_or(default_base_point(params));
    ms.approach_radius = opts.approach_radius.value_or(default_approach_radius(params));
    ms.puncture = {params.z0, params.z1, -params.z0, -params.z1};

    for (cplx q : ms.puncture)
        if (std::abs(ms.base_point - q) < ms.approach_radius)
            throw std::invalid_argument("monodromy_set: base point too close to a puncture");

    PotentialFn eta = potential_at(params, series, lambda);
    for (int i = 0; i < 4; ++i) {
        Path p = keyhole_path(params, ms.base_point, ms.puncture[static_cast<size_t>(i)], ms.approach_radius);
        ms.M[static_cast<size_t>(i)] = transport(eta, p, opts.tol);
    }
    return ms;
}

std::array<cplx, 6> MonodromySet::half_traces() const {
    return {half_trace(0, 1), half_trace(0, 2), half_trace(0, 3),
            half_trace(1, 2), half_trace(1, 3), half_trace(2, 3)};
}

Mat2 MonodromySet::ordered_product() const {
    std::array<int, 4> idx = {0, 1, 2, 3};
    auto key = [&](int i) { return std::arg(puncture[static_cast<size_t>(i)] - base_point); };
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return key(a) < key(b); });
    // composite loop = keyholes traversed in ascending argument; transports
    // compose right-to-left
    Mat2 prod = mat2_id();
    for (int i : idx) prod = M[static_cast<size_t>(i)] * prod;
    return prod;
}

double apparency_defect(const SurfaceParams& params, const AccessorySeries& series, cplx lambda,
                        const MonodromyOptions& opts) {
    params.validate();
    const double r = 0.5 * opts.approach_radius.value_or(default_approach_radius(params));
    PotentialFn eta = potential_at(params, series, lambda);
    Path loop;
    loop.append_arc(0.0, r, 0.0, 2.0 * kPi);
    Mat2 T = transport(eta, loop, opts.tol);
    return max_abs(T - mat2_id());
}

} // namespace cmcforge
