#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "cmcforge/types.hpp"

namespace cmcforge {

struct ToleranceSpec {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double initial_step = 1e-3;
    double min_step = 1e-14;
    long max_steps = 2000000;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Piecewise-smooth contour in the z-plane: straight segments and circular
// arcs, each parametrised on [0,1].
class Path {
public:
    struct Segment {
        enum class Kind { line, arc } kind;
        // line: from a to b
        cplx a, b;
        // arc: center + radius e^{i theta}, theta from ang0 to ang1 (signed sweep)
        cplx center;
        double radius = 0.0, ang0 = 0.0, ang1 = 0.0;

        cplx point(double s) const;
        cplx velocity(double s) const; // d point / d s
        double length() const;
    };

    static Path line(cplx from, cplx to);
    Path& append_line(cplx to);
    Path& append_arc(cplx center, double radius, double ang0, double ang1);
    Path& append(const Path& other); // other must start where this ends

    bool empty() const { return segs_.empty(); }
    const std::vector<Segment>& segments() const { return segs_; }
    cplx start() const;
    cplx end() const;
    Path reversed() const;

    double min_distance_to(cplx p) const;   // exact per-segment distance
    double winding_number(cplx p) const;    // total arg increment / 2 pi, sampled

private:
    std::vector<Segment> segs_;
};

using PotentialFn = std::function<Mat2(cplx z)>;

struct TransportStats {
    long steps = 0;
    long rejected = 0;
};

// Fundamental solution of d + eta along the path: returns Y(1) where
// Y'(s) = -eta(gamma(s)) gamma'(s) Y(s), Y(0) = I. This sign convention is
// fixed here for the whole library; frame_transport below is its
// right-multiplication mirror used by the surface builder.
Mat2 transport(const PotentialFn& eta, const Path& path, const ToleranceSpec& tol = {},
               TransportStats* stats = nullptr);

// Y'(s) = +Y(s) eta(gamma(s)) gamma'(s), Y(0) = Y0.
Mat2 frame_transport(const PotentialFn& eta, const Path& path, const Mat2& Y0,
                     const ToleranceSpec& tol = {}, TransportStats* stats = nullptr);

// frame_transport along a single line with states recorded at the given
// fractions of the segment (ascending in (0,1]).
std::vector<Mat2> frame_transport_line_outputs(const PotentialFn& eta, cplx from, cplx to,
                                               const std::vector<double>& stops, const Mat2& Y0,
                                               const ToleranceSpec& tol = {});

// Generic single-segment integrator used by the helpers above; exposed for tests.
Mat2 rkf45_integrate(const std::function<Mat2(double, const Mat2&)>& rhs, double s0, double s1,
                     const Mat2& y0, const ToleranceSpec& tol, TransportStats* stats = nullptr);

} // namespace cmcforge
