#include "cmcforge/ode.hpp"

#include <algorithm>
#include <cmath>

namespace cmcforge {

cplx Path::Segment::point(double s) const {
    if (kind == Kind::line) return a + (b - a) * s;
    double th = ang0 + (ang1 - ang0) * s;
    return center + radius * unit_phase(th);
}

cplx Path::Segment::velocity(double s) const {
    if (kind == Kind::line) return b - a;
    double th = ang0 + (ang1 - ang0) * s;
    return cplx(0.0, 1.0) * (ang1 - ang0) * radius * unit_phase(th);
}

double Path::Segment::length() const {
    if (kind == Kind::line) return std::abs(b - a);
    return std::abs(ang1 - ang0) * radius;
}

Path Path::line(cplx from, cplx to) {
    Path p;
    Segment s;
    s.kind = Segment::Kind::line;
    s.a = from;
    s.b = to;
    p.segs_.push_back(s);
    return p;
}

Path& Path::append_line(cplx to) {
    Segment s;
    s.kind = Segment::Kind::line;
    s.a = end();
    s.b = to;
    segs_.push_back(s);
    return *this;
}

Path& Path::append_arc(cplx center, double radius, double ang0, double ang1) {
    Segment s;
    s.kind = Segment::Kind::arc;
    s.center = center;
    s.radius = radius;
    s.ang0 = ang0;
    s.ang1 = ang1;
    if (!segs_.empty() && std::abs(s.point(0.0) - end()) > 1e-9 * std::max(1.0, radius))
        throw std::invalid_argument("Path::append_arc: arc does not start at path end");
    segs_.push_back(s);
    return *this;
}

Path& Path::append(const Path& other) {
    if (other.empty()) return *this;
    if (!segs_.empty() && std::abs(other.start() - end()) > 1e-9)
        throw std::invalid_argument("Path::append: paths do not join");
    segs_.insert(segs_.end(), other.segs_.begin(), other.segs_.end());
    return *this;
}

cplx Path::start() const {
    if (segs_.empty()) throw std::logic_error("Path::start: empty path");
    return segs_.front().point(0.0);
}

cplx Path::end() const {
    if (segs_.empty()) throw std::logic_error("Path::end: empty path");
    return segs_.back().point(1.0);
}

Path Path::reversed() const {
    Path p;
    for (auto it = segs_.rbegin(); it != segs_.rend(); ++it) {
        Segment s = *it;
        if (s.kind == Segment::Kind::line) std::swap(s.a, s.b);
        else std::swap(s.ang0, s.ang1);
        p.segs_.push_back(s);
    }
    return p;
}

double Path::min_distance_to(cplx p) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : segs_) {
        if (s.kind == Segment::Kind::line) {
            cplx ab = s.b - s.a;
            double t = 0.0;
            double denom = std::norm(ab);
            if (denom > 0.0) t = std::clamp(((p - s.a) * std::conj(ab)).real() / denom, 0.0, 1.0);
            d = std::min(d, std::abs(p - (s.a + ab * t)));
        } else {
            double rc = std::abs(p - s.center);
            if (std::abs(s.ang1 - s.ang0) >= 2.0 * kPi - 1e-12) {
                d = std::min(d, std::abs(rc - s.radius));
            } else {
                // clamp the angle of p to the swept range
                double th = std::atan2((p - s.center).imag(), (p - s.center).real());
                double lo = std::min(s.ang0, s.ang1), hi = std::max(s.ang0, s.ang1);
                while (th < lo) th += 2.0 * kPi;
                while (th > hi + 2.0 * kPi) th -= 2.0 * kPi;
                if (th <= hi) {
                    d = std::min(d, std::abs(rc - s.radius));
                } else {
                    d = std::min({d, std::abs(p - s.point(0.0)), std::abs(p - s.point(1.0))});
                }
            }
        }
    }
    return d;
}

double Path::winding_number(cplx p) const {
    double total = 0.0;
    for (const auto& s : segs_) {
        const int n = 256;
        cplx prev = s.point(0.0) - p;
        for (int i = 1; i <= n; ++i) {
            cplx cur = s.point(double(i) / n) - p;
            total += std::arg(cur / prev);
            prev = cur;
        }
    }
    return total / (2.0 * kPi);
}

Mat2 rkf45_integrate(const std::function<Mat2(double, const Mat2&)>& rhs, double s0, double s1,
                     const Mat2& y0, const ToleranceSpec& tol, TransportStats* stats) {
    // Fehlberg 4(5) pair; the 5th order solution is propagated.
    const double span = s1 - s0;
    if (span == 0.0) return y0;
    Mat2 y = y0;
    double s = s0;
    double h = std::min(std::abs(tol.initial_step), std::abs(span)) * (span > 0 ? 1.0 : -1.0);
    long steps = 0, rejected = 0;
    while ((span > 0 && s < s1) || (span < 0 && s > s1)) {
        if (++steps > tol.max_steps) throw TransportError("rkf45: step budget exhausted");
        if ((span > 0 && s + h > s1) || (span < 0 && s + h < s1)) h = s1 - s;

        Mat2 k1 = rhs(s, y);
        Mat2 k2 = rhs(s + h * 0.25, y + h * 0.25 * k1);
        Mat2 k3 = rhs(s + h * 3.0 / 8.0, y + h * (3.0 / 32.0 * k1 + 9.0 / 32.0 * k2));
        Mat2 k4 = rhs(s + h * 12.0 / 13.0,
                      y + h * (1932.0 / 2197.0 * k1 - 7200.0 / 2197.0 * k2 + 7296.0 / 2197.0 * k3));
        Mat2 k5 = rhs(s + h, y + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 -
                                      845.0 / 4104.0 * k4));
        Mat2 k6 = rhs(s + h * 0.5, y + h * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 +
                                            1859.0 / 4104.0 * k4 - 11.0 / 40.0 * k5));

        Mat2 y5 = y + h * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4 -
                           9.0 / 50.0 * k5 + 2.0 / 55.0 * k6);
        Mat2 err = h * (1.0 / 360.0 * k1 - 128.0 / 4275.0 * k3 - 2197.0 / 75240.0 * k4 +
                        1.0 / 50.0 * k5 + 2.0 / 55.0 * k6);

        // max of entrywise error over entrywise tolerance
        double ratio = 0.0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                double scale = tol.abs_tol + tol.rel_tol * std::abs(y(r, c));
                ratio = std::max(ratio, std::abs(err(r, c)) / scale);
            }

        if (ratio <= 1.0) {
            s += h;
            y = y5;
        } else {
            ++rejected;
        }
        double factor = (ratio > 0.0) ? 0.9 * std::pow(ratio, -0.2) : 5.0;
        factor = std::clamp(factor, 0.1, 5.0);
        h *= factor;
        if (std::abs(h) < tol.min_step) throw TransportError("rkf45: step size underflow");
    }
    if (stats) {
        stats->steps += steps;
        stats->rejected += rejected;
    }
    return y;
}

namespace {

Mat2 transport_impl(const PotentialFn& eta, const Path& path, const Mat2& Y0, bool right,
                    const ToleranceSpec& tol, TransportStats* stats) {
    if (path.empty()) return Y0;
    Mat2 y = Y0;
    for (const auto& seg : path.segments()) {
        auto rhs = [&](double s, const Mat2& v) -> Mat2 {
            Mat2 m = eta(seg.point(s)) * seg.velocity(s);
            return right ? Mat2(v * m) : Mat2(-m * v);
        };
        ToleranceSpec t = tol;
        t.initial_step = std::min(tol.initial_step, 0.25);
        y = rkf45_integrate(rhs, 0.0, 1.0, y, t, stats);
    }
    return y;
}

} // namespace

Mat2 transport(const PotentialFn& eta, const Path& path, const ToleranceSpec& tol, TransportStats* stats) {
    return transport_impl(eta, path, mat2_id(), false, tol, stats);
}

Mat2 frame_transport(const PotentialFn& eta, const Path& path, const Mat2& Y0, const ToleranceSpec& tol,
                     TransportStats* stats) {
    return transport_impl(eta, path, Y0, true, tol, stats);
}

std::vector<Mat2> frame_transport_line_outputs(const PotentialFn& eta, cplx from, cplx to,
                                               const std::vector<double>& stops, const Mat2& Y0,
                                               const ToleranceSpec& tol) {
    std::vector<Mat2> out;
    out.reserve(stops.size());
    Mat2 y = Y0;
    double prev = 0.0;
    for (double stop : stops) {
        if (stop < prev || stop > 1.0) throw std::invalid_argument("frame_transport_line_outputs: stops not ascending in [0,1]");
        cplx za = from + (to - from) * prev;
        cplx zb = from + (to - from) * stop;
        if (stop > prev) y = frame_transport(eta, Path::line(za, zb), y, tol);
        out.push_back(y);
        prev = stop;
    }
    return out;
}

} // namespace cmcforge
