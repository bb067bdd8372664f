#include "cmcforge/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "cmcforge/monodromy.hpp"
#include "cmcforge/parallel.hpp"

namespace cmcforge {

namespace {
constexpr double kTau = 2.0 * kPi;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

// ---------------------------------------------------------------------------
// quaternions and stereographic projection

Mat2 quat_to_su2(const Vec4& q) {
    Mat2 m;
    m(0, 0) = cplx(q[0], q[1]);
    m(0, 1) = cplx(q[2], q[3]);
    m(1, 0) = cplx(-q[2], q[3]);
    m(1, 1) = cplx(q[0], -q[1]);
    return m;
}

Vec4 su2_to_quat(const Mat2& m) {
    return Vec4(0.5 * (m(0, 0).real() + m(1, 1).real()), 0.5 * (m(0, 0).imag() - m(1, 1).imag()),
                0.5 * (m(0, 1).real() - m(1, 0).real()), 0.5 * (m(0, 1).imag() + m(1, 0).imag()));
}

Vec4 quat_mul(const Vec4& a, const Vec4& b) {
    // product of the associated SU(2)-form matrices, written out
    const cplx al(a[0], a[1]), be(a[2], a[3]), ga(b[0], b[1]), de(b[2], b[3]);
    const cplx r0 = al * ga - be * std::conj(de);
    const cplx r1 = al * de + be * std::conj(ga);
    return Vec4(r0.real(), r0.imag(), r1.real(), r1.imag());
}

Vec4 quat_conj(const Vec4& q) { return Vec4(q[0], -q[1], -q[2], -q[3]); }

Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
    Vec4 n;
    double sign = 1.0;
    for (int i = 0; i < 4; ++i) {
        Eigen::Matrix3d m;
        int col = 0;
        for (int k = 0; k < 4; ++k) {
            if (k == i) continue;
            m(0, col) = a[k];
            m(1, col) = b[k];
            m(2, col) = c[k];
            ++col;
        }
        n[i] = sign * m.determinant();
        sign = -sign;
    }
    return n;
}

namespace {

Vec4 unit_pole(const Vec4& pole) {
    double n = pole.norm();
    if (!(n > 0.0)) throw SurfaceError("stereographic: pole must be a nonzero 4-vector");
    return pole / n;
}

} // namespace

Vec3 stereographic_point(const Vec4& x, const Vec4& pole) {
    Vec4 pn = unit_pole(pole);
    Vec4 y = quat_mul(-quat_conj(pn), x);
    return Vec3(y[1], y[2], y[3]) / (1.0 + y[0]);
}

Vec4 inverse_stereographic(const Vec3& p, const Vec4& pole) {
    Vec4 pn = unit_pole(pole);
    const double s = p.squaredNorm();
    Vec4 y((1.0 - s) / (1.0 + s), 2.0 * p[0] / (1.0 + s), 2.0 * p[1] / (1.0 + s),
           2.0 * p[2] / (1.0 + s));
    return quat_mul(-pn, y);
}

// ---------------------------------------------------------------------------
// options

void SurfaceOptions::validate() const {
    if (n_theta < 8) throw std::invalid_argument("surface: n_theta must be at least 8");
    if (n_radial < 4) throw std::invalid_argument("surface: n_radial must be at least 4");
    if (!(t_min > 0.0 && t_min <= 0.1))
        throw std::invalid_argument("surface: t_min must lie in (0, 0.1]");
    if (!(max_abs_z >= 4.0)) throw std::invalid_argument("surface: max_abs_z must be at least 4");
    if (lambda_samples < 16)
        throw std::invalid_argument("surface: lambda_samples must be at least 16");
    if (max_lambda_samples < lambda_samples)
        throw std::invalid_argument("surface: max_lambda_samples below lambda_samples");
    if (!(fit_tail_tol > 0.0) || !(fit_warn >= fit_tail_tol))
        throw std::invalid_argument("surface: need 0 < fit_tail_tol <= fit_warn");
    if (!(unitarizer_threshold > 0.0))
        throw std::invalid_argument("surface: unitarizer_threshold must be positive");
    if (max_copies < 1) throw std::invalid_argument("surface: max_copies must be positive");
    if (!(group_tol > 0.0)) throw std::invalid_argument("surface: group_tol must be positive");
    if (!(overlap_threshold_rel > 0.0))
        throw std::invalid_argument("surface: overlap_threshold_rel must be positive");
    if (!(offset_eps > 0.0 && offset_eps <= 0.05))
        throw std::invalid_argument("surface: offset_eps must lie in (0, 0.05]");
}

// ---------------------------------------------------------------------------
// proximity cells

double CellGrid::local_radius(int row, int col) const {
    const cplx q = z[static_cast<size_t>(index(row, col))];
    return at_infinity ? 1.0 / std::abs(q) : std::abs(q - site);
}

namespace {

double chordal(cplx a, cplx b) {
    return 2.0 * std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
}

double chordal_inf(cplx a) { return 2.0 / std::sqrt(1.0 + std::norm(a)); }

struct CellSpec {
    cplx site;
    bool at_infinity = false;
    bool punctured = false;
    size_t own_index = 0; // into the finite-site list; unused when at_infinity
};

// distance (chordal, on the Riemann sphere) from q to the nearest rival site
double rival_distance(cplx q, const std::vector<cplx>& finite, const CellSpec& spec) {
    double best = kInf;
    for (size_t k = 0; k < finite.size(); ++k) {
        if (!spec.at_infinity && k == spec.own_index) continue;
        best = std::min(best, chordal(q, finite[k]));
    }
    if (!spec.at_infinity) best = std::min(best, chordal_inf(q));
    return best;
}

// first radius along the ray where the own-site chordal distance catches up
// with the nearest rival: the boundary of the proximity cell in this direction
double rim_radius_for(const CellSpec& spec, double theta, const std::vector<cplx>& finite,
                      double step, double rmax) {
    auto value = [&](double r) {
        cplx q = spec.at_infinity ? 1.0 / std::polar(r, theta) : spec.site + std::polar(r, theta);
        double own = spec.at_infinity ? chordal_inf(q) : chordal(q, spec.site);
        return own - rival_distance(q, finite, spec);
    };
    double lo = 0.0, hi = step;
    while (value(hi) < 0.0) {
        lo = hi;
        hi += step;
        if (hi > rmax) throw SurfaceError("surface: proximity cell rim not found along a ray");
    }
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (value(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

CellGrid make_cell(const CellSpec& spec, const SurfaceOptions& opts,
                   const std::vector<cplx>& finite) {
    CellGrid cell;
    cell.site = spec.at_infinity ? cplx(0.0, 0.0) : spec.site;
    cell.at_infinity = spec.at_infinity;
    cell.punctured = spec.punctured;
    cell.n_rows = opts.n_radial + 1;
    cell.n_cols = spec.punctured ? opts.n_theta + 1 : opts.n_theta;
    cell.theta.resize(static_cast<size_t>(cell.n_cols));
    cell.rim_radius.resize(static_cast<size_t>(cell.n_cols));

    // marching scale: nearest rival in the cell's own chart
    double scale = kInf;
    if (spec.at_infinity) {
        for (cplx s : finite)
            if (std::abs(s) > 0.0) scale = std::min(scale, 1.0 / std::abs(s));
    } else {
        for (size_t k = 0; k < finite.size(); ++k)
            if (k != spec.own_index) scale = std::min(scale, std::abs(finite[k] - spec.site));
    }
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw SurfaceError("surface: degenerate site configuration");

    const int nt = opts.n_theta;
    for (int j = 0; j < cell.n_cols; ++j) {
        cell.theta[static_cast<size_t>(j)] = kTau * j / nt;
        if (spec.punctured && j == nt) {
            cell.rim_radius[static_cast<size_t>(j)] = cell.rim_radius[0];
            continue;
        }
        cell.rim_radius[static_cast<size_t>(j)] =
            rim_radius_for(spec, cell.theta[static_cast<size_t>(j)], finite, scale / 64.0, 1e4);
    }

    const int nr = opts.n_radial;
    cell.z.resize(static_cast<size_t>(cell.n_rows * cell.n_cols));
    for (int j = 0; j < cell.n_cols; ++j) {
        const double rim = cell.rim_radius[static_cast<size_t>(j)];
        double lo_rel = 1.0 / (nr + 1);
        if (spec.at_infinity) {
            lo_rel = std::max(lo_rel, (1.0 / opts.max_abs_z) / rim);
            if (lo_rel > 0.5)
                throw SurfaceError("surface: max_abs_z leaves no room for the cell at infinity");
        }
        for (int i = 0; i < cell.n_rows; ++i) {
            const double rel = spec.punctured ? std::pow(opts.t_min, 1.0 - double(i) / nr)
                                              : lo_rel + (1.0 - lo_rel) * double(i) / nr;
            const cplx local = std::polar(rel * rim, cell.theta[static_cast<size_t>(j)]);
            cell.z[static_cast<size_t>(cell.index(i, j))] =
                spec.at_infinity ? 1.0 / local : spec.site + local;
        }
    }
    return cell;
}

// singular points a transport into this cell must stay away from (the cell's
// own site is excluded: punctured-cell spokes approach it by design)
std::vector<cplx> clearance_points(const CellGrid& cell, const SurfaceParams& params) {
    std::vector<cplx> pts{cplx(0.0, 0.0), params.z0, params.z1, -params.z0, -params.z1};
    if (!cell.at_infinity) {
        size_t best = 0;
        double d = kInf;
        for (size_t k = 0; k < pts.size(); ++k)
            if (std::abs(pts[k] - cell.site) < d) {
                d = std::abs(pts[k] - cell.site);
                best = k;
            }
        pts.erase(pts.begin() + static_cast<long>(best));
    }
    return pts;
}

double path_clearance(const Path& p, const std::vector<cplx>& pts) {
    double d = kInf;
    for (cplx q : pts) d = std::min(d, p.min_distance_to(q));
    return d;
}

double segment_clearance(cplx a, cplx b, const std::vector<cplx>& pts) {
    return path_clearance(Path::line(a, b), pts);
}

Path detour_path(cplx zb, cplx g) {
    // swing around the origin at the base radius, then head straight out
    const double r = std::abs(zb);
    const double a0 = std::arg(zb);
    const double sweep = std::remainder(std::arg(g) - a0, kTau);
    Path p = Path::line(zb, std::polar(r, a0));
    p.append_arc(cplx(0.0, 0.0), r, a0, a0 + sweep);
    p.append_line(g);
    return p;
}

struct RouteInfo {
    Path path;
    int gateway = 0;
    double clearance = 0.0;
    bool used_detour = false;
};

RouteInfo build_route(const CellGrid& cell, cplx zb, const std::vector<cplx>& clear_pts,
                      double min_clear) {
    const int rim = cell.n_rows - 1;
    const int jmax = cell.punctured ? cell.n_cols - 1 : cell.n_cols;
    std::vector<int> order(static_cast<size_t>(jmax));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(cell.z[static_cast<size_t>(cell.index(rim, a))] - zb) <
               std::abs(cell.z[static_cast<size_t>(cell.index(rim, b))] - zb);
    });
    RouteInfo best;
    best.clearance = -1.0;
    const int tried = std::min(jmax, 12);
    for (int t = 0; t < tried; ++t) {
        const int j = order[static_cast<size_t>(t)];
        const cplx g = cell.z[static_cast<size_t>(cell.index(rim, j))];
        for (int variant = 0; variant < 2; ++variant) {
            Path p = variant == 0 ? Path::line(zb, g) : detour_path(zb, g);
            const double c = path_clearance(p, clear_pts);
            if (c > best.clearance) best = RouteInfo{p, j, c, variant == 1};
            if (c >= min_clear) return best;
        }
    }
    if (best.clearance <= 0.25 * min_clear) {
        std::ostringstream msg;
        msg << "surface: no usable transport route into the cell around ";
        if (cell.at_infinity)
            msg << "infinity";
        else
            msg << cell.site;
        msg << " (best clearance " << best.clearance << ")";
        throw SurfaceError(msg.str());
    }
    return best;
}

// frames at all grid points of one cell for one lambda sample, continued from
// the base frame along route -> rim chain -> radial spokes
void transport_cell(const CellGrid& cell, const PotentialFn& eta, const RouteInfo& route,
                    const Mat2& base, const ToleranceSpec& tol, Mat2* out) {
    const int rim = cell.n_rows - 1;
    const int n = cell.n_cols;
    const int jg = route.gateway;
    auto rim_z = [&](int j) { return cell.z[static_cast<size_t>(cell.index(rim, j))]; };

    std::vector<Mat2> rimF(static_cast<size_t>(n));
    rimF[static_cast<size_t>(jg)] = frame_transport(eta, route.path, base, tol);
    if (cell.punctured) {
        for (int j = jg - 1; j >= 0; --j)
            rimF[static_cast<size_t>(j)] = frame_transport(
                eta, Path::line(rim_z(j + 1), rim_z(j)), rimF[static_cast<size_t>(j + 1)], tol);
        for (int j = jg + 1; j < n; ++j)
            rimF[static_cast<size_t>(j)] = frame_transport(
                eta, Path::line(rim_z(j - 1), rim_z(j)), rimF[static_cast<size_t>(j - 1)], tol);
    } else {
        const int half = n / 2;
        for (int k = 1; k <= half; ++k) {
            const int j = (jg + k) % n, jp = (jg + k - 1) % n;
            rimF[static_cast<size_t>(j)] = frame_transport(eta, Path::line(rim_z(jp), rim_z(j)),
                                                           rimF[static_cast<size_t>(jp)], tol);
        }
        for (int k = 1; k <= n - 1 - half; ++k) {
            const int j = (jg - k % n + n) % n, jp = (jg - (k - 1) % n + n) % n;
            rimF[static_cast<size_t>(j)] = frame_transport(eta, Path::line(rim_z(jp), rim_z(j)),
                                                           rimF[static_cast<size_t>(jp)], tol);
        }
    }

    std::vector<double> stops(static_cast<size_t>(rim));
    for (int j = 0; j < n; ++j) {
        const cplx top = rim_z(j);
        const cplx bot = cell.z[static_cast<size_t>(cell.index(0, j))];
        const double len = std::abs(bot - top);
        for (int i = rim - 1; i >= 0; --i)
            stops[static_cast<size_t>(rim - 1 - i)] =
                std::abs(cell.z[static_cast<size_t>(cell.index(i, j))] - top) / len;
        stops.back() = 1.0;
        auto states =
            frame_transport_line_outputs(eta, top, bot, stops, rimF[static_cast<size_t>(j)], tol);
        out[cell.index(rim, j)] = rimF[static_cast<size_t>(j)];
        for (int i = rim - 1; i >= 0; --i)
            out[cell.index(i, j)] = states[static_cast<size_t>(rim - 1 - i)];
    }
}

// transport clearance of the fixed in-cell legs (rim chain links and spokes)
double cell_mesh_clearance(const CellGrid& cell, const std::vector<cplx>& clear_pts) {
    const int rim = cell.n_rows - 1;
    const int n = cell.n_cols;
    double d = kInf;
    const int links = cell.punctured ? n - 1 : n;
    for (int j = 0; j < links; ++j) {
        const int jn = (j + 1) % n;
        d = std::min(d, segment_clearance(cell.z[static_cast<size_t>(cell.index(rim, j))],
                                          cell.z[static_cast<size_t>(cell.index(rim, jn))],
                                          clear_pts));
    }
    for (int j = 0; j < n; ++j)
        d = std::min(d, segment_clearance(cell.z[static_cast<size_t>(cell.index(rim, j))],
                                          cell.z[static_cast<size_t>(cell.index(0, j))],
                                          clear_pts));
    return d;
}

// undo the sample twist: if fitted represents Phi(zeta * lambda), return Phi
LaurentLoop untwist_loop(const LaurentLoop& fitted, cplx zeta) {
    if (fitted.empty()) return fitted;
    const double a = std::arg(zeta);
    LaurentLoop out = fitted;
    for (int k = fitted.lo(); k <= fitted.hi(); ++k)
        out.set_coefficient(k, Mat2(fitted.coefficient(k) * std::polar(1.0, -a * k)));
    return out;
}

} // namespace

FrameGrid compute_frames_raw(const SurfaceParams& params, const SurfaceOptions& opts,
                             const FrameGridInputs& inputs) {
    params.validate();
    opts.validate();
    if (!inputs.potential) throw SurfaceError("compute_frames_raw: missing potential factory");
    const size_t L = inputs.circle_samples.size();
    if (L < 8) throw SurfaceError("compute_frames_raw: need at least 8 circle samples");
    if (inputs.initial.size() != L)
        throw SurfaceError("compute_frames_raw: initial frames do not match the samples");
    const cplx zeta = inputs.circle_samples[0];
    if (std::abs(std::abs(zeta) - 1.0) > 1e-9)
        throw SurfaceError("compute_frames_raw: samples must lie on the unit circle");
    for (size_t j = 0; j < L; ++j)
        if (std::abs(inputs.circle_samples[j] - zeta * unit_phase(kTau * double(j) / double(L))) >
            1e-9)
            throw SurfaceError("compute_frames_raw: samples must be a rotated uniform circle grid");

    FrameGrid fg;
    fg.circle_samples = inputs.circle_samples;
    fg.base_frames = inputs.initial;
    fg.base_point = opts.base_point.value_or(default_base_point(params));
    fg.diag.lambda_samples_used = static_cast<int>(L);

    const std::vector<cplx> finite{cplx(0.0, 0.0), params.z0, params.z1, -params.z0, -params.z1};
    std::vector<CellSpec> specs;
    specs.push_back({finite[0], false, false, 0});
    for (size_t k = 1; k < finite.size(); ++k) specs.push_back({finite[k], false, true, k});
    specs.push_back({cplx(0.0, 0.0), true, false, 0});
    for (const CellSpec& s : specs) fg.cells.push_back(make_cell(s, opts, finite));

    const double min_clear = 0.2 * params.min_singular_separation();
    std::vector<RouteInfo> routes;
    double clearance = kInf;
    for (CellGrid& cell : fg.cells) {
        const auto pts = clearance_points(cell, params);
        RouteInfo r = build_route(cell, fg.base_point, pts, min_clear);
        cell.gateway_col = r.gateway;
        clearance = std::min(clearance, std::min(r.clearance, cell_mesh_clearance(cell, pts)));
        routes.push_back(std::move(r));
    }
    fg.diag.route_clearance = clearance;

    std::vector<Mat2> gateway_frame0(fg.cells.size());
    for (size_t ci = 0; ci < fg.cells.size(); ++ci) {
        CellGrid& cell = fg.cells[ci];
        const size_t npts = cell.z.size();
        std::vector<Mat2> flat(L * npts);
        try {
            parallel_for(L, [&](size_t l) {
                const PotentialFn eta = inputs.potential(inputs.circle_samples[l]);
                transport_cell(cell, eta, routes[ci], inputs.initial[l], opts.ode_tol,
                               &flat[l * npts]);
            });
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "compute_frames_raw: transport failed in cell " << ci << ": " << e.what();
            throw SurfaceError(msg.str());
        }
        gateway_frame0[ci] =
            flat[0 * npts + static_cast<size_t>(cell.index(cell.n_rows - 1, cell.gateway_col))];

        cell.frame.resize(npts);
        cell.fit_residual.resize(npts);
        std::vector<double> det_dev(npts, 0.0);
        parallel_for(npts, [&](size_t p) {
            std::vector<Mat2> samples(L);
            double dd = 0.0;
            for (size_t l = 0; l < L; ++l) {
                samples[l] = flat[l * npts + p];
                dd = std::max(dd, std::abs(samples[l].determinant() - 1.0));
            }
            det_dev[p] = dd;
            auto fit = LaurentLoop::fit_circle_samples_auto(samples, opts.fit_tail_tol);
            cell.frame[p] = untwist_loop(fit.loop, zeta);
            cell.fit_residual[p] =
                fit.residual / std::max(1.0, fit.loop.max_coefficient_norm());
        });
        for (size_t p = 0; p < npts; ++p) {
            fg.diag.max_det_deviation = std::max(fg.diag.max_det_deviation, det_dev[p]);
            fg.diag.max_fit_residual = std::max(fg.diag.max_fit_residual, cell.fit_residual[p]);
        }
    }

    // route-independence probe at the first sample: a second, differently
    // shaped route to the same gateway must reproduce the frame whenever the
    // two enclose no singular point
    const PotentialFn eta0 = inputs.potential(inputs.circle_samples[0]);
    for (size_t ci = 0; ci < fg.cells.size(); ++ci) {
        const CellGrid& cell = fg.cells[ci];
        const cplx g =
            cell.z[static_cast<size_t>(cell.index(cell.n_rows - 1, cell.gateway_col))];
        Path alt = routes[ci].used_detour ? Path::line(fg.base_point, g)
                                          : detour_path(fg.base_point, g);
        Path loop = routes[ci].path;
        loop.append(alt.reversed());
        bool clean = true;
        for (cplx s : finite)
            if (std::abs(loop.winding_number(s)) > 0.25) clean = false;
        if (!clean) continue;
        const Mat2 ref = gateway_frame0[ci];
        const Mat2 again = frame_transport(eta0, alt, inputs.initial[0], opts.ode_tol);
        fg.diag.path_consistency = std::max(
            fg.diag.path_consistency, max_abs(Mat2(again - ref)) / std::max(1.0, max_abs(ref)));
    }
    return fg;
}

namespace {

// rotated uniform circle grid staying clear of both Sym points
std::vector<cplx> twisted_samples(int L, cplx l1, cplx l2, cplx* zeta_out) {
    const double spacing = kTau / L;
    const double candidates[] = {0.5 * spacing, 0.25 * spacing, spacing / 6.0, 0.37 * spacing};
    double chosen = candidates[0];
    for (double tw : candidates) {
        bool ok = true;
        for (cplx lk : {l1, l2}) {
            double m = std::fmod(std::arg(lk) - tw, spacing);
            if (m < 0.0) m += spacing;
            if (std::min(m, spacing - m) < spacing / 8.0) ok = false;
        }
        if (ok) {
            chosen = tw;
            break;
        }
    }
    std::vector<cplx> mus(static_cast<size_t>(L));
    for (int j = 0; j < L; ++j) mus[static_cast<size_t>(j)] = unit_phase(chosen + spacing * j);
    if (zeta_out) *zeta_out = unit_phase(chosen);
    return mus;
}

} // namespace

FrameGrid compute_frames(const SurfaceParams& params, const AccessorySeries& series,
                         const SurfaceOptions& opts) {
    params.validate();
    series.validate(params);
    opts.validate();
    MonodromyOptions mopts;
    mopts.base_point = opts.base_point;
    mopts.tol = opts.ode_tol;

    int L = opts.lambda_samples;
    for (;;) {
        cplx zeta;
        auto mus = twisted_samples(L, params.lambda1, params.lambda2, &zeta);
        UnitarizerField field =
            unitarizer_field(params, series, mus, mopts, opts.unitarizer_threshold);

        FrameGridInputs in;
        in.circle_samples = mus;
        in.initial.resize(mus.size());
        for (size_t k = 0; k < mus.size(); ++k) in.initial[k] = field.at[k].D();
        in.potential = [&params, &series](cplx mu) { return potential_at(params, series, mu); };

        FrameGrid fg = compute_frames_raw(params, opts, in);
        fg.field = std::move(field);
        fg.diag.unitarizer_max_residual = fg.field.max_residual;
        fg.diag.unitarizer_max_dlog_rho = fg.field.max_dlog_rho;

        const int na = std::min(16, L);
        std::vector<double> defect(static_cast<size_t>(na), 0.0);
        parallel_for(static_cast<size_t>(na), [&](size_t k) {
            defect[k] = apparency_defect(params, series, mus[k * static_cast<size_t>(L / na)], mopts);
        });
        for (double d : defect) fg.diag.apparency_max = std::max(fg.diag.apparency_max, d);

        if (fg.diag.max_fit_residual <= opts.fit_warn || 2 * L > opts.max_lambda_samples)
            return fg;
        L *= 2;
    }
}

// ---------------------------------------------------------------------------
// immersion: pointwise unitary factorization on the sample circle

namespace {

using FFTEngine = Eigen::FFT<double>;

Mat2 su2_project(const Mat2& m) {
    Vec4 q = su2_to_quat(m);
    const double n = q.norm();
    if (!(n > 0.0)) throw SurfaceError("surface: cannot project a zero matrix to SU(2)");
    return quat_to_su2(Vec4(q / n));
}

// loop values on the circle grid zeta * exp(2 pi i l / N), via inverse DFT of
// the twisted coefficients. The rotation keeps the grid off the Sym points.
std::vector<Mat2> loop_samples(const LaurentLoop& loop, int N, cplx zeta, FFTEngine& fft) {
    std::vector<Mat2> out(static_cast<size_t>(N), mat2_zero());
    if (loop.empty()) return out;
    if (loop.hi() - loop.lo() + 1 > N) {
        auto pts = LaurentLoop::circle_points(N);
        for (int l = 0; l < N; ++l)
            out[static_cast<size_t>(l)] = loop.eval(zeta * pts[static_cast<size_t>(l)]);
        return out;
    }
    std::vector<cplx> bins(static_cast<size_t>(N)), vals(static_cast<size_t>(N));
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            std::fill(bins.begin(), bins.end(), cplx(0.0, 0.0));
            for (int k = loop.lo(); k <= loop.hi(); ++k)
                bins[static_cast<size_t>(((k % N) + N) % N)] +=
                    loop.coefficient(k)(r, c) * std::pow(zeta, k) * double(N);
            fft.inv(vals, bins);
            for (int l = 0; l < N; ++l) out[static_cast<size_t>(l)](r, c) = vals[static_cast<size_t>(l)];
        }
    return out;
}

// Newton iteration for the spectral factor on the circle:
// B <- ((T_0 + I)/2 + sum_{k>0} T_k lambda^k) B with T = B^{-*} G B^{-1}.
// Fixed points are the analytic factors B^* B = G; returns the relative
// defect max |T - I| reached.
bool wilson_factor(const std::vector<Mat2>& G, std::vector<Mat2>& B, double tol, int max_iter,
                   FFTEngine& fft, double* final_err) {
    const int N = static_cast<int>(G.size());
    if (static_cast<int>(B.size()) != N) B.assign(static_cast<size_t>(N), mat2_id());
    std::vector<Mat2> T(static_cast<size_t>(N)), U(static_cast<size_t>(N));
    std::vector<cplx> a(static_cast<size_t>(N)), b(static_cast<size_t>(N)), c(static_cast<size_t>(N));
    double prev = kInf;
    int stall = 0;
    for (int it = 0; it < max_iter; ++it) {
        double err = 0.0;
        for (int l = 0; l < N; ++l) {
            const Mat2 Binv = inv2(B[static_cast<size_t>(l)]);
            T[static_cast<size_t>(l)] = Binv.adjoint() * G[static_cast<size_t>(l)] * Binv;
            err = std::max(err, max_abs(Mat2(T[static_cast<size_t>(l)] - mat2_id())));
        }
        if (final_err) *final_err = err;
        if (err <= tol) return true;
        if (!std::isfinite(err) || err > 1e8) return false;
        if (err > 0.999 * prev) {
            if (++stall > 20) return false; // hit the roundoff floor or diverging
        } else {
            stall = 0;
        }
        prev = std::min(prev, err);
        for (int r = 0; r < 2; ++r)
            for (int cc = 0; cc < 2; ++cc) {
                for (int l = 0; l < N; ++l) a[static_cast<size_t>(l)] = T[static_cast<size_t>(l)](r, cc);
                fft.fwd(b, a);
                std::fill(c.begin(), c.end(), cplx(0.0, 0.0));
                c[0] = 0.5 * b[0];
                for (int k = 1; k < N / 2; ++k) c[static_cast<size_t>(k)] = b[static_cast<size_t>(k)];
                fft.inv(a, c);
                for (int l = 0; l < N; ++l) U[static_cast<size_t>(l)](r, cc) = a[static_cast<size_t>(l)];
            }
        for (int l = 0; l < N; ++l)
            B[static_cast<size_t>(l)] = (U[static_cast<size_t>(l)] + 0.5 * mat2_id()) * B[static_cast<size_t>(l)];
    }
    return false;
}

struct SymPair {
    Mat2 F1, F2;
    double unitarity = 0.0, holomorphy = 0.0, recon = 0.0;
    bool fallback = false;
};

// Per-point unitary factor evaluated at the two Sym points. Works on circle
// samples with a warm-started Wilson iteration; falls back to the dense
// factorization when the iteration cannot reach the floor. Unitarizer-built
// frames carry weights that blow up at the Sym points, which leaves the
// sampled Gram indefinite at any resolution, so dense mode skips the
// iteration and factors the Gram loop directly.
class PointFactorizer {
public:
    PointFactorizer(int N, cplx lam1, cplx lam2, const IwasawaOptions& iwa, bool dense = false)
        : N_(N), zeta_(unit_phase(kPi / double(N))), l1_(lam1 / zeta_), l2_(lam2 / zeta_),
          iwa_(iwa), dense_(dense) {}

    SymPair process(const LaurentLoop& phi, std::vector<Mat2>& warm) {
        if (dense_) return process_dense(phi);
        SymPair out;
        const auto samples = loop_samples(phi, N_, zeta_, fft_);
        std::vector<Mat2> G(static_cast<size_t>(N_));
        bool positive = true;
        for (int l = 0; l < N_; ++l) {
            G[static_cast<size_t>(l)] =
                samples[static_cast<size_t>(l)].adjoint() * samples[static_cast<size_t>(l)];
            if (!(G[static_cast<size_t>(l)].trace().real() > 0.0) ||
                !(G[static_cast<size_t>(l)].determinant().real() > 0.0))
                positive = false;
        }
        double err = kInf;
        bool ok = false;
        if (positive) {
            const bool had_warm = !warm.empty();
            ok = wilson_factor(G, warm, 1e-12, had_warm ? 60 : 200, fft_, &err);
            if (!ok && err <= 1e-6) ok = true; // converged to its conditioning floor
        }
        if (!ok) {
            warm.clear();
            return process_dense(phi);
        }
        out.recon = err;
        std::vector<Mat2> F(static_cast<size_t>(N_));
        for (int l = 0; l < N_; ++l) {
            F[static_cast<size_t>(l)] =
                samples[static_cast<size_t>(l)] * inv2(warm[static_cast<size_t>(l)]);
            out.unitarity = std::max(
                out.unitarity, max_abs(Mat2(F[static_cast<size_t>(l)].adjoint() *
                                                F[static_cast<size_t>(l)] -
                                            mat2_id())));
        }
        // Fourier side: Sym-point values plus the outermost alias band, which
        // measures how far F is from a trig polynomial of this resolution
        std::array<std::vector<cplx>, 4> coef;
        std::vector<cplx> buf(static_cast<size_t>(N_));
        for (int e = 0; e < 4; ++e) {
            const int r = e >> 1, cc = e & 1;
            for (int l = 0; l < N_; ++l)
                buf[static_cast<size_t>(l)] = F[static_cast<size_t>(l)](r, cc);
            coef[static_cast<size_t>(e)].resize(static_cast<size_t>(N_));
            fft_.fwd(coef[static_cast<size_t>(e)], buf);
        }
        out.F1 = eval_coefs(coef, l1_);
        out.F2 = eval_coefs(coef, l2_);
        double peak = 0.0, tail = 0.0;
        const int band = std::max(2, N_ / 16);
        for (int e = 0; e < 4; ++e)
            for (int k = 0; k < N_; ++k) {
                const int ks = k < N_ / 2 ? k : k - N_;
                const double m = std::abs(coef[static_cast<size_t>(e)][static_cast<size_t>(k)]);
                peak = std::max(peak, m);
                if (std::abs(ks) >= N_ / 2 - band) tail = std::max(tail, m);
            }
        out.holomorphy = peak > 0.0 ? tail / peak : 0.0;
        return out;
    }

private:
    // On the circle F = phi * B^{-1} pointwise, so the Sym-point values come
    // straight from the spectral factor of the Gram loop; no resampling and no
    // loop fit for F. Reconstruction is exact by construction, and the factor
    // is outer, so the unitarity defect carries all the error.
    SymPair process_dense(const LaurentLoop& phi) {
        SymPair out;
        out.fallback = true;
        const LaurentLoop B = spectral_factor(gram_loop(phi), iwa_.spectral);
        auto Fat = [&](cplx lam) { return Mat2(phi.eval(lam) * inv2(B.eval(lam))); };
        auto udef = [](const Mat2& F) { return max_abs(Mat2(F.adjoint() * F - mat2_id())); };
        out.F1 = Fat(zeta_ * l1_);
        out.F2 = Fat(zeta_ * l2_);
        out.unitarity = std::max(udef(out.F1), udef(out.F2));
        for (int l = 0; l < 12; ++l) {
            const Mat2 F = Fat(zeta_ * unit_phase(2.0 * kPi * double(l) / 12.0));
            out.unitarity = std::max(out.unitarity, udef(F));
        }
        return out;
    }

    Mat2 eval_coefs(const std::array<std::vector<cplx>, 4>& coef, cplx lam) const {
        Mat2 acc = mat2_zero();
        auto add = [&](int bin, cplx power) {
            for (int e = 0; e < 4; ++e)
                acc(e >> 1, e & 1) += coef[static_cast<size_t>(e)][static_cast<size_t>(bin)] * power;
        };
        add(0, 1.0);
        cplx ppos(1.0, 0.0), pneg(1.0, 0.0);
        const cplx ilam = std::conj(lam); // Sym points sit on the unit circle
        for (int k = 1; k <= N_ / 2; ++k) {
            ppos *= lam;
            pneg *= ilam;
            if (k < N_ / 2) add(k, ppos);
            add(N_ - k, pneg);
        }
        return acc / double(N_);
    }

    int N_;
    cplx zeta_;
    cplx l1_, l2_; // Sym points in the rotated grid coordinate
    IwasawaOptions iwa_;
    bool dense_;
    FFTEngine fft_;
};

} // namespace

namespace {

SurfaceMesh immerse_impl(const FrameGrid& fg, const FrameGrid* coarse, const SurfaceParams& params,
                         const SurfaceOptions& opts) {
    params.validate();
    opts.validate();
    if (fg.cells.empty()) throw SurfaceError("immerse: frame grid has no cells");
    if (fg.circle_samples.empty()) throw SurfaceError("immerse: frame grid has no circle samples");
    const int N = static_cast<int>(fg.circle_samples.size());
    const cplx l1 = params.lambda1, l2 = params.lambda2;

    int Nc = 0;
    if (coarse) {
        Nc = static_cast<int>(coarse->circle_samples.size());
        if (2 * Nc != N)
            throw SurfaceError("immerse: coarse grid must carry half the circle samples");
        if (coarse->cells.size() != fg.cells.size())
            throw SurfaceError("immerse: grids disagree on the cell decomposition");
        for (size_t ci = 0; ci < fg.cells.size(); ++ci) {
            const CellGrid& a = fg.cells[ci];
            const CellGrid& b = coarse->cells[ci];
            if (a.n_rows != b.n_rows || a.n_cols != b.n_cols || a.z.size() != b.z.size())
                throw SurfaceError("immerse: grids disagree on the cell geometry");
        }
    }

    SurfaceMesh mesh;
    mesh.diag = fg.diag;
    if (coarse) {
        const GridDiagnostics& d = coarse->diag;
        mesh.diag.max_det_deviation = std::max(mesh.diag.max_det_deviation, d.max_det_deviation);
        mesh.diag.path_consistency = std::max(mesh.diag.path_consistency, d.path_consistency);
        mesh.diag.unitarizer_max_residual =
            std::max(mesh.diag.unitarizer_max_residual, d.unitarizer_max_residual);
        mesh.diag.unitarizer_max_dlog_rho =
            std::max(mesh.diag.unitarizer_max_dlog_rho, d.unitarizer_max_dlog_rho);
    }

    for (size_t ci = 0; ci < fg.cells.size(); ++ci) {
        const CellGrid& cell = fg.cells[ci];
        const size_t npts = cell.z.size();
        if (cell.frame.size() != npts)
            throw SurfaceError("immerse: cell frames missing or incomplete");
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.resize(static_cast<size_t>(base) + npts + 1);
        mesh.piece_id.resize(mesh.vertices.size(), 0);

        std::vector<Mat2> F1s(npts), F2s(npts);
        std::vector<double> uerr(npts, 0.0), herr(npts, 0.0), rerr(npts, 0.0), sdev(npts, 0.0);
        std::vector<std::string> failure(static_cast<size_t>(cell.n_cols));

        const CellGrid* ccell = coarse ? &coarse->cells[ci] : nullptr;
        const bool spiked = !fg.field.at.empty();
        parallel_for(static_cast<size_t>(cell.n_cols), [&](size_t j) {
            try {
                PointFactorizer pf(N, l1, l2, opts.iwasawa, spiked);
                PointFactorizer pfc(coarse ? Nc : N, l1, l2, opts.iwasawa, spiked);
                std::vector<Mat2> warm, warmc;
                for (int i = cell.n_rows - 1; i >= 0; --i) {
                    const size_t p = static_cast<size_t>(cell.index(i, static_cast<int>(j)));
                    SymPair s = pf.process(cell.frame[p], warm);
                    if (ccell) {
                        const SymPair sc = pfc.process(ccell->frame[p], warmc);
                        s.F1 = 2.0 * s.F1 - sc.F1;
                        s.F2 = 2.0 * s.F2 - sc.F2;
                        s.unitarity = std::max(s.unitarity, sc.unitarity);
                        s.holomorphy = std::max(s.holomorphy, sc.holomorphy);
                        s.recon = std::max(s.recon, sc.recon);
                    }
                    uerr[p] = s.unitarity;
                    herr[p] = s.holomorphy;
                    rerr[p] = s.recon;
                    F1s[p] = s.F1;
                    F2s[p] = s.F2;
                    const Mat2 X = s.F1 * inv2(s.F2);
                    Vec4 q = su2_to_quat(X);
                    const double qn = q.norm();
                    if (!(qn > 0.0)) throw SurfaceError("immerse: degenerate Sym-point product");
                    sdev[p] = std::max(max_abs(Mat2(X - quat_to_su2(q))), std::abs(qn - 1.0));
                    mesh.vertices[static_cast<size_t>(base) + p] = q / qn;
                }
            } catch (const std::exception& e) {
                failure[j] = e.what();
            }
        });
        for (size_t j = 0; j < failure.size(); ++j)
            if (!failure[j].empty()) {
                std::ostringstream msg;
                msg << "immerse: cell " << ci << ", column " << j << ": " << failure[j];
                throw SurfaceError(msg.str());
            }
        for (size_t p = 0; p < npts; ++p) {
            mesh.diag.max_unitarity_error = std::max(mesh.diag.max_unitarity_error, uerr[p]);
            mesh.diag.max_holomorphy_error = std::max(mesh.diag.max_holomorphy_error, herr[p]);
            mesh.diag.max_recon_error = std::max(mesh.diag.max_recon_error, rerr[p]);
            mesh.diag.su2_deviation_max = std::max(mesh.diag.su2_deviation_max, sdev[p]);
        }

        // cap: per-spoke extrapolation to the site with the local branch
        // exponent, averaged and renormalized
        const double alpha = cell.punctured ? 1.0 / (params.genus + 1.0) : 1.0;
        const int jcap = cell.punctured ? cell.n_cols - 1 : cell.n_cols;
        Vec4 acc = Vec4::Zero();
        std::vector<Vec4> capj(static_cast<size_t>(jcap));
        for (int j = 0; j < jcap; ++j) {
            Eigen::Matrix3d V;
            Eigen::Matrix<double, 3, 4> rhs;
            for (int i = 0; i < 3; ++i) {
                const double ta = std::pow(cell.local_radius(i, j), alpha);
                V(i, 0) = 1.0;
                V(i, 1) = ta;
                V(i, 2) = ta * ta;
                rhs.row(i) =
                    mesh.vertices[static_cast<size_t>(base + cell.index(i, j))].transpose();
            }
            const Eigen::Matrix<double, 3, 4> sol = V.partialPivLu().solve(rhs);
            Vec4 pj = sol.row(0).transpose();
            const double pn = pj.norm();
            if (!(pn > 0.0)) throw SurfaceError("immerse: cap extrapolation collapsed");
            capj[static_cast<size_t>(j)] = pj / pn;
            acc += capj[static_cast<size_t>(j)];
        }
        const double an = acc.norm();
        if (!(an > 0.0)) throw SurfaceError("immerse: cap extrapolations cancel");
        const Vec4 apex = acc / an;
        for (const Vec4& pj : capj)
            mesh.diag.cap_spread = std::max(mesh.diag.cap_spread, (pj - apex).norm());
        const int apex_idx = base + static_cast<int>(npts);
        mesh.vertices[static_cast<size_t>(apex_idx)] = apex;

        for (int i = 0; i + 1 < cell.n_rows; ++i) {
            for (int j = 0; j + 1 < cell.n_cols; ++j)
                mesh.faces.push_back({base + cell.index(i, j), base + cell.index(i, j + 1),
                                      base + cell.index(i + 1, j + 1), base + cell.index(i + 1, j)});
            if (!cell.punctured)
                mesh.faces.push_back({base + cell.index(i, cell.n_cols - 1), base + cell.index(i, 0),
                                      base + cell.index(i + 1, 0),
                                      base + cell.index(i + 1, cell.n_cols - 1)});
        }
        for (int j = 0; j + 1 < cell.n_cols; ++j)
            mesh.faces.push_back({apex_idx, base + cell.index(0, j + 1), base + cell.index(0, j),
                                  base + cell.index(0, j)});
        if (!cell.punctured)
            mesh.faces.push_back({apex_idx, base + cell.index(0, 0),
                                  base + cell.index(0, cell.n_cols - 1),
                                  base + cell.index(0, cell.n_cols - 1)});

        if (cell.punctured) {
            // the duplicated seam columns differ by the loop around the
            // puncture; the transition is constant in z, so its scatter
            // across rows measures the closing quality
            const int last = cell.n_cols - 1;
            auto Wat = [&](const std::vector<Mat2>& Fs, int row) {
                return Mat2(Fs[static_cast<size_t>(cell.index(row, last))] *
                            inv2(Fs[static_cast<size_t>(cell.index(row, 0))]));
            };
            const int mid = cell.n_rows / 2;
            const Mat2 W1m = Wat(F1s, mid), W2m = Wat(F2s, mid);
            for (int i = 0; i < cell.n_rows; ++i) {
                mesh.diag.seam_consistency = std::max(
                    mesh.diag.seam_consistency,
                    std::max(max_abs(Mat2(Wat(F1s, i) - W1m)), max_abs(Mat2(Wat(F2s, i) - W2m))));
            }
            SymmetryAction act{su2_project(W1m), su2_project(W2m)};
            const Vec4 up = su2_to_quat(act.P), uq = su2_to_quat(act.Q);
            for (int i = 0; i < cell.n_rows; ++i) {
                const Vec4 x0 = mesh.vertices[static_cast<size_t>(base + cell.index(i, 0))];
                const Vec4 mapped = quat_mul(up, quat_mul(x0, quat_conj(uq)));
                mesh.diag.overlap_mismatch = std::max(
                    mesh.diag.overlap_mismatch,
                    (mapped - mesh.vertices[static_cast<size_t>(base + cell.index(i, last))]).norm());
            }
            mesh.seam_actions.push_back(act);
        }

        for (int i = 1; i + 1 < cell.n_rows; i += 3)
            for (int j = 1; j + 1 < cell.n_cols; j += 3) {
                const Vec4 tr = mesh.vertices[static_cast<size_t>(base + cell.index(i + 1, j))] -
                                mesh.vertices[static_cast<size_t>(base + cell.index(i - 1, j))];
                const Vec4 tt = mesh.vertices[static_cast<size_t>(base + cell.index(i, j + 1))] -
                                mesh.vertices[static_cast<size_t>(base + cell.index(i, j - 1))];
                const double nr = tr.norm(), nt = tt.norm();
                if (nr > 1e-12 && nt > 1e-12)
                    mesh.diag.conformality_max =
                        std::max(mesh.diag.conformality_max, std::abs(tr.dot(tt)) / (nr * nt));
            }
    }
    return mesh;
}

} // namespace

SurfaceMesh immerse(const FrameGrid& fg, const SurfaceParams& params, const SurfaceOptions& opts) {
    return immerse_impl(fg, nullptr, params, opts);
}

SurfaceMesh immerse(const FrameGrid& fine, const FrameGrid& coarse, const SurfaceParams& params,
                    const SurfaceOptions& opts) {
    return immerse_impl(fine, &coarse, params, opts);
}

// ---------------------------------------------------------------------------
// symmetry closure

SurfaceMesh extend_by_symmetry(const SurfaceMesh& piece, const SurfaceParams& params,
                               const SurfaceOptions& opts) {
    params.validate();
    opts.validate();
    SurfaceMesh out = piece;
    out.projected.clear();

    struct Elem {
        Vec4 u, v;
    };
    auto fingerprint = [](const Vec4& u, const Vec4& v) {
        Eigen::Matrix4d m;
        for (int k = 0; k < 4; ++k) {
            Vec4 e = Vec4::Zero();
            e[k] = 1.0;
            m.col(k) = quat_mul(u, quat_mul(e, quat_conj(v)));
        }
        return m;
    };

    std::vector<Elem> elems{{Vec4(1, 0, 0, 0), Vec4(1, 0, 0, 0)}};
    std::vector<Eigen::Matrix4d> fps{fingerprint(elems[0].u, elems[0].v)};
    std::vector<Elem> gens;
    for (const SymmetryAction& a : piece.seam_actions) {
        Vec4 u = su2_to_quat(a.P), v = su2_to_quat(a.Q);
        if (!(u.norm() > 0.0) || !(v.norm() > 0.0))
            throw SurfaceError("extend_by_symmetry: degenerate seam action");
        u.normalize();
        v.normalize();
        gens.push_back({u, v});
        gens.push_back({quat_conj(u), quat_conj(v)});
    }

    bool closed = true;
    if (!gens.empty()) {
        for (size_t head = 0; head < elems.size() && closed; ++head) {
            for (const Elem& g : gens) {
                const Vec4 nu = quat_mul(elems[head].u, g.u);
                const Vec4 nv = quat_mul(elems[head].v, g.v);
                const Eigen::Matrix4d f = fingerprint(nu, nv);
                bool dup = false;
                for (const Eigen::Matrix4d& have : fps)
                    if ((have - f).cwiseAbs().maxCoeff() <= opts.group_tol) {
                        dup = true;
                        break;
                    }
                if (dup) continue;
                if (static_cast<int>(elems.size()) >= opts.max_copies) {
                    closed = false;
                    break;
                }
                elems.push_back({nu, nv});
                fps.push_back(f);
            }
        }
    }
    out.copies = static_cast<int>(elems.size());
    out.closed = piece.closed && closed;

    const size_t nv = piece.vertices.size();
    const size_t nf = piece.faces.size();
    for (size_t k = 1; k < elems.size(); ++k) {
        const Vec4 cu = elems[k].u, cv = quat_conj(elems[k].v);
        for (size_t p = 0; p < nv; ++p)
            out.vertices.push_back(quat_mul(cu, quat_mul(piece.vertices[p], cv)));
        out.piece_id.insert(out.piece_id.end(), nv, static_cast<int>(k));
        const int off = static_cast<int>(k * nv);
        for (size_t f = 0; f < nf; ++f) {
            std::array<int, 4> face = piece.faces[f];
            for (int& idx : face) idx += off;
            out.faces.push_back(face);
        }
    }

    const double diam = piece.diameter();
    if (diam > 0.0 && piece.diag.overlap_mismatch > opts.overlap_threshold_rel * diam) {
        if (opts.throw_on_overlap) {
            std::ostringstream msg;
            msg << "extend_by_symmetry: seam overlap mismatch " << piece.diag.overlap_mismatch
                << " exceeds " << opts.overlap_threshold_rel << " x diameter " << diam;
            throw SurfaceError(msg.str());
        }
        out.closed = false;
    }
    return out;
}

SurfaceMesh build_surface(const SurfaceParams& params, const AccessorySeries& series,
                          const SurfaceOptions& opts) {
    if (opts.sym_extrapolation && opts.max_lambda_samples >= 16) {
        const int lc = opts.max_lambda_samples / 2;
        SurfaceOptions fine = opts;
        fine.lambda_samples = fine.max_lambda_samples = 2 * lc;
        SurfaceOptions half = opts;
        half.lambda_samples = half.max_lambda_samples = lc;
        const FrameGrid fgf = compute_frames(params, series, fine);
        const FrameGrid fgc = compute_frames(params, series, half);
        const SurfaceMesh piece = immerse(fgf, fgc, params, opts);
        return extend_by_symmetry(piece, params, opts);
    }
    const FrameGrid fg = compute_frames(params, series, opts);
    const SurfaceMesh piece = immerse(fg, params, opts);
    return extend_by_symmetry(piece, params, opts);
}

// ---------------------------------------------------------------------------
// measurements

void stereographic(SurfaceMesh& mesh, const Vec4& pole) {
    const Vec4 pn = unit_pole(pole);
    std::vector<size_t> hits;
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
        if ((mesh.vertices[i] - pn).norm() < 1e-6) hits.push_back(i);
    if (!hits.empty()) {
        std::ostringstream msg;
        msg << "stereographic: " << hits.size() << " vertices within 1e-6 of the pole (";
        for (size_t k = 0; k < hits.size() && k < 8; ++k) msg << (k ? ", " : "") << hits[k];
        if (hits.size() > 8) msg << ", ...";
        msg << ")";
        throw SurfaceError(msg.str());
    }
    mesh.projected.resize(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
        mesh.projected[i] = stereographic_point(mesh.vertices[i], pn);
}

double SurfaceMesh::diameter() const {
    const size_t n = vertices.size();
    if (n < 2) return 0.0;
    const size_t step = std::max<size_t>(1, n / 64);
    double best = 0.0;
    for (size_t i = 0; i < n; i += step)
        for (size_t j = 0; j < n; ++j) best = std::max(best, (vertices[i] - vertices[j]).norm());
    return best;
}

namespace {

double geodesic_side(const Vec4& x, const Vec4& y) {
    return 2.0 * std::asin(std::min(1.0, 0.5 * (x - y).norm()));
}

// spherical excess via l'Huilier; flat or collapsed triangles report degenerate
double triangle_area_s3(const Vec4& x, const Vec4& y, const Vec4& w, bool* degenerate) {
    const double a = geodesic_side(y, w), b = geodesic_side(w, x), c = geodesic_side(x, y);
    if (a < 1e-14 || b < 1e-14 || c < 1e-14) {
        *degenerate = true;
        return 0.0;
    }
    const double s = 0.5 * (a + b + c);
    const double t = std::tan(0.5 * s) * std::tan(0.5 * std::max(0.0, s - a)) *
                     std::tan(0.5 * std::max(0.0, s - b)) * std::tan(0.5 * std::max(0.0, s - c));
    if (!(t > 0.0)) {
        *degenerate = true;
        return 0.0;
    }
    return 4.0 * std::atan(std::sqrt(t));
}

} // namespace

double mesh_area(const SurfaceMesh& mesh, int* degenerate_count) {
    if (mesh.vertices.empty())
        throw SurfaceError("mesh_area: mesh carries no 4-space vertices");
    const int nv = static_cast<int>(mesh.vertices.size());
    double area = 0.0;
    int degenerate = 0;
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 4; ++k)
            if (f[static_cast<size_t>(k)] < 0 || f[static_cast<size_t>(k)] >= nv)
                throw SurfaceError("mesh_area: face index out of range");
        const Vec4& a = mesh.vertices[static_cast<size_t>(f[0])];
        const Vec4& b = mesh.vertices[static_cast<size_t>(f[1])];
        const Vec4& c = mesh.vertices[static_cast<size_t>(f[2])];
        bool deg = false;
        if (f[3] == f[2]) {
            area += triangle_area_s3(a, b, c, &deg);
        } else {
            const Vec4& d = mesh.vertices[static_cast<size_t>(f[3])];
            bool d2 = false;
            area += triangle_area_s3(a, b, c, &deg) + triangle_area_s3(a, c, d, &d2);
            deg = deg || d2;
        }
        if (deg) ++degenerate;
    }
    if (degenerate_count) *degenerate_count = degenerate;
    return area;
}

std::vector<Vec4> vertex_normals(const SurfaceMesh& mesh) {
    std::vector<Vec4> normals(mesh.vertices.size(), Vec4::Zero());
    for (const auto& f : mesh.faces) {
        const bool tri = f[3] == f[2];
        const Vec4& a = mesh.vertices[static_cast<size_t>(f[0])];
        const Vec4& b = mesh.vertices[static_cast<size_t>(f[1])];
        const Vec4& c = mesh.vertices[static_cast<size_t>(f[2])];
        Vec4 nf;
        if (tri) {
            Vec4 p = a + b + c;
            nf = cross4(p.normalized(), b - a, c - a);
        } else {
            const Vec4& d = mesh.vertices[static_cast<size_t>(f[3])];
            Vec4 p = a + b + c + d;
            nf = cross4(p.normalized(), c - a, d - b);
        }
        const int verts = tri ? 3 : 4;
        for (int k = 0; k < verts; ++k) normals[static_cast<size_t>(f[static_cast<size_t>(k)])] += nf;
    }
    for (size_t i = 0; i < normals.size(); ++i) {
        const Vec4& x = mesh.vertices[i];
        normals[i] -= normals[i].dot(x) * x;
        const double n = normals[i].norm();
        if (n > 0.0) normals[i] /= n;
    }
    return normals;
}

double estimate_mean_curvature(const SurfaceMesh& mesh, double eps) {
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("estimate_mean_curvature: eps must lie in (0, 0.5)");
    const auto normals = vertex_normals(mesh);
    const double base = mesh_area(mesh);
    if (!(base > 0.0)) throw SurfaceError("estimate_mean_curvature: zero base area");
    SurfaceMesh offset = mesh;
    double shifted[2];
    for (int s = 0; s < 2; ++s) {
        const double sg = s == 0 ? 1.0 : -1.0;
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            Vec4 v = std::cos(eps) * mesh.vertices[i] + sg * std::sin(eps) * normals[i];
            const double n = v.norm();
            offset.vertices[i] = n > 0.0 ? Vec4(v / n) : mesh.vertices[i];
        }
        shifted[s] = mesh_area(offset);
    }
    return -(shifted[0] - shifted[1]) / (4.0 * eps * base);
}

// ---------------------------------------------------------------------------
// mesh files

void export_mesh(const SurfaceMesh& mesh, MeshFormat format, const std::string& path) {
    if (mesh.projected.empty())
        throw SurfaceError("export_mesh: no projected coordinates; run stereographic() first");
    const int nv = static_cast<int>(mesh.projected.size());
    for (const auto& f : mesh.faces)
        for (int k = 0; k < 4; ++k)
            if (f[static_cast<size_t>(k)] < 0 || f[static_cast<size_t>(k)] >= nv)
                throw SurfaceError("export_mesh: face index out of range");
    auto piece_of = [&](const std::array<int, 4>& f) {
        return static_cast<size_t>(f[0]) < mesh.piece_id.size() ? mesh.piece_id[static_cast<size_t>(f[0])]
                                                                : 0;
    };

    FILE* out = std::fopen(path.c_str(), "w");
    if (!out) throw SurfaceError("export_mesh: cannot open " + path);
    if (format == MeshFormat::obj) {
        std::fprintf(out, "# stereographic surface mesh, %d symmetry copies\n", mesh.copies);
        for (const Vec3& p : mesh.projected)
            std::fprintf(out, "v %.17g %.17g %.17g\n", p[0], p[1], p[2]);
        int group = -1;
        for (const auto& f : mesh.faces) {
            const int g = piece_of(f);
            if (g != group) {
                std::fprintf(out, "g piece_%d\n", g);
                group = g;
            }
            if (f[3] == f[2])
                std::fprintf(out, "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
            else
                std::fprintf(out, "f %d %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
        }
    } else {
        std::fprintf(out, "ply\nformat ascii 1.0\n");
        std::fprintf(out, "comment stereographic surface mesh, %d symmetry copies\n", mesh.copies);
        std::fprintf(out, "element vertex %d\n", nv);
        std::fprintf(out, "property double x\nproperty double y\nproperty double z\n");
        std::fprintf(out, "property int piece\n");
        std::fprintf(out, "element face %zu\n", mesh.faces.size());
        std::fprintf(out, "property list uchar int vertex_indices\nend_header\n");
        for (int i = 0; i < nv; ++i) {
            const Vec3& p = mesh.projected[static_cast<size_t>(i)];
            const int piece =
                static_cast<size_t>(i) < mesh.piece_id.size() ? mesh.piece_id[static_cast<size_t>(i)] : 0;
            std::fprintf(out, "%.17g %.17g %.17g %d\n", p[0], p[1], p[2], piece);
        }
        for (const auto& f : mesh.faces) {
            if (f[3] == f[2])
                std::fprintf(out, "3 %d %d %d\n", f[0], f[1], f[2]);
            else
                std::fprintf(out, "4 %d %d %d %d\n", f[0], f[1], f[2], f[3]);
        }
    }
    std::fclose(out);
}

namespace {

SurfaceMesh import_obj(std::istream& in) {
    SurfaceMesh mesh;
    std::vector<int> face_piece;
    std::map<std::string, int> groups;
    int piece = 0;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p[0] >> p[1] >> p[2]))
                throw SurfaceError("import_mesh: malformed vertex at line " + std::to_string(lineno));
            mesh.projected.push_back(p);
        } else if (tag == "g") {
            std::string name;
            ls >> name;
            auto it = groups.find(name);
            if (it == groups.end()) it = groups.emplace(name, static_cast<int>(groups.size())).first;
            piece = it->second;
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) idx.push_back(std::stoi(tok) - 1);
            if (idx.size() != 3 && idx.size() != 4)
                throw SurfaceError("import_mesh: face at line " + std::to_string(lineno) +
                                   " must have 3 or 4 vertices");
            mesh.faces.push_back({idx[0], idx[1], idx[2], idx.size() == 4 ? idx[3] : idx[2]});
            face_piece.push_back(piece);
        }
    }
    const int nv = static_cast<int>(mesh.projected.size());
    mesh.piece_id.assign(static_cast<size_t>(nv), 0);
    for (size_t f = 0; f < mesh.faces.size(); ++f)
        for (int k = 0; k < 4; ++k) {
            const int v = mesh.faces[f][static_cast<size_t>(k)];
            if (v < 0 || v >= nv) throw SurfaceError("import_mesh: face index out of range");
            mesh.piece_id[static_cast<size_t>(v)] = face_piece[f];
        }
    mesh.copies = groups.empty() ? 1 : static_cast<int>(groups.size());
    return mesh;
}

SurfaceMesh import_ply(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "ply") throw SurfaceError("import_mesh: not a ply file");
    size_t nv = 0, nf = 0;
    bool has_piece = false;
    bool ascii = false;
    std::vector<std::string> vertex_props;
    std::string element;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "comment") continue;
        if (tag == "format") {
            std::string kind;
            ls >> kind;
            ascii = kind == "ascii";
        } else if (tag == "element") {
            std::string what;
            size_t count = 0;
            ls >> what >> count;
            element = what;
            if (what == "vertex")
                nv = count;
            else if (what == "face")
                nf = count;
            else
                throw SurfaceError("import_mesh: unsupported ply element " + what);
        } else if (tag == "property") {
            if (element == "vertex") {
                std::string type, name;
                ls >> type >> name;
                vertex_props.push_back(name);
                if (name == "piece") has_piece = true;
            }
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!ascii) throw SurfaceError("import_mesh: only ascii ply is supported");
    if (vertex_props.size() < 3 || vertex_props[0] != "x" || vertex_props[1] != "y" ||
        vertex_props[2] != "z")
        throw SurfaceError("import_mesh: ply vertex layout must start with x y z");

    SurfaceMesh mesh;
    mesh.projected.resize(nv);
    mesh.piece_id.assign(nv, 0);
    int max_piece = 0;
    for (size_t i = 0; i < nv; ++i) {
        if (!std::getline(in, line)) throw SurfaceError("import_mesh: truncated ply vertices");
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) throw SurfaceError("import_mesh: malformed ply vertex");
        mesh.projected[i] = Vec3(x, y, z);
        if (has_piece) {
            int p = 0;
            if (!(ls >> p)) throw SurfaceError("import_mesh: missing piece id");
            mesh.piece_id[i] = p;
            max_piece = std::max(max_piece, p);
        }
    }
    for (size_t f = 0; f < nf; ++f) {
        if (!std::getline(in, line)) throw SurfaceError("import_mesh: truncated ply faces");
        std::istringstream ls(line);
        int count = 0;
        if (!(ls >> count) || (count != 3 && count != 4))
            throw SurfaceError("import_mesh: ply faces must have 3 or 4 vertices");
        std::array<int, 4> face{};
        for (int k = 0; k < count; ++k)
            if (!(ls >> face[static_cast<size_t>(k)]))
                throw SurfaceError("import_mesh: malformed ply face");
        if (count == 3) face[3] = face[2];
        for (int k = 0; k < 4; ++k)
            if (face[static_cast<size_t>(k)] < 0 || face[static_cast<size_t>(k)] >= static_cast<int>(nv))
                throw SurfaceError("import_mesh: face index out of range");
        mesh.faces.push_back(face);
    }
    mesh.copies = max_piece + 1;
    return mesh;
}

} // namespace

SurfaceMesh import_mesh(MeshFormat format, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SurfaceError("import_mesh: cannot open " + path);
    return format == MeshFormat::obj ? import_obj(in) : import_ply(in);
}

} // namespace cmcforge
