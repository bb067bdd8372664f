#include "cmcforge/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace cmcforge {

std::vector<cplx> poly_roots(const Poly& p) {
    const int n = p.degree();
    if (n <= 0) return {};
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
    const cplx lead = p.coefficient(n);
    for (int i = 1; i < n; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) C(i, n - 1) = -p.coefficient(i) / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> roots(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) roots[static_cast<size_t>(i)] = es.eigenvalues()(i);
    return roots;
}

namespace {

int multiplicity_of(const Poly& p, cplx z, double rel_tol) {
    // count leading vanishing derivatives, scaled by coefficient magnitude
    const double scale = std::max(p.max_coefficient_abs(), 1e-300);
    int mult = 0;
    Poly d = p;
    while (d.degree() >= 0 && std::abs(d.eval(z)) <= rel_tol * scale * std::max(1.0, std::abs(z))) {
        ++mult;
        d = d.derivative();
    }
    return std::max(mult, 1);
}

std::vector<ZeroInfo> disk_zeros(const Poly& p, const AnalysisOptions& opts, int series_N,
                                 double series_last_abs) {
    std::vector<ZeroInfo> out;
    if (p.degree() <= 0) return out;
    std::vector<cplx> roots = poly_roots(p);
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    std::vector<bool> used(roots.size(), false);
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        if (std::abs(roots[i]) > opts.disk_radius + 1e-12) continue;
        // cluster numerically coincident roots into one entry
        ZeroInfo zi;
        zi.z = roots[i];
        int cluster = 1;
        for (size_t j = i + 1; j < roots.size(); ++j) {
            if (!used[j] && std::abs(roots[j] - roots[i]) < 1e-7) {
                used[j] = true;
                ++cluster;
            }
        }
        zi.multiplicity = std::max(cluster, multiplicity_of(p, zi.z, opts.multiplicity_tol));
        // truncation confidence: compare the last retained series term with
        // the local polynomial scale at the zero
        double local = 0.0;
        for (int k = 0; k <= p.degree(); ++k)
            local = std::max(local, std::abs(p.coefficient(k)) * std::pow(std::abs(zi.z), k));
        double tail = series_last_abs * std::pow(std::abs(zi.z), series_N);
        zi.low_confidence = (local == 0.0) || (tail > opts.tail_fraction * local);
        out.push_back(zi);
    }
    return out;
}

} // namespace

DiskZeroReport roots_in_disk(const SurfaceParams& params, const AccessorySeries& series,
                             const AnalysisOptions& opts) {
    series.validate(params);
    DiskZeroReport rep;
    Poly B = reconstruct_B(params, series);
    Poly A1 = series.A_poly() + Poly::constant(1.0);
    double last_a = std::abs(series.a.back());
    double last_c = std::abs(series.c.back());
    rep.zeros_B = disk_zeros(B, opts, series.N, std::max(last_a, last_c));
    rep.zeros_A_plus_1 = disk_zeros(A1, opts, series.N, last_a);
    return rep;
}

StabilityReport classify_stability(const SurfaceParams& params, const AccessorySeries& series,
                                   const AnalysisOptions& opts) {
    DiskZeroReport rep = roots_in_disk(params, series, opts);
    StabilityReport st;
    for (const ZeroInfo& zb : rep.zeros_B) {
        for (const ZeroInfo& za : rep.zeros_A_plus_1) {
            if (std::abs(zb.z - za.z) <= opts.match_tol && zb.multiplicity <= za.multiplicity) {
                st.lambda0.push_back(0.5 * (zb.z + za.z));
                break;
            }
        }
    }
    st.unstable_count = static_cast<int>(st.lambda0.size());
    return st;
}

} // namespace cmcforge
