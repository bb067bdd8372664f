#include "cmcforge/unitarizer.hpp"

#include <cmath>
#include <sstream>

#include "cmcforge/parallel.hpp"

namespace cmcforge {

Mat2 UnitarizerResult::D() const {
    // square root of a positive 2x2 with det 1: (h + I) / sqrt(tr h + 2)
    const double t = h.trace().real();
    return Mat2((h + mat2_id()) / std::sqrt(t + 2.0));
}

Mat2 UnitarizerResult::conjugated(const Mat2& M) const {
    const Mat2 d = D();
    const Mat2 hinv = h.trace().real() * mat2_id() - h; // adjugate; det h = 1
    const Mat2 dinv = (hinv + mat2_id()) / std::sqrt(hinv.trace().real() + 2.0);
    return Mat2(d * M * dinv);
}

double unitarizer_energy(const std::vector<Mat2>& Ms, double rho) {
    // sum_i || M_i^* h M_i - h ||_F^2 / (rho^2 + rho^-2),  h = diag(rho, 1/rho)
    const double ir = 1.0 / rho;
    double acc = 0.0;
    for (const Mat2& M : Ms) {
        const cplx a = M(0, 0), b = M(0, 1), c = M(1, 0), d = M(1, 1);
        const double e00 = rho * (std::norm(a) - 1.0) + ir * std::norm(c);
        const double e11 = rho * std::norm(b) + ir * (std::norm(d) - 1.0);
        const cplx e01 = rho * std::conj(a) * b + ir * std::conj(c) * d;
        acc += e00 * e00 + e11 * e11 + 2.0 * std::norm(e01);
    }
    return acc / (rho * rho + ir * ir);
}

namespace {

double residual_at(const std::vector<Mat2>& Ms, double rho) {
    UnitarizerResult tmp;
    tmp.rho = rho;
    tmp.h = mat2_zero();
    tmp.h(0, 0) = rho;
    tmp.h(1, 1) = 1.0 / rho;
    double worst = 0.0;
    for (const Mat2& M : Ms) {
        Mat2 U = tmp.conjugated(M);
        worst = std::max(worst, frob(Mat2(U.adjoint() * U - mat2_id())));
    }
    return worst;
}

// golden-section minimum of E(exp(t)) on [lo, hi]
double golden_min(const std::vector<Mat2>& Ms, double lo, double hi) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = unitarizer_energy(Ms, std::exp(x1)), f2 = unitarizer_energy(Ms, std::exp(x2));
    while (b - a > 1e-13) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = unitarizer_energy(Ms, std::exp(x1));
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = unitarizer_energy(Ms, std::exp(x2));
        }
    }
    return 0.5 * (a + b);
}

// Newton steps on dE/dt with central differences; the step size is walked
// down so the last stage resolves the minimum near the roundoff floor
double newton_polish(const std::vector<Mat2>& Ms, double t) {
    for (double h : {1e-4, 1e-6, 3e-8}) {
        for (int it = 0; it < 6; ++it) {
            double fm = unitarizer_energy(Ms, std::exp(t - h));
            double f0 = unitarizer_energy(Ms, std::exp(t));
            double fp = unitarizer_energy(Ms, std::exp(t + h));
            double g = (fp - fm) / (2.0 * h);
            double H = (fp - 2.0 * f0 + fm) / (h * h);
            if (!(H > 0.0)) break;
            double step = g / H;
            if (!std::isfinite(step) || std::abs(step) > 1.0) break;
            t -= step;
            if (std::abs(step) < h * 1e-8) break;
        }
    }
    return t;
}

UnitarizerResult finish(const std::vector<Mat2>& Ms, double t) {
    UnitarizerResult r;
    r.rho = std::exp(t);
    r.energy = unitarizer_energy(Ms, r.rho);
    r.residual = residual_at(Ms, r.rho);
    r.h = mat2_zero();
    r.h(0, 0) = r.rho;
    r.h(1, 1) = 1.0 / r.rho;
    return r;
}

} // namespace

UnitarizerResult solve_unitarizer(const std::vector<Mat2>& Ms, double log_rho_min, double log_rho_max) {
    if (Ms.empty()) throw std::invalid_argument("solve_unitarizer: empty matrix set");
    // coarse scan to bracket the global minimum on the log axis
    const int n = 181;
    double best_t = 0.0, best_e = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double t = log_rho_min + (log_rho_max - log_rho_min) * i / (n - 1);
        double e = unitarizer_energy(Ms, std::exp(t));
        if (e < best_e) {
            best_e = e;
            best_t = t;
        }
    }
    const double dt = (log_rho_max - log_rho_min) / (n - 1);
    double t = golden_min(Ms, best_t - dt, best_t + dt);
    return finish(Ms, newton_polish(Ms, t));
}

UnitarizerResult invariant_form(const std::vector<Mat2>& Ms) {
    if (Ms.empty()) throw std::invalid_argument("invariant_form: empty matrix set");
    // Hermitian h packed as (h00, h11, Re h01, Im h01); each matrix contributes
    // four real rows of the linear map h -> M^* h M - h
    const Mat2 basis[4] = {
        (Mat2() << 1, 0, 0, 0).finished(), (Mat2() << 0, 0, 0, 1).finished(),
        (Mat2() << 0, 1, 1, 0).finished(),
        (Mat2() << 0, cplx(0.0, 1.0), cplx(0.0, -1.0), 0).finished()};
    Eigen::MatrixXd A(4 * static_cast<int>(Ms.size()), 4);
    for (size_t i = 0; i < Ms.size(); ++i) {
        for (int j = 0; j < 4; ++j) {
            const Mat2 E = Ms[i].adjoint() * basis[j] * Ms[i] - basis[j];
            A(4 * static_cast<int>(i) + 0, j) = E(0, 0).real();
            A(4 * static_cast<int>(i) + 1, j) = E(1, 1).real();
            A(4 * static_cast<int>(i) + 2, j) = E(0, 1).real();
            A(4 * static_cast<int>(i) + 3, j) = E(0, 1).imag();
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
    const Eigen::Vector4d sv = svd.singularValues();
    // project the identity onto the near-null subspace: for an irreducible
    // set this keeps the unique ray (oriented positive); for reducible sets
    // it picks the most isotropic of the invariant forms
    const Eigen::Vector4d id_vec(1.0, 1.0, 0.0, 0.0);
    Eigen::Vector4d w = Eigen::Vector4d::Zero();
    for (int j = 3; j >= 0; --j) {
        if (j == 3 || sv(j) <= 1e-8 * std::max(sv(0), 1.0))
            w += svd.matrixV().col(j).dot(id_vec) * svd.matrixV().col(j);
    }
    if (w.norm() < 1e-6) w = svd.matrixV().col(3);

    Mat2 h;
    h << w(0), cplx(w(2), w(3)), cplx(w(2), -w(3)), w(1);
    if (h.trace().real() < 0.0) h = -h;
    Eigen::SelfAdjointEigenSolver<Mat2> eig(h);
    double s_lo = eig.eigenvalues()(0), s_hi = eig.eigenvalues()(1);
    // a genuinely non-unitarizable sample has no positive form; clamp so D
    // stays finite and let the residual report the failure
    const double floor = std::max(s_hi, 1e-300) * 1e-15;
    s_lo = std::max(s_lo, floor);
    const double scale = std::sqrt(s_lo * s_hi);
    UnitarizerResult r;
    r.h = eig.eigenvectors() * Eigen::Vector2cd(s_lo / scale, s_hi / scale).asDiagonal() *
          eig.eigenvectors().adjoint();
    r.h = 0.5 * (r.h + r.h.adjoint().eval()); // exact Hermitian symmetry
    r.rho = s_hi / scale;
    double defect = 0.0;
    for (const Mat2& M : Ms) {
        defect += frob(Mat2(M.adjoint() * r.h * M - r.h));
        r.residual = std::max(r.residual, frob(Mat2(r.conjugated(M).adjoint() * r.conjugated(M) -
                                                    mat2_id())));
    }
    r.energy = defect / frob(r.h);
    return r;
}

UnitarizerResult solve_unitarizer_near(const std::vector<Mat2>& Ms, double rho_init) {
    if (Ms.empty()) throw std::invalid_argument("solve_unitarizer_near: empty matrix set");
    if (!(rho_init > 0.0)) throw std::invalid_argument("solve_unitarizer_near: rho_init must be positive");
    double t0 = std::log(rho_init);
    double h = 0.05;
    double e0 = unitarizer_energy(Ms, std::exp(t0));
    double lo = t0 - h, hi = t0 + h;
    // grow the bracket until both ends are uphill (or the span is generous)
    for (int it = 0; it < 60; ++it) {
        bool lo_up = unitarizer_energy(Ms, std::exp(lo)) >= e0;
        bool hi_up = unitarizer_energy(Ms, std::exp(hi)) >= e0;
        double mid = golden_min(Ms, lo, hi);
        double em = unitarizer_energy(Ms, std::exp(mid));
        if (em <= e0) {
            t0 = mid;
            e0 = em;
        }
        if (lo_up && hi_up) break;
        if (!lo_up) lo -= h;
        if (!hi_up) hi += h;
        h *= 1.6;
    }
    double t = golden_min(Ms, lo, hi);
    return finish(Ms, newton_polish(Ms, t));
}

UnitarizerField unitarizer_field(const SurfaceParams& params, const AccessorySeries& series,
                                 const std::vector<cplx>& mus, const MonodromyOptions& opts,
                                 double residual_error_threshold) {
    UnitarizerField field;
    field.mu = mus;
    field.at.resize(mus.size());
    parallel_for(mus.size(), [&](size_t k) {
        MonodromySet ms = monodromy_set(params, series, mus[k], opts);
        std::vector<Mat2> mats(ms.M.begin(), ms.M.end());
        field.at[k] = invariant_form(mats);
    });
    for (size_t k = 0; k < mus.size(); ++k) {
        if (field.at[k].residual > residual_error_threshold) {
            std::ostringstream msg;
            msg << "unitarizer_field: residual " << field.at[k].residual << " at sample " << k
                << " (mu = " << mus[k].real() << (mus[k].imag() < 0 ? " - " : " + ")
                << std::abs(mus[k].imag()) << "i) exceeds threshold " << residual_error_threshold;
            throw std::runtime_error(msg.str());
        }
        field.max_residual = std::max(field.max_residual, field.at[k].residual);
        if (k > 0)
            field.max_dlog_rho = std::max(field.max_dlog_rho,
                                          std::abs(std::log(field.at[k].rho) - std::log(field.at[k - 1].rho)));
    }
    return field;
}

} // namespace cmcforge
