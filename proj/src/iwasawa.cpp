#include "cmcforge/iwasawa.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace cmcforge {

LaurentLoop gram_loop(const LaurentLoop& phi) {
    if (phi.empty()) throw std::invalid_argument("gram_loop: zero loop");
    return phi.circle_adjoint() * phi;
}

namespace {

// Hermitian square root of a positive 2x2 and its inverse in closed form
Mat2 sqrt2_pd(const Mat2& H) {
    const cplx det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
    const double s = std::sqrt(std::max(det.real(), 0.0));
    const double t = (H(0, 0) + H(1, 1)).real() + 2.0 * s;
    if (!(t > 0.0)) throw std::runtime_error("spectral_factor: Toeplitz section not positive definite");
    return Mat2((H + s * mat2_id()) / std::sqrt(t));
}

// Bottom block rows of the Cholesky factor of the banded block-Toeplitz
// sections [G_{k-j}]_{j,k=0..n} at every order in `orders` (ascending), via
// the generalized Schur recursion on the displacement generators. The factor
// is banded with bandwidth deg G, so one sweep costs O(n * deg G) block ops.
std::vector<std::vector<Mat2>> boundary_rows(const LaurentLoop& G, std::vector<int> orders) {
    const int m = G.hi();
    const int n = orders.back();
    const size_t nb = static_cast<size_t>(n) + 1;

    // generators of T - Z T Z^*: u_j = G_j^* R^{-*} with G_0 = R R^*, v = u
    // except v_0 = 0; column k of the factor is u after the proper-form step
    Eigen::LLT<Mat2> llt0(G.coefficient(0));
    if (llt0.info() != Eigen::Success)
        throw std::runtime_error("spectral_factor: Toeplitz section not positive definite");
    const Mat2 R = llt0.matrixL();
    const Mat2 Rinvadj = inv2(R).adjoint();
    std::vector<Mat2> u(nb, mat2_zero()), v(nb, mat2_zero());
    for (int j = 0; j <= std::min(m, n); ++j) u[static_cast<size_t>(j)] = G.coefficient(j).adjoint() * Rinvadj;
    for (int j = 1; j <= std::min(m, n); ++j) v[static_cast<size_t>(j)] = u[static_cast<size_t>(j)];

    std::vector<std::vector<Mat2>> rows;
    rows.reserve(orders.size());
    for (int target : orders) rows.emplace_back(static_cast<size_t>(m) + 1, mat2_zero());

    for (int k = 0; k <= n; ++k) {
        const int hi = std::min(k + m, n);
        // proper form: eliminate v at block-row k with a J-unitary mixing
        const Mat2 a = u[static_cast<size_t>(k)];
        const Mat2 b = v[static_cast<size_t>(k)];
        if (max_abs(b) > 1e-300) {
            const Mat2 K = Mat2(-inv2(a) * b);
            const Mat2 P = Mat2(mat2_id() - K * K.adjoint());
            const Mat2 Q = Mat2(mat2_id() - K.adjoint() * K);
            const Mat2 Ps = inv2(sqrt2_pd(P));
            const Mat2 Qs = inv2(sqrt2_pd(Q));
            const Mat2 Kadj = K.adjoint();
            for (int i = k; i <= hi; ++i) {
                const Mat2 ui = u[static_cast<size_t>(i)];
                const Mat2 vi = v[static_cast<size_t>(i)];
                u[static_cast<size_t>(i)] = (ui + vi * Kadj) * Ps;
                v[static_cast<size_t>(i)] = (ui * K + vi) * Qs;
            }
            v[static_cast<size_t>(k)] = mat2_zero(); // exact by construction
        }
        // right unitary making the diagonal block lower triangular with
        // positive diagonal, matching the LLT convention
        {
            Eigen::HouseholderQR<Mat2> qr(u[static_cast<size_t>(k)].adjoint());
            Mat2 Qh = qr.householderQ();
            Mat2 Rh = qr.matrixQR().triangularView<Eigen::Upper>();
            for (int d = 0; d < 2; ++d) {
                const cplx rd = Rh(d, d);
                const double ad = std::abs(rd);
                if (!(ad > 0.0))
                    throw std::runtime_error(
                        "spectral_factor: Toeplitz section not positive definite");
                const cplx ph = rd / ad;
                Qh.col(d) *= ph;
            }
            for (int i = k; i <= hi; ++i) u[static_cast<size_t>(i)] = u[static_cast<size_t>(i)] * Qh;
        }
        // harvest: L_{t, k} contributes row entry t - k of the order-t row
        for (size_t r = 0; r < orders.size(); ++r) {
            const int t = orders[r];
            if (t >= k && t <= hi) rows[r][static_cast<size_t>(t - k)] = u[static_cast<size_t>(t)];
        }
        // Schur step: shift the u column down one block, keep v
        const Mat2 tail = u[static_cast<size_t>(hi)];
        for (int i = hi; i > k; --i) u[static_cast<size_t>(i)] = u[static_cast<size_t>(i - 1)];
        u[static_cast<size_t>(k)] = mat2_zero();
        if (hi + 1 <= n) u[static_cast<size_t>(hi + 1)] = tail;
    }

    for (auto& row : rows)
        for (Mat2& c : row) c = Mat2(c.adjoint());
    return rows;
}

double row_difference(const std::vector<Mat2>& a, const std::vector<Mat2>& b) {
    double d = 0.0;
    for (size_t k = 0; k < a.size(); ++k) d = std::max(d, max_abs(a[k] - b[k]));
    return d;
}

} // namespace

LaurentLoop spectral_factor(const LaurentLoop& G, const SpectralOptions& opts) {
    if (G.empty()) throw std::invalid_argument("spectral_factor: zero loop");
    if (G.hi() != -G.lo()) throw std::invalid_argument("spectral_factor: window not symmetric");
    const int m = G.hi();
    // self-adjointness check
    for (int k = 0; k <= m; ++k)
        if (max_abs(G.coefficient(-k) - G.coefficient(k).adjoint()) >
            1e-10 * std::max(1.0, G.max_coefficient_norm()))
            throw std::invalid_argument("spectral_factor: loop not self-adjoint");
    // positivity check on the circle
    for (cplx p : LaurentLoop::circle_points(std::max(opts.circle_checks, 2 * m + 1))) {
        Mat2 v = G.eval(p);
        double tr = (v(0, 0) + v(1, 1)).real();
        double det = (v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0)).real();
        if (!(tr > 0.0) || !(det > 0.0))
            throw std::invalid_argument("spectral_factor: loop not positive definite on the circle");
    }

    if (m == 0) {
        // constant positive matrix: plain Cholesky, upper-normalized
        Eigen::LLT<Mat2> llt(G.coefficient(0));
        if (llt.info() != Eigen::Success) throw std::invalid_argument("spectral_factor: constant term not positive");
        Mat2 U = Mat2(llt.matrixL()).adjoint();
        return LaurentLoop(0, {U});
    }

    int n = opts.order > 0 ? opts.order : 4 * m;
    if (n < 2 * m) n = 2 * m;
    for (;;) {
        auto rows = boundary_rows(G, {n, n + m});
        if (row_difference(rows[0], rows[1]) <= opts.tol) return LaurentLoop(0, std::move(rows[1]));
        n *= 2;
        if (n > opts.max_order)
            throw std::runtime_error("spectral_factor: boundary row failed to stabilize");
    }
}

IwasawaFactors iwasawa(const LaurentLoop& phi, const IwasawaOptions& opts) {
    if (phi.empty()) throw std::invalid_argument("iwasawa: zero loop");
    LaurentLoop G = gram_loop(phi);
    LaurentLoop Bplus = spectral_factor(G, opts.spectral);

    // sample count: enough for phi * Bplus^-1 if det Bplus is near-constant,
    // with margin for numerical tails
    int span = (phi.hi() - phi.lo()) + Bplus.hi() + 1;
    int N = opts.min_samples;
    while (N < 4 * span) N *= 2;

    IwasawaFactors out;
    for (int attempt = 0;; ++attempt) {
        auto pts = LaurentLoop::circle_points(N);
        std::vector<Mat2> samples(pts.size());
        for (size_t j = 0; j < pts.size(); ++j) {
            Mat2 b = Bplus.eval(pts[j]);
            samples[j] = phi.eval(pts[j]) * inv2(b);
        }
        auto fit = LaurentLoop::fit_circle_samples_auto(samples, opts.fit_tail_tol);
        out.F = fit.loop;
        out.holomorphy_error = fit.residual;
        if (fit.residual <= 100.0 * opts.fit_tail_tol || attempt >= 3) break;
        N *= 2;
    }
    out.Bplus = Bplus;

    auto pts = LaurentLoop::circle_points(std::max(opts.min_samples, 2 * span + 1));
    for (cplx p : pts) {
        Mat2 f = out.F.eval(p);
        out.recon_error = std::max(out.recon_error, max_abs(f * Bplus.eval(p) - phi.eval(p)));
        out.unitarity_error = std::max(out.unitarity_error, max_abs(Mat2(f.adjoint() * f) - mat2_id()));
    }
    return out;
}

} // namespace cmcforge
