#include "cmcforge/loop.hpp"

#include <stdexcept>

namespace cmcforge {

LaurentLoop::LaurentLoop(int lo, std::vector<Mat2> coeffs) : lo_(lo), coeffs_(std::move(coeffs)) {
    normalize();
}

LaurentLoop LaurentLoop::identity() { return monomial(0, mat2_id()); }

LaurentLoop LaurentLoop::monomial(int k, const Mat2& c) {
    return LaurentLoop(k, std::vector<Mat2>{c});
}

Mat2 LaurentLoop::coefficient(int k) const {
    if (empty() || k < lo_ || k > hi()) return mat2_zero();
    return coeffs_[static_cast<size_t>(k - lo_)];
}

void LaurentLoop::set_coefficient(int k, const Mat2& c) {
    if (empty()) {
        lo_ = k;
        coeffs_.assign(1, c);
        return;
    }
    if (k < lo_) {
        coeffs_.insert(coeffs_.begin(), static_cast<size_t>(lo_ - k), mat2_zero());
        lo_ = k;
    } else if (k > hi()) {
        coeffs_.resize(static_cast<size_t>(k - lo_ + 1), mat2_zero());
    }
    coeffs_[static_cast<size_t>(k - lo_)] = c;
}

Mat2 LaurentLoop::eval(cplx lambda) const {
    if (empty()) return mat2_zero();
    if (lo_ < 0 && lambda == cplx(0.0, 0.0))
        throw std::domain_error("LaurentLoop::eval: negative powers at lambda = 0");
    // Horner in lambda from the top coefficient, then one scale by lambda^lo.
    Mat2 acc = coeffs_.back();
    for (int k = static_cast<int>(coeffs_.size()) - 2; k >= 0; --k)
        acc = acc * lambda + coeffs_[static_cast<size_t>(k)];
    cplx scale = std::pow(lambda, lo_);
    return acc * scale;
}

LaurentLoop LaurentLoop::circle_adjoint() const {
    if (empty()) return {};
    std::vector<Mat2> out(coeffs_.size());
    // new coefficient at k is adjoint of old coefficient at -k
    int new_lo = -hi();
    for (int k = new_lo; k <= -lo_; ++k)
        out[static_cast<size_t>(k - new_lo)] = coefficient(-k).adjoint();
    return LaurentLoop(new_lo, std::move(out));
}

LaurentLoop LaurentLoop::shifted(int k) const {
    if (empty()) return {};
    return LaurentLoop(lo_ + k, coeffs_);
}

LaurentLoop& LaurentLoop::normalize() {
    auto is_zero = [](const Mat2& m) { return max_abs(m) == 0.0; };
    size_t head = 0;
    while (head < coeffs_.size() && is_zero(coeffs_[head])) ++head;
    if (head == coeffs_.size()) {
        lo_ = 0;
        coeffs_.clear();
        return *this;
    }
    size_t tail = coeffs_.size();
    while (tail > head && is_zero(coeffs_[tail - 1])) --tail;
    if (head > 0 || tail < coeffs_.size()) {
        coeffs_ = std::vector<Mat2>(coeffs_.begin() + static_cast<long>(head),
                                    coeffs_.begin() + static_cast<long>(tail));
        lo_ += static_cast<int>(head);
    }
    return *this;
}

double LaurentLoop::max_coefficient_norm() const {
    double v = 0.0;
    for (const auto& c : coeffs_) v = std::max(v, max_abs(c));
    return v;
}

LaurentLoop operator*(const LaurentLoop& a, const LaurentLoop& b) {
    if (a.empty() || b.empty()) return {};
    int lo = a.lo_ + b.lo_;
    std::vector<Mat2> out(a.coeffs_.size() + b.coeffs_.size() - 1, mat2_zero());
    for (size_t i = 0; i < a.coeffs_.size(); ++i)
        for (size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return LaurentLoop(lo, std::move(out));
}

LaurentLoop operator+(const LaurentLoop& a, const LaurentLoop& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    int lo = std::min(a.lo_, b.lo_);
    int hi = std::max(a.hi(), b.hi());
    std::vector<Mat2> out(static_cast<size_t>(hi - lo + 1), mat2_zero());
    for (int k = lo; k <= hi; ++k) out[static_cast<size_t>(k - lo)] = a.coefficient(k) + b.coefficient(k);
    return LaurentLoop(lo, std::move(out));
}

LaurentLoop operator-(const LaurentLoop& a, const LaurentLoop& b) { return a + b * cplx(-1.0, 0.0); }

LaurentLoop LaurentLoop::operator*(cplx s) const {
    LaurentLoop r = *this;
    for (auto& c : r.coeffs_) c *= s;
    return r.normalize();
}

std::vector<cplx> LaurentLoop::circle_points(int N) {
    std::vector<cplx> pts(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) pts[static_cast<size_t>(j)] = unit_phase(2.0 * kPi * j / N);
    return pts;
}

LaurentLoop::FitResult LaurentLoop::fit_circle_samples(const std::vector<Mat2>& samples, int lo, int hi) {
    const int N = static_cast<int>(samples.size());
    if (N <= 0) throw std::invalid_argument("fit_circle_samples: no samples");
    if (hi - lo + 1 > N) throw std::invalid_argument("fit_circle_samples: window longer than sample count");
    std::vector<Mat2> coeffs(static_cast<size_t>(hi - lo + 1), mat2_zero());
    for (int k = lo; k <= hi; ++k) {
        Mat2 acc = mat2_zero();
        for (int j = 0; j < N; ++j) acc += samples[static_cast<size_t>(j)] * unit_phase(-2.0 * kPi * j * k / N);
        coeffs[static_cast<size_t>(k - lo)] = acc / double(N);
    }
    FitResult res{LaurentLoop(lo, std::move(coeffs)), 0.0};
    auto pts = circle_points(N);
    for (int j = 0; j < N; ++j)
        res.residual = std::max(res.residual, max_abs(res.loop.eval(pts[static_cast<size_t>(j)]) - samples[static_cast<size_t>(j)]));
    return res;
}

LaurentLoop::FitResult LaurentLoop::fit_circle_samples_auto(const std::vector<Mat2>& samples, double tail_tol) {
    const int N = static_cast<int>(samples.size());
    if (N <= 0) throw std::invalid_argument("fit_circle_samples_auto: no samples");
    // Full DFT once; powers are identified with the alias range [-N/2, N-1-N/2].
    int lo = -(N / 2);
    auto full = fit_circle_samples(samples, lo, lo + N - 1);
    double scale = std::max(full.loop.max_coefficient_norm(), 1e-300);
    int keep_lo = 0, keep_hi = 0;
    bool any = false;
    for (int k = full.loop.lo(); k <= full.loop.hi(); ++k) {
        if (max_abs(full.loop.coefficient(k)) > tail_tol * scale) {
            if (!any) {
                keep_lo = keep_hi = k;
                any = true;
            } else {
                keep_lo = std::min(keep_lo, k);
                keep_hi = std::max(keep_hi, k);
            }
        }
    }
    if (!any) return FitResult{LaurentLoop(), full.residual};
    std::vector<Mat2> coeffs;
    coeffs.reserve(static_cast<size_t>(keep_hi - keep_lo + 1));
    for (int k = keep_lo; k <= keep_hi; ++k) coeffs.push_back(full.loop.coefficient(k));
    FitResult res{LaurentLoop(keep_lo, std::move(coeffs)), 0.0};
    auto pts = circle_points(N);
    for (int j = 0; j < N; ++j)
        res.residual = std::max(res.residual, max_abs(res.loop.eval(pts[static_cast<size_t>(j)]) - samples[static_cast<size_t>(j)]));
    return res;
}

} // namespace cmcforge
