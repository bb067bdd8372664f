#pragma once

#include <vector>

#include "cmcforge/types.hpp"

namespace cmcforge {

// Matrix Laurent polynomial sum_{k=lo}^{hi} C_k lambda^k stored as a dense
// coefficient window. The window is a representation detail: coefficient(k)
// is zero outside it, and normalize() trims exact-zero boundary coefficients
// so equal loops compare equal.
class LaurentLoop {
public:
    LaurentLoop() = default; // zero loop, empty window
    LaurentLoop(int lo, std::vector<Mat2> coeffs);

    static LaurentLoop identity();
    static LaurentLoop monomial(int k, const Mat2& c);

    bool empty() const { return coeffs_.empty(); }
    int lo() const { return lo_; }
    int hi() const { return lo_ + static_cast<int>(coeffs_.size()) - 1; }

    Mat2 coefficient(int k) const;
    void set_coefficient(int k, const Mat2& c); // grows the window as needed

    Mat2 eval(cplx lambda) const; // lambda != 0 when lo() < 0

    LaurentLoop circle_adjoint() const; // coefficient k -> adjoint of coefficient -k
    LaurentLoop shifted(int k) const;   // multiply by lambda^k

    LaurentLoop& normalize();

    double max_coefficient_norm() const;

    friend LaurentLoop operator*(const LaurentLoop& a, const LaurentLoop& b);
    friend LaurentLoop operator+(const LaurentLoop& a, const LaurentLoop& b);
    friend LaurentLoop operator-(const LaurentLoop& a, const LaurentLoop& b);
    LaurentLoop operator*(cplx s) const;

    // Uniform circle samples lambda_j = exp(2*pi*i*j/N), j = 0..N-1.
    static std::vector<cplx> circle_points(int N);

    struct FitResult;
    // DFT fit of the given window from samples on circle_points(samples.size()).
    // Requires samples.size() >= window length.
    static FitResult fit_circle_samples(const std::vector<Mat2>& samples, int lo, int hi);

    // Smallest window whose complement carries relative coefficient mass < tail_tol.
    static FitResult fit_circle_samples_auto(const std::vector<Mat2>& samples, double tail_tol);

private:
    int lo_ = 0;
    std::vector<Mat2> coeffs_;
};

struct LaurentLoop::FitResult {
    LaurentLoop loop;
    double residual; // max_j max_abs(loop.eval(lambda_j) - samples[j]), the aliasing error
};

} // namespace cmcforge
