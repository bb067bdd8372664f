#pragma once

#include <complex>
#include <Eigen/Dense>

namespace cmcforge {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;

inline cplx unit_phase(double angle) { return cplx(std::cos(angle), std::sin(angle)); }

// Largest absolute entry; the error norm used throughout.
inline double max_abs(const Mat2& m) {
    double v = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) v = std::max(v, std::abs(m(r, c)));
    return v;
}

inline double frob(const Mat2& m) { return m.norm(); }

inline Mat2 mat2_zero() { return Mat2::Zero(); }
inline Mat2 mat2_id() { return Mat2::Identity(); }

// Inverse of a 2x2 via the adjugate; caller guarantees det != 0.
inline Mat2 inv2(const Mat2& m) {
    cplx det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    Mat2 r;
    r << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return r / det;
}

} // namespace cmcforge
