#pragma once

#include <cmath>

namespace mtm {

/// Dense 2x2 matrix, row major.
struct Matrix2 {
    double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;

    static Matrix2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Matrix2 symmetric(double s11, double s12, double s22) { return {s11, s12, s12, s22}; }

    double det() const { return m11 * m22 - m12 * m21; }
    Matrix2 transpose() const { return {m11, m21, m12, m22}; }

    friend Matrix2 operator*(const Matrix2& a, const Matrix2& b) {
        return {a.m11 * b.m11 + a.m12 * b.m21, a.m11 * b.m12 + a.m12 * b.m22,
                a.m21 * b.m11 + a.m22 * b.m21, a.m21 * b.m12 + a.m22 * b.m22};
    }
    friend Matrix2 operator*(double s, const Matrix2& a) { return {s * a.m11, s * a.m12, s * a.m21, s * a.m22}; }
};

} // namespace mtm
