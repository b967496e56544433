#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace mtm {

/// Which endpoints of the integration window may carry an integrable singularity.
/// Auto flags a == 0 and b == 1.
enum class Singular { Auto, None, Lower, Upper, Both };

struct QuadratureOptions {
    double tol = 1e-10;     ///< absolute error target
    double rel_tol = 1e-12; ///< relative error target; the looser of the two applies
    std::size_t max_intervals = std::size_t{1} << 16;
    Singular singular = Singular::Auto;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
};

namespace detail {

// 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK qk15 abscissae).
inline constexpr std::array<double, 8> gk15_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
    double a, b, value, error;
    double floor; ///< roundoff level of this piece; error never drops below it
    bool operator<(const Piece& o) const { return error < o.error; }
};

template <class F>
Piece gk15(F& f, double a, double b, double lo_open, double hi_open) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    auto eval = [&](double u) {
        u = std::clamp(u, lo_open, hi_open);
        return static_cast<double>(f(u));
    };
    const double fc = eval(c);
    double k = fc * gk15_wk[7];
    double g = fc * gk15_wg[3];
    double abs_k = std::fabs(k);
    std::array<double, 7> f1{}, f2{};
    for (int j = 0; j < 7; ++j) {
        const double dx = h * gk15_x[j];
        f1[j] = eval(c - dx);
        f2[j] = eval(c + dx);
        k += gk15_wk[j] * (f1[j] + f2[j]);
        abs_k += gk15_wk[j] * (std::fabs(f1[j]) + std::fabs(f2[j]));
        if (j % 2 == 1) g += gk15_wg[j / 2] * (f1[j] + f2[j]);
    }
    const double mean = 0.5 * k;
    double asc = gk15_wk[7] * std::fabs(fc - mean);
    for (int j = 0; j < 7; ++j)
        asc += gk15_wk[j] * (std::fabs(f1[j] - mean) + std::fabs(f2[j] - mean));
    asc *= std::fabs(h);
    double err = std::fabs((k - g) * h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    const double round = 50.0 * std::numeric_limits<double>::epsilon() * abs_k * std::fabs(h);
    if (round > err) err = round;
    return {a, b, k * h, err, round};
}

// Breakpoints a + w*r^k (or b - w*r^k) accumulating toward a flagged endpoint.
inline void geometric_points(double a, double b, bool lower, bool upper, std::vector<double>& pts) {
    constexpr double ratio = 0.125;
    pts.push_back(a);
    if (lower) {
        const double w = upper ? 0.5 * (b - a) : (b - a);
        std::vector<double> tmp;
        for (double d = w * ratio; d > 1e-40 * std::max(1.0, w); d *= ratio) tmp.push_back(a + d);
        std::reverse(tmp.begin(), tmp.end());
        for (double p : tmp)
            if (p > pts.back()) pts.push_back(p);
    }
    if (lower && upper) pts.push_back(0.5 * (a + b));
    if (upper) {
        const double w = lower ? 0.5 * (b - a) : (b - a);
        for (double d = w * ratio; b - d < b && d > 1e-40; d *= ratio) {
            const double p = b - d;
            if (p > pts.back()) pts.push_back(p);
        }
    }
    if (b > pts.back()) pts.push_back(b);
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b] within [0, 1].
/// f is only evaluated strictly inside (a, b); endpoint singularities are handled by
/// geometric subdivision toward the flagged endpoint.
template <class F>
QuadratureResult integrate_detailed(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (!(a < b)) {
        std::ostringstream os;
        os << "integrate: require a < b, got [" << a << ", " << b << "]";
        throw domain_error(os.str());
    }
    if (!(opt.tol > 0.0) || !(opt.rel_tol >= 0.0)) throw domain_error("integrate: tolerances must be positive");

    bool lower = false, upper = false;
    switch (opt.singular) {
    case Singular::Auto: lower = (a == 0.0); upper = (b == 1.0); break;
    case Singular::None: break;
    case Singular::Lower: lower = true; break;
    case Singular::Upper: upper = true; break;
    case Singular::Both: lower = upper = true; break;
    }
    const double lo_open = std::nextafter(a, b);
    const double hi_open = std::nextafter(b, a);

    std::vector<double> pts;
    detail::geometric_points(a, b, lower, upper, pts);

    std::priority_queue<detail::Piece> heap;
    double total = 0.0, err = 0.0, floor = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        auto p = detail::gk15(f, pts[i], pts[i + 1], lo_open, hi_open);
        total += p.value;
        err += p.error;
        floor += p.floor;
        heap.push(p);
    }
    std::size_t count = heap.size();
    double magnitude = 0.0;
    while (err > opt.tol) {
        magnitude = std::fabs(total);
        if (err <= opt.rel_tol * magnitude) break;
        // every piece is at its roundoff level: further splitting cannot help
        if (err <= 2.0 * floor) break;
        if (count >= opt.max_intervals) {
            std::ostringstream os;
            os << "integrate: subdivision budget of " << opt.max_intervals
               << " intervals exhausted on [" << a << ", " << b << "], estimate " << total
               << ", error bound " << err;
            throw integration_error(os.str(), total, err);
        }
        auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break; // cannot split further in double precision
        heap.pop();
        auto left = detail::gk15(f, worst.a, mid, lo_open, hi_open);
        auto right = detail::gk15(f, mid, worst.b, lo_open, hi_open);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // recompute the sum from the pieces to shed accumulated cancellation
    double sum = 0.0, esum = 0.0;
    std::vector<detail::Piece> pieces;
    pieces.reserve(heap.size());
    while (!heap.empty()) {
        pieces.push_back(heap.top());
        heap.pop();
    }
    std::sort(pieces.begin(), pieces.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    for (const auto& p : pieces) {
        sum += p.value;
        esum += p.error;
    }
    return {sum, esum, count};
}

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-10) {
    QuadratureOptions opt;
    opt.tol = tol;
    return integrate_detailed(std::forward<F>(f), a, b, opt).value;
}

} // namespace mtm
