#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "estimators.hpp"
#include "matrix2.hpp"
#include "models.hpp"
#include "moments.hpp"
#include "quadrature.hpp"

namespace mtm {

using Func = std::function<double(double)>;

/// K(w, v) = min(w, v) - w v.
inline double kernel(double w, double v) { return std::min(w, v) - w * v; }

/// Integration window (a, bbar) in probability space.
struct Window {
    double a = 0.0;
    double bbar = 1.0;
};

inline Window window1(const TrimmingScheme& s) { return {s.a1, s.bbar1()}; }
inline Window window2(const TrimmingScheme& s) { return {s.a2, s.bbar2()}; }

/// Gamma(i, j) = 1 / ((1 - a_i - b_i)(1 - a_j - b_j)).
inline double gamma_factor(const Window& wi, const Window& wj) {
    return 1.0 / ((wi.bbar - wi.a) * (wj.bbar - wj.a));
}

namespace detail {

inline constexpr double asym_tol = 1e-13;

inline double integral(const Func& h, double a, double b) {
    if (!(a < b)) return 0.0;
    QuadratureOptions opt;
    opt.tol = asym_tol;
    opt.rel_tol = 1e-14;
    return integrate_detailed(h, a, b, opt).value;
}

// w * H(u), taken as 0 when the weight vanishes (H may be infinite at u = 0 or 1).
inline double weighted(double w, const Func& h, double u) { return w == 0.0 ? 0.0 : w * h(u); }

} // namespace detail

struct IIntegrals {
    double I = 0.0;
    double Ibar = 0.0;
};

/// I(a,b) = b H(b) - a H(a) - int_a^b H and Ibar(a,b) = (1-b) H(b) - (1-a) H(a) + int_a^b H.
inline double i_integral(const Func& h, double a, double b) {
    if (!(0.0 <= a && a <= b && b <= 1.0)) throw domain_error("i_integral: require 0 <= a <= b <= 1");
    if (a == b) return 0.0;
    return detail::weighted(b, h, b) - detail::weighted(a, h, a) - detail::integral(h, a, b);
}

inline double ibar_integral(const Func& h, double a, double b) {
    if (!(0.0 <= a && a <= b && b <= 1.0)) throw domain_error("ibar_integral: require 0 <= a <= b <= 1");
    if (a == b) return 0.0;
    return detail::weighted(1.0 - b, h, b) - detail::weighted(1.0 - a, h, a) + detail::integral(h, a, b);
}

/// Both at once; Ibar is infinite when a = 0 and H(0) is, so prefer the single forms there.
inline IIntegrals i_integrals(const Func& h, double a, double b) { return {i_integral(h, a, b), ibar_integral(h, a, b)}; }

/// Single-integral form of V(i,j) = int_{W_i} int_{W_j} K(v,w) H_j'(v) H_i'(w) dv dw.
/// The windows are put in the order a_j <= a_i <= bbar_j <= bbar_i first (V is symmetric).
inline double v_entry(const Func& hi, Window wi, const Func& hj, Window wj) {
    auto ordered = [](const Window& x, const Window& y) { return y.a <= x.a && x.a <= y.bbar && y.bbar <= x.bbar; };
    const Func* Hi = &hi;
    const Func* Hj = &hj;
    if (!ordered(wi, wj)) {
        if (!ordered(wj, wi)) throw validation_error("v_entry: windows are not nested in either order");
        std::swap(wi, wj);
        std::swap(Hi, Hj);
    }
    using detail::integral;
    using detail::weighted;
    const double ai = wi.a, bbi = wi.bbar, aj = wj.a, bbj = wj.bbar;
    const double bi = 1.0 - bbi, bj = 1.0 - bbj;

    const double intHi_mid = integral(*Hi, ai, bbj);
    const double intHj_mid = integral(*Hj, ai, bbj);
    const double intHi_up = integral(*Hi, bbj, bbi);

    double v = 0.0;
    if (ai > aj) v += i_integral(*Hj, aj, ai) * ibar_integral(*Hi, ai, bbi);
    if (bi > 0.0) v += bi * (*Hi)(bbi) * i_integral(*Hj, ai, bbj);
    if (ai > 0.0) v -= ai * (*Hi)(ai) * ibar_integral(*Hj, ai, bbj);
    v += integral([&](double u) { return (*Hi)(u) * (*Hj)(u); }, ai, bbj);
    if (bbi > bbj) v += (weighted(bbj, *Hj, bbj) - weighted(ai, *Hj, ai)) * intHi_up;
    v -= (weighted(ai, *Hj, ai) + weighted(bj, *Hj, bbj)) * intHi_mid;
    v -= intHj_mid * intHi_mid;
    v -= intHj_mid * intHi_up;
    return v;
}

/// Two-dimensional trapezoid evaluation of the double-integral form of V(i,j); a test oracle.
/// dhi, dhj are the derivatives H_i', H_j'. Windows must stay away from 0 and 1.
inline double v_entry_bruteforce(const Func& dhi, Window wi, const Func& dhj, Window wj, int grid_n = 2000) {
    if (grid_n < 200) throw domain_error("v_entry_bruteforce: grid_n must be at least 200");
    for (const auto& w : {wi, wj})
        if (!(w.a > 0.0 && w.bbar < 1.0 && w.a < w.bbar))
            throw domain_error("v_entry_bruteforce: windows must be interior to (0,1)");
    auto nodes = [grid_n](const Window& w, const Func& d, std::vector<double>& u, std::vector<double>& f) {
        u.resize(grid_n + 1);
        f.resize(grid_n + 1);
        const double h = (w.bbar - w.a) / grid_n;
        for (int k = 0; k <= grid_n; ++k) {
            u[k] = (k == grid_n) ? w.bbar : w.a + k * h;
            const double tw = (k == 0 || k == grid_n) ? 0.5 : 1.0;
            f[k] = tw * h * d(u[k]);
        }
    };
    std::vector<double> ui, fi, uj, fj;
    nodes(wi, dhi, ui, fi);
    nodes(wj, dhj, uj, fj);
    double total = 0.0;
    for (int p = 0; p <= grid_n; ++p) {
        const double w = ui[p];
        double row = 0.0;
        for (int q = 0; q <= grid_n; ++q) row += kernel(uj[q], w) * fj[q];
        total += row * fi[p];
    }
    return total;
}

/// H_1, H_2 and their derivatives for a model: H_1(u) = y-quantile, H_2 = H_1^2.
struct MomentFunctions {
    Func h1, h2, dh1, dh2;
};

inline MomentFunctions moment_functions(Family f, const Params& p) {
    validate(f, p);
    MomentFunctions m;
    if (f == Family::Frechet) {
        const double L = std::log(p.sigma), beta = p.beta;
        m.h1 = [=](double u) { return L - beta * delta_kernel(u); };
        m.h2 = [=](double u) { const double y = L - beta * delta_kernel(u); return y * y; };
        m.dh1 = [=](double u) { return -beta / (u * std::log(u)); };
        m.dh2 = [=](double u) { return 2.0 * (L - beta * delta_kernel(u)) * (-beta / (u * std::log(u))); };
    } else {
        const double th = p.theta, s = p.sigma;
        m.h1 = [=](double u) { return th + s * normal_quantile(u); };
        m.h2 = [=](double u) { const double y = th + s * normal_quantile(u); return y * y; };
        m.dh1 = [=](double u) { return s / normal_pdf(normal_quantile(u)); };
        m.dh2 = [=](double u) {
            const double z = normal_quantile(u);
            return 2.0 * (th + s * z) * s / normal_pdf(z);
        };
    }
    return m;
}

/// V(i,j) for a model with i, j in {1, 2}.
inline double v_entry(Family f, const Params& p, int i, int j, const TrimmingScheme& s) {
    const auto m = moment_functions(f, p);
    const Func& hi = i == 1 ? m.h1 : m.h2;
    const Func& hj = j == 1 ? m.h1 : m.h2;
    return v_entry(hi, i == 1 ? window1(s) : window2(s), hj, j == 1 ? window1(s) : window2(s));
}

inline double v_entry_bruteforce(Family f, const Params& p, int i, int j, const TrimmingScheme& s, int grid_n = 2000) {
    const auto m = moment_functions(f, p);
    const Func& di = i == 1 ? m.dh1 : m.dh2;
    const Func& dj = j == 1 ? m.dh1 : m.dh2;
    return v_entry_bruteforce(di, i == 1 ? window1(s) : window2(s), dj, j == 1 ? window1(s) : window2(s), grid_n);
}

/// Sigma_T assembled entry by entry from Gamma(i,j) V(i,j) (single-integral route).
inline Matrix2 sigma_T_general(Family f, const Params& p, const TrimmingScheme& s) {
    const auto w1 = window1(s), w2 = window2(s);
    const auto m = moment_functions(f, p);
    const double s11 = gamma_factor(w1, w1) * v_entry(m.h1, w1, m.h1, w1);
    const double s12 = gamma_factor(w1, w2) * v_entry(m.h1, w1, m.h2, w2);
    const double s22 = gamma_factor(w2, w2) * v_entry(m.h2, w2, m.h2, w2);
    return Matrix2::symmetric(s11, s12, s22);
}

/// Sigma_T from the double-integral definition by the bivariate trapezoid rule; a test oracle.
inline Matrix2 sigma_T_bruteforce(Family f, const Params& p, const TrimmingScheme& s, int grid_n = 2000) {
    const auto w1 = window1(s), w2 = window2(s);
    const auto m = moment_functions(f, p);
    const double s11 = gamma_factor(w1, w1) * v_entry_bruteforce(m.dh1, w1, m.dh1, w1, grid_n);
    const double s12 = gamma_factor(w1, w2) * v_entry_bruteforce(m.dh1, w1, m.dh2, w2, grid_n);
    const double s22 = gamma_factor(w2, w2) * v_entry_bruteforce(m.dh2, w2, m.dh2, w2, grid_n);
    return Matrix2::symmetric(s11, s12, s22);
}

/// Parameter-free covariance building blocks (Lambda for location-scale, Psi for Frechet).
struct LambdaSet {
    double l111 = 0.0, l121 = 0.0, l122 = 0.0, l221 = 0.0, l222 = 0.0, l223 = 0.0;
};

namespace detail {

struct ClosedForms {
    ModelKind kind;

    double F(double u) const { return kind == ModelKind::Frechet ? delta_kernel(u) : normal_quantile(u); }
    // w * F(u)^k, zero when the weight vanishes
    double wf(double w, double u, int k) const { return w == 0.0 ? 0.0 : w * std::pow(F(u), k); }
    // integral of F^k over (a, b); zero on an empty window
    double M(int k, double a, double b) const { return a < b ? (b - a) * window_average(kind, a, b, k) : 0.0; }

    double l111(const Window& w) const {
        const double a = w.a, bb = w.bbar, b = 1.0 - bb;
        const double M1 = M(1, a, bb), M2 = M(2, a, bb);
        double r = wf(a * (1.0 - a), a, 2) + wf(b * bb, bb, 2);
        if (a > 0.0 && b > 0.0) r -= 2.0 * a * b * F(a) * F(bb);
        r -= 2.0 * (wf(a, a, 1) + wf(b, bb, 1)) * M1;
        r -= M1 * M1;
        r += M2;
        return gamma_factor(w, w) * r;
    }

    // windows ordered a2 <= a1 <= bbar2 <= bbar1
    double l121(const Window& w1, const Window& w2) const {
        const double a1 = w1.a, bb1 = w1.bbar, b1 = 1.0 - bb1;
        const double a2 = w2.a, bb2 = w2.bbar, b2 = 1.0 - bb2;
        const double M1o = M(1, a1, bb2), M2o = M(2, a1, bb2), M1w = M(1, a1, bb1);
        double r = 0.0;
        if (a2 > 0.0) r += a2 * (1.0 - a1) * F(a1) * F(a2);
        if (b1 > 0.0) r += b1 * bb2 * F(bb1) * F(bb2);
        if (a1 > 0.0 && b2 > 0.0) r -= a1 * b2 * F(a1) * F(bb2);
        if (a2 > 0.0 && b1 > 0.0) r -= a2 * b1 * F(a2) * F(bb1);
        r -= (2.0 * wf(a1, a1, 1) + wf(b1, bb1, 1) + wf(b2, bb2, 1)) * M1o;
        r -= M1o * M1o;
        r += M2o;
        r += (wf(a1, a1, 1) - wf(a2, a2, 1)) * M1w;
        if (a1 > a2) r += ((1.0 - a1) * F(a1) - wf(b1, bb1, 1) - M1w) * M(1, a2, a1);
        if (b2 > b1) r += (bb2 * F(bb2) - wf(a1, a1, 1) - M1o) * M(1, bb2, bb1);
        return gamma_factor(w1, w2) * r;
    }

    // weight F on window 1 and F^2/2 on window 2, windows ordered a2 <= a1 <= bbar2 <= bbar1
    double l122(const Window& w1, const Window& w2) const {
        const double a1 = w1.a, bb1 = w1.bbar, b1 = 1.0 - bb1;
        const double a2 = w2.a, bb2 = w2.bbar, b2 = 1.0 - bb2;
        const double M1o = M(1, a1, bb2), M2o = M(2, a1, bb2), M3o = M(3, a1, bb2), M1w = M(1, a1, bb1);
        double r = 0.0;
        if (a2 > 0.0) r += a2 * (1.0 - a1) * F(a1) * std::pow(F(a2), 2);
        if (b1 > 0.0) r += b1 * bb2 * F(bb1) * std::pow(F(bb2), 2);
        if (a2 > 0.0 && b1 > 0.0) r -= a2 * b1 * F(bb1) * std::pow(F(a2), 2);
        if (a1 > 0.0 && b2 > 0.0) r -= a1 * b2 * F(a1) * std::pow(F(bb2), 2);
        r -= (wf(a1, a1, 2) + wf(b2, bb2, 2)) * M1o;
        r -= (wf(a1, a1, 1) + wf(b1, bb1, 1)) * M2o;
        r -= M1o * M2o;
        r += M3o;
        r += (wf(a1, a1, 2) - wf(a2, a2, 2)) * M1w;
        if (a1 > a2) r += ((1.0 - a1) * F(a1) - wf(b1, bb1, 1) - M1w) * M(2, a2, a1);
        if (b2 > b1) r += (bb2 * std::pow(F(bb2), 2) - wf(a1, a1, 2) - M2o) * M(1, bb2, bb1);
        return 0.5 * gamma_factor(w1, w2) * r;
    }

    double l222(const Window& w) const {
        const double a = w.a, bb = w.bbar, b = 1.0 - bb;
        const double M1 = M(1, a, bb), M2 = M(2, a, bb), M3 = M(3, a, bb);
        double r = wf(a * (1.0 - a), a, 3) + wf(b * bb, bb, 3);
        if (a > 0.0 && b > 0.0) r -= a * b * F(a) * F(bb) * (F(a) + F(bb));
        r -= (wf(a, a, 2) + wf(b, bb, 2)) * M1;
        r -= (wf(a, a, 1) + wf(b, bb, 1)) * M2;
        r -= M1 * M2;
        r += M3;
        return 0.5 * gamma_factor(w, w) * r;
    }

    double l223(const Window& w) const {
        const double a = w.a, bb = w.bbar, b = 1.0 - bb;
        const double M2 = M(2, a, bb), M4 = M(4, a, bb);
        double r = wf(a * (1.0 - a), a, 4) + wf(b * bb, bb, 4);
        if (a > 0.0 && b > 0.0) r -= 2.0 * a * b * std::pow(F(a), 2) * std::pow(F(bb), 2);
        r -= 2.0 * (wf(a, a, 2) + wf(b, bb, 2)) * M2;
        r -= M2 * M2;
        r += M4;
        return 0.25 * gamma_factor(w, w) * r;
    }
};

} // namespace detail

/// Lambda (location-scale) or Psi (Frechet) entries of Sigma_T from their closed forms.
/// Under the ordering a1 <= a2 < bbar1 <= bbar2 the mixed entry with F^2/2 on the outer
/// window has no closed form of this shape and is taken from the single-integral V.
inline LambdaSet lambda_set(ModelKind kind, const TrimmingScheme& s) {
    const detail::ClosedForms cf{kind};
    const auto w1 = window1(s), w2 = window2(s);
    LambdaSet L;
    L.l111 = cf.l111(w1);
    L.l221 = cf.l111(w2);
    L.l222 = cf.l222(w2);
    L.l223 = cf.l223(w2);
    if (s.ordering == Ordering::Condition12) {
        L.l121 = cf.l121(w2, w1);
        const Func F = [kind](double u) { return kind == ModelKind::Frechet ? delta_kernel(u) : normal_quantile(u); };
        const Func halfF2 = [&F](double u) { const double q = F(u); return 0.5 * q * q; };
        L.l122 = gamma_factor(w1, w2) * v_entry(F, w1, halfF2, w2);
    } else {
        L.l121 = cf.l121(w1, w2);
        L.l122 = cf.l122(w1, w2);
    }
    return L;
}

/// Sigma_T for a model from the Lambda/Psi closed forms.
inline Matrix2 sigma_T(Family f, const Params& p, const TrimmingScheme& s) {
    validate(f, p);
    const auto L = lambda_set(kind_of(f), s);
    if (f == Family::Frechet) {
        const double lg = std::log(p.sigma), b = p.beta;
        return Matrix2::symmetric(b * b * L.l111, 2.0 * b * b * lg * L.l121 - 2.0 * b * b * b * L.l122,
                                  4.0 * b * b * lg * lg * L.l221 - 8.0 * b * b * b * lg * L.l222 +
                                      4.0 * b * b * b * b * L.l223);
    }
    const double th = p.theta, sg = p.sigma;
    return Matrix2::symmetric(sg * sg * L.l111, 2.0 * th * sg * sg * L.l121 + 2.0 * sg * sg * sg * L.l122,
                              4.0 * th * th * sg * sg * L.l221 + 8.0 * th * sg * sg * sg * L.l222 +
                                  4.0 * sg * sg * sg * sg * L.l223);
}

inline Matrix2 sigma_T_location_scale(const Params& p, const TrimmingScheme& s) { return sigma_T(Family::Normal, p, s); }
inline Matrix2 sigma_T_frechet(const Params& p, const TrimmingScheme& s) { return sigma_T(Family::Frechet, p, s); }

/// Relative size below which T2 - r T1^2 is treated as zero.
inline constexpr double singular_threshold = 1e-12;

struct Jacobian2 {
    Matrix2 d;
    Branch branch = Branch::Plus;
    double discriminant = 0.0; ///< T2 - r T1^2 at the evaluation point
};

/// Jacobian of (theta, sigma) or (beta, sigma) with respect to (T1, T2) at the population
/// moments of p, for the chosen sign branch. Both rows follow the same branch, so
/// det(D-) = -det(D+).
inline Jacobian2 jacobian(Family f, const Params& p, const TrimmingScheme& s, Branch branch = Branch::Plus) {
    const auto c = moment_constants(kind_of(f), s);
    const auto T = population_moments(f, p, s);
    const double disc = T.T2 - c.ratio * T.T1 * T.T1;
    if (std::fabs(disc) < singular_threshold * std::max(1.0, T.T1 * T.T1) || disc < 0.0) {
        std::ostringstream os;
        os << "Jacobian is singular: T2 - r*T1^2 = " << disc;
        throw singularity_error(os.str());
    }
    const double sgn = branch == Branch::Minus ? -1.0 : 1.0;
    const double root = std::sqrt(c.eta12) * std::sqrt(disc);
    Jacobian2 J;
    J.branch = branch == Branch::EqualTrim ? Branch::Plus : branch;
    J.discriminant = disc;
    if (f == Family::Frechet) {
        const double d11 = -sgn * c.ratio * T.T1 / root + (c.c1_2 - c.c1_1) / c.eta12;
        const double d12 = sgn / (2.0 * root);
        J.d = {d11, d12, p.sigma * (1.0 + d11 * c.c1_1), p.sigma * d12 * c.c1_1};
    } else {
        const double d21 = -sgn * c.ratio * T.T1 / root + (c.c1_1 - c.c1_2) / c.eta12;
        const double d22 = sgn / (2.0 * root);
        J.d = {1.0 - c.c1_1 * d21, -c.c1_1 * d22, d21, d22};
    }
    return J;
}

inline Jacobian2 jacobian_location_scale(const Params& p, const TrimmingScheme& s, Branch b = Branch::Plus) {
    return jacobian(Family::Normal, p, s, b);
}
inline Jacobian2 jacobian_frechet(const Params& p, const TrimmingScheme& s, Branch b = Branch::Plus) {
    return jacobian(Family::Frechet, p, s, b);
}

/// Omega = |sigma (c2(a2,bbar2) - c1(a1,bbar1) c1(a2,bbar2)) + theta (c1(a2,bbar2) - c1(a1,bbar1))|.
inline double omega(const Params& p, const TrimmingScheme& s) {
    const auto c = eta_constants(s);
    return std::fabs(p.sigma * (c.c2_2 - c.c1_1 * c.c1_2) + p.theta * (c.c1_2 - c.c1_1));
}

/// S = D Sigma D'.
inline Matrix2 delta_covariance(const Matrix2& sigma, const Matrix2& d) { return d * sigma * d.transpose(); }

/// Asymptotic covariance of the MLE: diag(sigma^2, sigma^2/2) for (theta, sigma) in the
/// location-scale case; the Frechet form for (beta, sigma).
inline Matrix2 s_mle(Family f, const Params& p) {
    validate(f, p);
    if (f == Family::Frechet) {
        const double b = p.beta, sg = p.sigma, k = 6.0 / (std::numbers::pi * std::numbers::pi);
        const double g1 = 1.0 - euler_gamma;
        return Matrix2::symmetric(k * b * b, k * g1 * sg * b * b,
                                  k * sg * sg * b * b * (g1 * g1 + std::numbers::pi * std::numbers::pi / 6.0));
    }
    return Matrix2::symmetric(p.sigma * p.sigma, 0.0, 0.5 * p.sigma * p.sigma);
}

/// 6 beta^4 sigma^2 / pi^2.
inline double frechet_det_s_mle(const Params& p) {
    return 6.0 * std::pow(p.beta, 4) * p.sigma * p.sigma / (std::numbers::pi * std::numbers::pi);
}

struct AreResult {
    double det_mle = 0.0;
    double det_T = 0.0;
    double value = 0.0;
    bool singular = false;
};

/// (det S_MLE / det S_T)^(1/2) with S_T built from the requested Jacobian branch (plus by default).
inline AreResult are(Family f, const Params& p, const TrimmingScheme& s, Branch branch = Branch::Plus) {
    AreResult r;
    r.det_mle = s_mle(f, p).det();
    try {
        const auto J = jacobian(f, p, s, branch);
        r.det_T = delta_covariance(sigma_T(f, p, s), J.d).det();
        r.value = std::sqrt(r.det_mle / r.det_T);
    } catch (const singularity_error&) {
        r.singular = true;
        r.value = 0.0;
    }
    return r;
}

struct BreakdownPoints {
    double lower = 0.0;
    double upper = 0.0;
};

inline BreakdownPoints breakdown_points(const TrimmingScheme& s) {
    return {std::min(s.a1, s.a2), std::min(s.b1, s.b2)};
}

/// Fills fit.S_T with D Sigma_T D' evaluated at the estimates, using the branch the estimator
/// selected. Divide by n for the covariance of the estimates.
inline void attach_covariance(FitResult& fit) {
    const Branch b = fit.branch == Branch::EqualTrim ? Branch::Plus : fit.branch;
    const auto J = jacobian(fit.family, fit.params, fit.scheme, b);
    fit.S_T = delta_covariance(sigma_T(fit.family, fit.params, fit.scheme), J.d);
}

} // namespace mtm
