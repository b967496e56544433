#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "errors.hpp"
#include "matrix2.hpp"
#include "models.hpp"
#include "moments.hpp"

namespace mtm {

enum class Branch { Plus, Minus, EqualTrim };

inline std::string_view to_string(Branch b) {
    switch (b) {
    case Branch::Plus: return "plus";
    case Branch::Minus: return "minus";
    case Branch::EqualTrim: return "equal";
    }
    return "?";
}

struct NormalMle {
    double theta = 0.0;
    double sigma = 0.0;
    bool degenerate = false;
};

/// Sample mean and the 1/n standard deviation.
inline NormalMle mle_normal(const std::vector<double>& data) {
    if (data.size() < 2) throw parameter_error("normal MLE needs at least 2 observations");
    const double n = static_cast<double>(data.size());
    const double mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : data) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / n);
    return {mean, sd, sd == 0.0};
}

namespace detail {

/// xi(beta) evaluated on log data with weights shifted by the smallest log value.
struct FrechetScore {
    const std::vector<double>& logs;
    double lmin;
    double lmean;

    double weight_sum(double beta, double* weighted_log) const {
        double sw = 0.0, swl = 0.0;
        for (double l : logs) {
            const double w = std::exp(-(l - lmin) / beta);
            sw += w;
            swl += w * l;
        }
        if (weighted_log) *weighted_log = swl;
        return sw;
    }
    double operator()(double beta) const {
        double swl;
        const double sw = weight_sum(beta, &swl);
        return beta + swl / sw - lmean;
    }
};

} // namespace detail

/// Frechet MLE from log observations. beta solves xi(beta) = 0, sigma = (mean x^{-1/beta})^{-beta}.
inline Params mle_frechet_logs(const std::vector<double>& logs) {
    if (logs.size() < 2) throw parameter_error("Frechet MLE needs at least 2 observations");
    const double n = static_cast<double>(logs.size());
    const auto [mn, mx] = std::minmax_element(logs.begin(), logs.end());
    const double lmin = *mn;
    if (*mx == lmin) throw root_error("Frechet MLE: constant data, xi(beta) = beta has no positive root");
    const double lmean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    detail::FrechetScore xi{logs, lmin, lmean};

    // start from the coefficient of variation of x, to which beta is roughly proportional
    double mean = 0.0;
    for (double l : logs) mean += std::exp(l - lmin);
    mean /= n;
    double var = 0.0;
    for (double l : logs) {
        const double d = std::exp(l - lmin) - mean;
        var += d * d;
    }
    double start = std::sqrt(var / n) / mean;
    if (!std::isfinite(start) || !(start > 0.0)) start = 1.0;

    double lo = start, hi = start;
    double flo = xi(lo), fhi = flo;
    int guard = 0;
    if (flo < 0.0) {
        while (fhi < 0.0) {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = xi(hi);
            if (++guard > 2000 || !std::isfinite(hi)) throw root_error("Frechet MLE: failed to bracket the root of xi");
        }
    } else {
        while (flo > 0.0) {
            hi = lo;
            fhi = flo;
            lo *= 0.5;
            flo = xi(lo);
            if (++guard > 2000 || !(lo > 0.0)) throw root_error("Frechet MLE: failed to bracket the root of xi");
        }
    }
    double beta = lo;
    if (flo != 0.0) {
        if (fhi == 0.0) {
            beta = hi;
        } else {
            std::uintmax_t iters = 200;
            auto r = boost::math::tools::toms748_solve(xi, lo, hi, flo, fhi,
                                                       boost::math::tools::eps_tolerance<double>(52), iters);
            beta = 0.5 * (r.first + r.second);
            // pick the endpoint with the smaller residual if the midpoint is worse
            for (double cand : {r.first, r.second})
                if (std::fabs(xi(cand)) < std::fabs(xi(beta))) beta = cand;
        }
    }
    const double res = xi(beta);
    if (!(std::fabs(res) <= 1e-10 * std::max(1.0, beta))) {
        std::ostringstream os;
        os << "Frechet MLE: root residual " << res << " at beta = " << beta;
        throw root_error(os.str());
    }
    const double sw = xi.weight_sum(beta, nullptr);
    const double sigma = std::exp(lmin) * std::pow(sw / n, -beta);
    return {0.0, sigma, beta};
}

inline Params mle_frechet(const std::vector<double>& data) {
    std::vector<double> logs(data.size());
    std::transform(data.begin(), data.end(), logs.begin(), [](double x) { return moment_transform(Family::Frechet, x); });
    return mle_frechet_logs(logs);
}

/// Full-sample MLE of a family; the lognormal MLE is the normal MLE of log data.
inline Params mle(Family f, const std::vector<double>& data) {
    if (f == Family::Frechet) return mle_frechet(data);
    std::vector<double> y(data.size());
    std::transform(data.begin(), data.end(), y.begin(), [f](double x) { return moment_transform(f, x); });
    const auto m = mle_normal(y);
    return {m.theta, m.sigma, 1.0};
}

/// The two candidate scale (location-scale) or tail (Frechet) estimates minus = -ft + st and plus = ft + st.
struct CandidatePair {
    double ft = 0.0;
    double st = 0.0;
    bool negative_discriminant = false;
    double minus() const { return -ft + st; }
    double plus() const { return ft + st; }
};

inline CandidatePair candidate_scales(double T1, double T2, const MomentConstants& c, bool equal_scheme = false) {
    CandidatePair p;
    const double ratio = equal_scheme ? 1.0 : c.ratio;
    const double disc = T2 - ratio * T1 * T1;
    p.negative_discriminant = disc < 0.0;
    p.ft = std::sqrt(std::fabs(disc)) / std::sqrt(c.eta12);
    if (equal_scheme) {
        p.st = 0.0;
    } else if (c.kind == ModelKind::Frechet) {
        p.st = T1 * (c.c1_2 - c.c1_1) / c.eta12;
    } else {
        p.st = T1 * (c.c1_1 - c.c1_2) / c.eta12;
    }
    return p;
}

struct Selection {
    double value = 0.0;
    Branch branch = Branch::Plus;
};

/// Sign disambiguation. reference() supplies the full-sample MLE of the same quantity and is
/// only called when both candidates are positive.
inline Selection select_candidate(const CandidatePair& p, const std::function<double()>& reference) {
    const double lo = p.minus(), hi = p.plus();
    if (std::max(lo, hi) <= 0.0) {
        std::ostringstream os;
        os << "both candidate estimates are nonpositive (minus = " << lo << ", plus = " << hi
           << "); update trimming proportions";
        throw estimation_error(os.str());
    }
    if (lo <= 0.0) return {hi, Branch::Plus};
    if (hi <= 0.0) return {lo, Branch::Minus};
    const double ref = reference();
    if (std::fabs(hi - ref) <= std::fabs(lo - ref)) return {hi, Branch::Plus};
    return {lo, Branch::Minus};
}

struct FitResult {
    Family family = Family::Normal;
    Params params;
    Branch branch = Branch::EqualTrim;
    TrimmingScheme scheme;
    MomentSummary moments;
    MomentConstants constants;
    CandidatePair candidates;
    std::optional<Params> mle; ///< set when the proximity rule needed it
    std::size_t n = 0;
    std::optional<Matrix2> S_T; ///< delta-method covariance, filled by the asymptotics module
};

/// Inverts the two moment equations. reference() returns the full-sample MLE parameters.
inline FitResult fit_from_moments(Family f, const MomentSummary& m, const TrimmingScheme& s,
                                  const std::function<Params()>& reference) {
    FitResult r;
    r.family = f;
    r.scheme = s;
    r.moments = m;
    r.n = m.n;
    r.constants = moment_constants(kind_of(f), s);
    r.candidates = candidate_scales(m.T1, m.T2, r.constants, s.equal());
    const bool frechet = f == Family::Frechet;

    double scale;
    if (s.equal()) {
        scale = r.candidates.ft;
        r.branch = Branch::EqualTrim;
        // a constant kept block leaves only rounding noise in T2 - T1^2
        if (!(scale > 1e-7 * std::max(1.0, std::fabs(m.T1)))) throw estimation_error("equal trimming: degenerate kept block; update trimming proportions");
    } else {
        auto sel = select_candidate(r.candidates, [&] {
            r.mle = reference();
            return frechet ? r.mle->beta : r.mle->sigma;
        });
        scale = sel.value;
        r.branch = sel.branch;
    }
    if (frechet) {
        r.params = {0.0, std::exp(m.T1 + scale * r.constants.c1_1), scale};
    } else {
        r.params = {m.T1 - r.constants.c1_1 * scale, scale, 1.0};
    }
    return r;
}

/// Fit from moment-transformed data sorted ascending (y = x, or log x for lognormal and Frechet).
inline FitResult fit_sorted(Family f, const std::vector<double>& y_sorted, const TrimmingScheme& s,
                            const std::optional<Params>& mle_hint = std::nullopt) {
    if (y_sorted.size() < 2) throw parameter_error("fit needs at least 2 observations");
    const auto m = trimmed_moments_sorted(y_sorted, s);
    return fit_from_moments(f, m, s, [&]() -> Params {
        if (mle_hint) return *mle_hint;
        if (f == Family::Frechet) return mle_frechet_logs(y_sorted);
        const auto nm = mle_normal(y_sorted);
        return {nm.theta, nm.sigma, 1.0};
    });
}

inline FitResult fit(Family f, const std::vector<double>& data, const TrimmingScheme& s) {
    return fit_sorted(f, transformed_sorted(f, data), s);
}

/// Location-scale fit (normal; pass Family::Lognormal for positive data).
inline FitResult fit_location_scale(const std::vector<double>& data, const TrimmingScheme& s,
                                    Family f = Family::Normal) {
    if (f == Family::Frechet) throw parameter_error("fit_location_scale: Frechet is not a location-scale family");
    return fit(f, data, s);
}

inline FitResult fit_frechet(const std::vector<double>& data, const TrimmingScheme& s) {
    return fit(Family::Frechet, data, s);
}

} // namespace mtm
