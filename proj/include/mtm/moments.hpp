#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "models.hpp"
#include "quadrature.hpp"

namespace mtm {

enum class Ordering { Equal, Condition8, Condition12 };

inline std::string_view to_string(Ordering o) {
    switch (o) {
    case Ordering::Equal: return "equal";
    case Ordering::Condition8: return "a2<=a1<bbar2<=bbar1";
    case Ordering::Condition12: return "a1<=a2<bbar1<=bbar2";
    }
    return "?";
}

/// Two trimming windows: moment j averages order statistics between proportions a_j and 1-b_j.
struct TrimmingScheme {
    double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;
    Ordering ordering = Ordering::Equal;

    double bbar1() const { return 1.0 - b1; }
    double bbar2() const { return 1.0 - b2; }
    bool equal() const { return ordering == Ordering::Equal; }
};

/// Validates proportions and tags the window ordering.
/// Windows that only touch (a_i == bbar_j) are accepted as the limiting case of the strict
/// ordering; the covariance formulas remain valid there.
inline TrimmingScheme validate_scheme(double a1, double b1, double a2, double b2) {
    auto fail = [&](const std::string& why) {
        std::ostringstream os;
        os << "trimming scheme (" << a1 << "," << b1 << ")/(" << a2 << "," << b2 << "): " << why;
        throw validation_error(os.str());
    };
    for (double p : {a1, b1, a2, b2})
        if (!std::isfinite(p) || p < 0.0 || p >= 1.0) fail("proportions must lie in [0,1)");
    if (a1 + b1 >= 1.0) fail("a1 + b1 must be below 1");
    if (a2 + b2 >= 1.0) fail("a2 + b2 must be below 1");
    TrimmingScheme s{a1, b1, a2, b2, Ordering::Equal};
    if (a1 == a2 && b1 == b2) return s;
    const double bb1 = 1.0 - b1, bb2 = 1.0 - b2;
    if (a2 <= a1 && a1 <= bb2 && bb2 <= bb1) {
        s.ordering = Ordering::Condition8;
        return s;
    }
    if (a1 <= a2 && a2 <= bb1 && bb1 <= bb2) {
        s.ordering = Ordering::Condition12;
        return s;
    }
    fail("windows are not nested as a2<=a1<bbar2<=bbar1 or a1<=a2<bbar1<=bbar2");
    return s;
}

/// Number of order statistics removed from one tail: floor(n*p). The tiny offset absorbs
/// representation error in products such as 30 * (1/30).
inline std::size_t trim_count(std::size_t n, double p) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * p + 1e-9));
}

struct KeptRange {
    std::size_t first = 0; ///< zero-based index of the first kept order statistic
    std::size_t count = 0;
};

inline KeptRange kept_range(std::size_t n, double a, double b) {
    const std::size_t lo = trim_count(n, a), hi = trim_count(n, b);
    if (lo + hi >= n) {
        std::ostringstream os;
        os << "trimming (" << a << "," << b << ") leaves no observations out of " << n;
        throw trimming_error(os.str());
    }
    return {lo, n - lo - hi};
}

/// Mean of h over the kept block of already sorted values.
template <class H>
double trimmed_mean_sorted(const std::vector<double>& sorted, double a, double b, H&& h) {
    if (sorted.empty()) throw trimming_error("trimmed moment of an empty sample");
    const auto r = kept_range(sorted.size(), a, b);
    double s = 0.0;
    for (std::size_t i = r.first; i < r.first + r.count; ++i) s += h(sorted[i]);
    return s / static_cast<double>(r.count);
}

/// Sample trimmed moment: sorts, drops floor(n*a) lowest and floor(n*b) highest values,
/// averages h over the rest.
template <class H>
double sample_trimmed_moment(std::vector<double> data, double a, double b, H&& h) {
    std::stable_sort(data.begin(), data.end());
    return trimmed_mean_sorted(data, a, b, std::forward<H>(h));
}

struct MomentSummary {
    double T1 = 0.0, T2 = 0.0;
    KeptRange kept1, kept2;
    std::size_t n = 0;
};

/// Both trimmed moments from sorted transformed data y (h1 = y, h2 = y^2).
inline MomentSummary trimmed_moments_sorted(const std::vector<double>& y, const TrimmingScheme& s) {
    MomentSummary m;
    m.n = y.size();
    m.T1 = trimmed_mean_sorted(y, s.a1, s.b1, [](double v) { return v; });
    m.T2 = trimmed_mean_sorted(y, s.a2, s.b2, [](double v) { return v * v; });
    m.kept1 = kept_range(y.size(), s.a1, s.b1);
    m.kept2 = kept_range(y.size(), s.a2, s.b2);
    return m;
}

/// Sorted moment-transformed data for a family (log for lognormal and Frechet).
inline std::vector<double> transformed_sorted(Family f, const std::vector<double>& data) {
    std::vector<double> y(data.size());
    std::transform(data.begin(), data.end(), y.begin(), [f](double x) { return moment_transform(f, x); });
    std::stable_sort(y.begin(), y.end());
    return y;
}

inline MomentSummary trimmed_moments(Family f, const std::vector<double>& data, const TrimmingScheme& s) {
    return trimmed_moments_sorted(transformed_sorted(f, data), s);
}

namespace detail {

inline double kernel_power(ModelKind kind, double u, int k) {
    const double q = kind == ModelKind::Frechet ? delta_kernel(u) : normal_quantile(u);
    double r = q;
    for (int i = 1; i < k; ++i) r *= q;
    return r;
}

class ConstantCache {
public:
    using Key = std::tuple<int, double, double, int>;
    bool find(const Key& k, double& out) const {
        std::shared_lock lock(mu_);
        auto it = map_.find(k);
        if (it == map_.end()) return false;
        out = it->second;
        return true;
    }
    void store(const Key& k, double v) {
        std::unique_lock lock(mu_);
        map_.emplace(k, v);
    }

private:
    mutable std::shared_mutex mu_;
    std::map<Key, double> map_;
};

inline ConstantCache& constant_cache() {
    static ConstantCache cache;
    return cache;
}

} // namespace detail

/// (1/(bbar-a)) * integral over (a, bbar) of [F0^{-1}(u)]^k, with F0^{-1} = Phi^{-1}
/// (location-scale) or log(-log u) (Frechet). Memoized.
inline double window_average(ModelKind kind, double a, double bbar, int k) {
    if (!(a >= 0.0 && bbar <= 1.0 && a < bbar)) {
        std::ostringstream os;
        os << "moment constant: window (" << a << ", " << bbar << ") is not a subinterval of [0,1] with a < bbar";
        throw domain_error(os.str());
    }
    if (k < 1 || k > 4) throw domain_error("moment constant: power k must be 1..4");
    const detail::ConstantCache::Key key{static_cast<int>(kind), a, bbar, k};
    double v;
    if (detail::constant_cache().find(key, v)) return v;
    v = integrate([kind, k](double u) { return detail::kernel_power(kind, u, k); }, a, bbar, 1e-12) / (bbar - a);
    detail::constant_cache().store(key, v);
    return v;
}

/// c_k(a, bbar) for the standard normal quantile.
inline double c_k(double a, double bbar, int k) { return window_average(ModelKind::LocationScale, a, bbar, k); }

/// kappa_k(a, bbar) for Delta(u) = log(-log u).
inline double kappa_k(double a, double bbar, int k) { return window_average(ModelKind::Frechet, a, bbar, k); }

/// Constants that invert the population moments. Names follow the location-scale case;
/// for Frechet read kappa for c and zeta for eta.
struct MomentConstants {
    ModelKind kind = ModelKind::LocationScale;
    double c1_1 = 0.0;  ///< c1(a1, bbar1)
    double c1_2 = 0.0;  ///< c1(a2, bbar2)
    double c2_2 = 0.0;  ///< c2(a2, bbar2)
    double eta12 = 0.0; ///< eta(a1, bbar2) = c1(a1,bbar1)^2 - 2 c1(a1,bbar1) c1(a2,bbar2) + c2(a2,bbar2)
    double eta22 = 0.0; ///< eta(a2, bbar2) = c2(a2,bbar2) - c1(a2,bbar2)^2
    double ratio = 1.0; ///< eta_r = eta22 / eta12
};

inline MomentConstants moment_constants(ModelKind kind, const TrimmingScheme& s) {
    MomentConstants m;
    m.kind = kind;
    m.c1_1 = window_average(kind, s.a1, s.bbar1(), 1);
    m.c1_2 = window_average(kind, s.a2, s.bbar2(), 1);
    m.c2_2 = window_average(kind, s.a2, s.bbar2(), 2);
    m.eta22 = m.c2_2 - m.c1_2 * m.c1_2;
    if (s.equal()) {
        m.eta12 = m.eta22;
        m.ratio = 1.0;
    } else {
        m.eta12 = m.c1_1 * m.c1_1 - 2.0 * m.c1_1 * m.c1_2 + m.c2_2;
        m.ratio = m.eta22 / m.eta12;
    }
    return m;
}

inline MomentConstants eta_constants(const TrimmingScheme& s) { return moment_constants(ModelKind::LocationScale, s); }
inline MomentConstants zeta_constants(const TrimmingScheme& s) { return moment_constants(ModelKind::Frechet, s); }

struct PopulationMoments {
    double T1 = 0.0, T2 = 0.0;
};

/// Population trimmed moments of y (the moment transform of X).
inline PopulationMoments population_moments(Family f, const Params& p, const TrimmingScheme& s) {
    validate(f, p);
    const auto c = moment_constants(kind_of(f), s);
    if (f == Family::Frechet) {
        const double L = std::log(p.sigma);
        return {L - p.beta * c.c1_1, L * L - 2.0 * p.beta * L * c.c1_2 + p.beta * p.beta * c.c2_2};
    }
    return {p.theta + p.sigma * c.c1_1, p.theta * p.theta + 2.0 * p.theta * p.sigma * c.c1_2 + p.sigma * p.sigma * c.c2_2};
}

} // namespace mtm
