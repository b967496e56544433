#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace mtm {

enum class Family { Normal, Lognormal, Frechet };

/// Normal and lognormal share the location-scale machinery (lognormal on log data).
enum class ModelKind { LocationScale, Frechet };

inline ModelKind kind_of(Family f) { return f == Family::Frechet ? ModelKind::Frechet : ModelKind::LocationScale; }

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::Normal: return "normal";
    case Family::Lognormal: return "lognormal";
    case Family::Frechet: return "frechet";
    }
    return "?";
}

inline Family parse_family(std::string_view s) {
    if (s == "normal") return Family::Normal;
    if (s == "lognormal") return Family::Lognormal;
    if (s == "frechet") return Family::Frechet;
    throw parameter_error("unknown model '" + std::string(s) + "' (expected normal, lognormal or frechet)");
}

/// theta: location (log scale for lognormal), sigma: scale, beta: Frechet tail index 1/alpha.
/// The Frechet location is fixed at zero.
struct Params {
    double theta = 0.0;
    double sigma = 1.0;
    double beta = 1.0;
};

inline void validate(Family f, const Params& p) {
    auto bad = [&](const char* what) {
        std::ostringstream os;
        os << to_string(f) << ": " << what;
        throw parameter_error(os.str());
    };
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) bad("scale must be positive and finite");
    if (f == Family::Frechet) {
        if (!(p.beta > 0.0) || !std::isfinite(p.beta)) bad("tail index must be positive and finite");
    } else if (!std::isfinite(p.theta)) {
        bad("location must be finite");
    }
}

inline constexpr double euler_gamma = 0.57721566490153286061;

/// Standard normal cdf.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

/// Inverse standard normal cdf: Acklam's rational approximation followed by one Newton step.
inline double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        std::ostringstream os;
        os << "normal quantile: probability " << u << " outside (0,1)";
        throw domain_error(os.str());
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    // work in the lower half to keep the Newton residual accurate
    const bool upper = u > 0.5;
    const double p = upper ? 1.0 - u : u;
    double x;
    if (p < 0.02425) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    const double dens = normal_pdf(x);
    if (dens > 0.0) x -= e / dens;
    return upper ? -x : x;
}

/// Frechet log-quantile kernel log(-log u).
inline double delta_kernel(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        std::ostringstream os;
        os << "log(-log u): probability " << u << " outside (0,1)";
        throw domain_error(os.str());
    }
    return std::log(-std::log(u));
}

/// F0^{-1}(u) of the standardized family: Phi^{-1} for normal and lognormal,
/// log(-log u) for Frechet (the log-scale kernel used by the moment equations).
inline double standard_quantile(Family f, double u) {
    return f == Family::Frechet ? delta_kernel(u) : normal_quantile(u);
}

inline double quantile(Family f, const Params& p, double u) {
    validate(f, p);
    switch (f) {
    case Family::Normal: return p.theta + p.sigma * normal_quantile(u);
    case Family::Lognormal: return std::exp(p.theta + p.sigma * normal_quantile(u));
    case Family::Frechet:
        if (!(u > 0.0 && u < 1.0)) throw domain_error("frechet quantile: probability outside (0,1)");
        return p.sigma * std::pow(-std::log(u), -p.beta);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

namespace detail {
inline void require_positive(Family f, double x) {
    if (!(x > 0.0)) {
        std::ostringstream os;
        os << to_string(f) << ": x = " << x << " outside the support (0, inf)";
        throw domain_error(os.str());
    }
}
} // namespace detail

inline double cdf(Family f, const Params& p, double x) {
    validate(f, p);
    switch (f) {
    case Family::Normal: return normal_cdf((x - p.theta) / p.sigma);
    case Family::Lognormal: detail::require_positive(f, x); return normal_cdf((std::log(x) - p.theta) / p.sigma);
    case Family::Frechet: detail::require_positive(f, x); return std::exp(-std::pow(x / p.sigma, -1.0 / p.beta));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double log_pdf(Family f, const Params& p, double x) {
    validate(f, p);
    constexpr double half_log_2pi = 0.91893853320467274178;
    switch (f) {
    case Family::Normal: {
        const double z = (x - p.theta) / p.sigma;
        return -half_log_2pi - std::log(p.sigma) - 0.5 * z * z;
    }
    case Family::Lognormal: {
        detail::require_positive(f, x);
        const double lx = std::log(x);
        const double z = (lx - p.theta) / p.sigma;
        return -half_log_2pi - std::log(p.sigma) - lx - 0.5 * z * z;
    }
    case Family::Frechet: {
        detail::require_positive(f, x);
        const double lz = std::log(x / p.sigma);
        const double t = std::exp(-lz / p.beta);
        return -std::log(p.beta) - std::log(x) - lz / p.beta - t;
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double pdf(Family f, const Params& p, double x) { return std::exp(log_pdf(f, p, x)); }

/// Survival function 1 - F(x).
inline double survival(Family f, const Params& p, double x) {
    if (f == Family::Frechet) {
        validate(f, p);
        detail::require_positive(f, x);
        return -std::expm1(-std::pow(x / p.sigma, -1.0 / p.beta));
    }
    return 1.0 - cdf(f, p, x);
}

using Rng = std::mt19937_64;

/// Uniform draw on the open interval (0,1) with 53 random bits.
inline double uniform_open(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Independent stream for (seed, repetition, replicate); used to make Monte Carlo
/// output independent of how replicates are scheduled.
inline Rng make_stream(std::uint64_t seed, std::uint64_t repetition = 0, std::uint64_t replicate = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(repetition), static_cast<std::uint32_t>(repetition >> 32),
                      static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
    return Rng(seq);
}

/// Inverse-transform sampling into out (resized to n).
inline void sample_into(Family f, const Params& p, std::size_t n, Rng& rng, std::vector<double>& out) {
    validate(f, p);
    out.resize(n);
    for (auto& x : out) x = quantile(f, p, uniform_open(rng));
}

inline std::vector<double> sample(Family f, const Params& p, std::size_t n, Rng& rng) {
    if (n == 0) throw parameter_error("sample: n must be at least 1");
    std::vector<double> out;
    sample_into(f, p, n, rng, out);
    return out;
}

inline std::vector<double> sample(Family f, const Params& p, std::size_t n, std::uint64_t seed) {
    auto rng = make_stream(seed);
    return sample(f, p, n, rng);
}

/// The moment transform y with h1 = y and h2 = y^2: identity for normal,
/// log for lognormal and Frechet.
inline double moment_transform(Family f, double x) {
    if (f == Family::Normal) return x;
    detail::require_positive(f, x);
    return std::log(x);
}

} // namespace mtm
