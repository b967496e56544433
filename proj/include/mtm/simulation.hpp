#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "asymptotics.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "models.hpp"
#include "moments.hpp"

namespace mtm {

namespace detail {

/// Pairwise summation over a fixed index order.
inline double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

/// First and second parameter of the estimated pair: (theta, sigma) or (beta, sigma).
inline double first_param(Family f, const Params& p) { return f == Family::Frechet ? p.beta : p.theta; }

} // namespace detail

/// Finite-sample relative efficiency det(S_MLE)^(1/2) / (n det(MSE))^(1/2), where MSE is the
/// matrix of empirical cross moments E[(p - p0)(q - q0)] of the estimated pair and S_MLE the
/// asymptotic covariance of sqrt(n) times the MLE.
inline double finite_re(Family f, const Params& truth, const std::vector<Params>& estimates, std::size_t n) {
    if (estimates.size() < 2) throw parameter_error("finite_re: need at least 2 estimates");
    const double p0 = detail::first_param(f, truth), q0 = truth.sigma;
    std::vector<double> pp(estimates.size()), pq(estimates.size()), qq(estimates.size());
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        const double dp = detail::first_param(f, estimates[k]) - p0;
        const double dq = estimates[k].sigma - q0;
        pp[k] = dp * dp;
        pq[k] = dp * dq;
        qq[k] = dq * dq;
    }
    const double m = static_cast<double>(estimates.size());
    const double e11 = detail::pairwise_sum(pp) / m, e12 = detail::pairwise_sum(pq) / m,
                 e22 = detail::pairwise_sum(qq) / m;
    const double det = e11 * e22 - e12 * e12;
    if (!(det > 0.0)) throw root_error("finite_re: empirical cross-moment matrix is singular");
    return std::sqrt(s_mle(f, truth).det()) / (static_cast<double>(n) * std::sqrt(det));
}

struct StudyConfig {
    Family family = Family::Normal;
    Params truth;
    std::size_t n = 100;
    std::size_t replicates = 2000;
    std::size_t repetitions = 3;
    std::uint64_t seed = 20240601;
    std::vector<TrimmingScheme> schemes;
    unsigned workers = 0; ///< 0: MTM_THREADS environment variable, else hardware concurrency
    double max_failure_rate = 0.01;
};

/// Summary for one estimator (the MLE or one trimming scheme).
struct EstimatorSummary {
    std::string label;
    std::optional<TrimmingScheme> scheme; ///< empty for the MLE row
    double mean_ratio1 = 0.0, sd_ratio1 = 0.0; ///< theta-hat/theta or beta-hat/beta
    double mean_ratio2 = 0.0, sd_ratio2 = 0.0; ///< sigma-hat/sigma
    double mean_re = 0.0, sd_re = 0.0;
    double are = 0.0; ///< n -> infinity efficiency from the asymptotics module
    std::size_t failures = 0;
    std::size_t fits = 0;
    bool failed_study = false;
};

struct StudyResult {
    StudyConfig config;
    std::vector<EstimatorSummary> rows; ///< MLE first, then schemes in config order
    bool ok = true;
    std::string diagnostic;
};

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MTM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

inline std::string scheme_label(const TrimmingScheme& s) {
    std::ostringstream os;
    os << "(" << s.a1 << "," << s.b1 << ")/(" << s.a2 << "," << s.b2 << ")";
    return os.str();
}

inline StudyResult run_study(const StudyConfig& cfg) {
    if (cfg.replicates < 100) throw validation_error("simulation: replicates must be at least 100");
    if (cfg.repetitions < 1) throw validation_error("simulation: repetitions must be at least 1");
    if (cfg.n < 20) throw validation_error("simulation: n must be at least 20");
    validate(cfg.family, cfg.truth);

    const Family f = cfg.family;
    const std::size_t S = cfg.schemes.size();
    const std::size_t E = S + 1; // estimator 0 is the MLE
    const std::size_t R = cfg.replicates;

    StudyResult res;
    res.config = cfg;
    res.rows.resize(E);
    res.rows[0].label = "MLE";
    res.rows[0].are = 1.0;
    for (std::size_t s = 0; s < S; ++s) {
        res.rows[s + 1].label = scheme_label(cfg.schemes[s]);
        res.rows[s + 1].scheme = cfg.schemes[s];
        const auto a = are(f, cfg.truth, cfg.schemes[s]);
        res.rows[s + 1].are = a.value;
    }

    const double p0 = detail::first_param(f, cfg.truth), q0 = cfg.truth.sigma;
    std::vector<std::vector<double>> r1(E), r2(E), re(E);
    const unsigned workers = std::max(1u, std::min<unsigned>(resolve_workers(cfg.workers), static_cast<unsigned>(R)));

    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        // est[e * R + k]; ok flags mark successful fits
        std::vector<Params> est(E * R);
        std::vector<char> ok(E * R, 0);

        auto work = [&](std::size_t begin, std::size_t end) {
            std::vector<double> x, y;
            for (std::size_t k = begin; k < end; ++k) {
                auto rng = make_stream(cfg.seed, rep, k);
                sample_into(f, cfg.truth, cfg.n, rng, x);
                y.resize(x.size());
                std::transform(x.begin(), x.end(), y.begin(), [f](double v) { return moment_transform(f, v); });
                std::sort(y.begin(), y.end());
                std::optional<Params> m;
                try {
                    if (f == Family::Frechet) {
                        m = mle_frechet_logs(y);
                    } else {
                        const auto nm = mle_normal(y);
                        m = Params{nm.theta, nm.sigma, 1.0};
                    }
                    est[k] = *m;
                    ok[k] = 1;
                } catch (const std::runtime_error&) {
                }
                for (std::size_t s = 0; s < S; ++s) {
                    try {
                        est[(s + 1) * R + k] = fit_sorted(f, y, cfg.schemes[s], m).params;
                        ok[(s + 1) * R + k] = 1;
                    } catch (const estimation_error&) {
                    } catch (const root_error&) {
                    }
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t chunk = (R + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk, e = std::min(R, b + chunk);
            if (b >= e) break;
            if (workers == 1) work(b, e);
            else pool.emplace_back(work, b, e);
        }
        for (auto& t : pool) t.join();

        for (std::size_t e = 0; e < E; ++e) {
            std::vector<Params> good;
            std::vector<double> a1, a2;
            for (std::size_t k = 0; k < R; ++k) {
                if (!ok[e * R + k]) {
                    ++res.rows[e].failures;
                    continue;
                }
                const auto& p = est[e * R + k];
                good.push_back(p);
                a1.push_back(detail::first_param(f, p) / p0);
                a2.push_back(p.sigma / q0);
            }
            res.rows[e].fits += good.size();
            if (good.size() < 2) continue;
            r1[e].push_back(detail::pairwise_sum(a1) / static_cast<double>(a1.size()));
            r2[e].push_back(detail::pairwise_sum(a2) / static_cast<double>(a2.size()));
            try {
                re[e].push_back(finite_re(f, cfg.truth, good, cfg.n));
            } catch (const root_error&) {
            }
        }
    }

    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
        if (v.empty()) {
            mean = sd = std::nan("");
            return;
        }
        mean = detail::pairwise_sum(v) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    };
    const double total = static_cast<double>(R * cfg.repetitions);
    for (std::size_t e = 0; e < E; ++e) {
        auto& row = res.rows[e];
        mean_sd(r1[e], row.mean_ratio1, row.sd_ratio1);
        mean_sd(r2[e], row.mean_ratio2, row.sd_ratio2);
        mean_sd(re[e], row.mean_re, row.sd_re);
        if (static_cast<double>(row.failures) > cfg.max_failure_rate * total) {
            row.failed_study = true;
            res.ok = false;
            std::ostringstream os;
            os << row.label << ": " << row.failures << " estimation failures out of " << total
               << " exceed the allowed rate " << cfg.max_failure_rate << "; ";
            res.diagnostic += os.str();
        }
    }
    return res;
}

/// One CSV row per estimator.
inline void write_study_csv(std::ostream& os, const StudyResult& r, bool header = true) {
    if (header)
        os << "model,n,replicates,repetitions,estimator,a1,b1,a2,b2,mean_ratio1,sd_ratio1,mean_ratio2,sd_ratio2,"
              "re,sd_re,are,failures\n";
    char buf[512];
    for (const auto& row : r.rows) {
        std::string sch = ",,,";
        if (row.scheme) {
            std::snprintf(buf, sizeof buf, "%g,%g,%g,%g", row.scheme->a1, row.scheme->b1, row.scheme->a2, row.scheme->b2);
            sch = buf;
        }
        std::snprintf(buf, sizeof buf, "%s,%zu,%zu,%zu,\"%s\",%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%zu\n",
                      std::string(to_string(r.config.family)).c_str(), r.config.n, r.config.replicates,
                      r.config.repetitions, row.label.c_str(), sch.c_str(), row.mean_ratio1, row.sd_ratio1,
                      row.mean_ratio2, row.sd_ratio2, row.mean_re, row.sd_re, row.are, row.failures);
        os << buf;
    }
}

} // namespace mtm
