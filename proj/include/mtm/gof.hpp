#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "models.hpp"

namespace mtm {

/// Mean absolute deviation between log fitted quantiles at (j - 0.5)/n and log order statistics.
inline double fit_statistic(Family f, const Params& p, std::vector<double> data) {
    if (data.empty()) throw domain_error("fit statistic of an empty sample");
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double s = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) {
        if (!(data[j] > 0.0)) throw domain_error("fit statistic: data must be positive");
        const double u = (static_cast<double>(j) + 0.5) / n;
        double lq;
        if (f == Family::Lognormal) {
            lq = p.theta + p.sigma * normal_quantile(u);
        } else if (f == Family::Frechet) {
            lq = std::log(p.sigma) - p.beta * delta_kernel(u);
        } else {
            const double q = quantile(f, p, u);
            if (!(q > 0.0)) throw domain_error("fit statistic: fitted normal quantile is not positive");
            lq = std::log(q);
        }
        s += std::fabs(lq - std::log(data[j]));
    }
    return s / n;
}

struct InformationCriteria {
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    bool finite = true; ///< false when some datum has zero density
};

/// AIC = 2k - 2 loglik and BIC = k log n - 2 loglik with k = 2, at the supplied estimates.
inline InformationCriteria information_criteria(Family f, const Params& p, const std::vector<double>& data, int k = 2) {
    InformationCriteria ic;
    for (double x : data) ic.loglik += log_pdf(f, p, x);
    if (!std::isfinite(ic.loglik)) {
        ic.finite = false;
        ic.loglik = -std::numeric_limits<double>::infinity();
    }
    const double n = static_cast<double>(data.size());
    ic.aic = 2.0 * k - 2.0 * ic.loglik;
    ic.bic = k * std::log(n) - 2.0 * ic.loglik;
    return ic;
}

/// Copy of data with its largest value multiplied by factor.
inline std::vector<double> modify_dataset(std::vector<double> data, double factor = 10.0) {
    if (data.empty()) throw domain_error("modify_dataset: empty data");
    auto it = std::max_element(data.begin(), data.end());
    *it *= factor;
    return data;
}

enum class DatasetTag { Original, Modified };

inline std::string_view to_string(DatasetTag t) { return t == DatasetTag::Original ? "original" : "modified"; }

struct GofReport {
    Family family = Family::Lognormal;
    std::string estimator; ///< "MLE" or a scheme label
    Params params;
    double fit = 0.0;
    InformationCriteria ic;
    std::size_t n = 0;
    DatasetTag dataset = DatasetTag::Original;
};

inline GofReport gof_report(Family f, const std::string& estimator, const Params& p, const std::vector<double>& data,
                            DatasetTag tag) {
    GofReport r;
    r.family = f;
    r.estimator = estimator;
    r.params = p;
    r.fit = fit_statistic(f, p, data);
    r.ic = information_criteria(f, p, data);
    r.n = data.size();
    r.dataset = tag;
    return r;
}

} // namespace mtm
