#pragma once

#include <stdexcept>
#include <string>

namespace mtm {

/// Argument outside the support of a function (u not in (0,1), x <= 0 under a log, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid distribution parameters.
class parameter_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Trimming proportions that do not form an admissible scheme.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Trimming leaves no observation to average.
class trimming_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class integration_error : public std::runtime_error {
public:
    integration_error(const std::string& what, double estimate, double error_bound)
        : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}
    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

/// Both candidate scale (or tail) estimates are nonpositive.
class estimation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class root_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The discriminant T2 - r*T1^2 vanishes and the Jacobian is undefined.
class singularity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mtm
