#pragma once

// Command implementations behind the mtm executable. Each command writes its complete output
// to a string first so that a failure never leaves partial output behind.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymptotics.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "gof.hpp"
#include "models.hpp"
#include "moments.hpp"
#include "simulation.hpp"

namespace mtm::cli {

enum ExitCode : int { ok = 0, io_error = 1, invalid = 2, estimation_failed = 3 };

class io_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Parses a decimal or a ratio such as "1/30".
inline double parse_number(const std::string& text) {
    const std::string s = trim(text);
    auto whole = [&](const std::string& t) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(t, &pos);
        } catch (const std::exception&) {
            throw validation_error("not a number: '" + text + "'");
        }
        if (pos != t.size()) throw validation_error("not a number: '" + text + "'");
        return v;
    };
    const auto slash = s.find('/');
    if (slash == std::string::npos) return whole(s);
    const double num = whole(trim(s.substr(0, slash))), den = whole(trim(s.substr(slash + 1)));
    if (den == 0.0) throw validation_error("zero denominator in '" + text + "'");
    return num / den;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// "a1,b1,a2,b2".
inline TrimmingScheme parse_scheme(const std::string& s) {
    const auto parts = split(s, ',');
    if (parts.size() != 4) throw validation_error("scheme must be a1,b1,a2,b2: '" + s + "'");
    return validate_scheme(parse_number(parts[0]), parse_number(parts[1]), parse_number(parts[2]),
                           parse_number(parts[3]));
}

/// "start:stop:step" (inclusive), a comma list, or a single value.
inline std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    if (s.find(':') != std::string::npos) {
        const auto p = split(s, ':');
        if (p.size() != 3) throw validation_error("range must be start:stop:step: '" + s + "'");
        const double a = parse_number(p[0]), b = parse_number(p[1]), h = parse_number(p[2]);
        if (!(h > 0.0) || b < a) throw validation_error("range needs step > 0 and stop >= start: '" + s + "'");
        const auto count = static_cast<long>(std::floor((b - a) / h + 1e-9));
        for (long k = 0; k <= count; ++k) out.push_back(a + static_cast<double>(k) * h);
        return out;
    }
    for (const auto& t : split(s, ',')) out.push_back(parse_number(t));
    if (out.empty()) throw validation_error("empty value list");
    return out;
}

/// One numeric column; a non-numeric first line is treated as a header. Extra columns are ignored.
inline std::vector<double> read_column_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_failure("cannot open data file '" + path + "'");
    std::vector<double> v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string field = trim(split(line, ',').empty() ? line : split(line, ',').front());
        if (field.empty() || field[0] == '#') continue;
        if (field.size() >= 2 && field.front() == '"' && field.back() == '"') field = field.substr(1, field.size() - 2);
        try {
            v.push_back(parse_number(field));
        } catch (const validation_error&) {
            if (lineno == 1) continue;
            throw io_failure("data file '" + path + "', line " + std::to_string(lineno) + ": not a number");
        }
    }
    if (v.empty()) throw io_failure("data file '" + path + "' holds no values");
    return v;
}

inline void emit(const std::string& text, const std::string& output, std::ostream& out) {
    if (output.empty() || output == "-") {
        out << text;
        return;
    }
    std::ofstream f(output);
    if (!f) throw io_failure("cannot write '" + output + "'");
    f << text;
    if (!f) throw io_failure("write to '" + output + "' failed");
}

/// Maps library exceptions to the exit-code policy.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const io_failure& e) {
        err << "error: " << e.what() << "\n";
        return io_error;
    } catch (const estimation_error& e) {
        err << "estimation failed: " << e.what() << "\n";
        return estimation_failed;
    } catch (const root_error& e) {
        err << "estimation failed: " << e.what() << "\n";
        return estimation_failed;
    } catch (const trimming_error& e) {
        err << "invalid input: " << e.what() << "\n";
        return invalid;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << "\n";
        return invalid;
    } catch (const std::domain_error& e) {
        err << "invalid input: " << e.what() << "\n";
        return invalid;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return estimation_failed;
    }
}

inline nlohmann::json scheme_json(const TrimmingScheme& s) {
    return {{"a1", s.a1}, {"b1", s.b1}, {"a2", s.a2}, {"b2", s.b2}, {"ordering", std::string(to_string(s.ordering))}};
}

inline nlohmann::json matrix_json(const Matrix2& m) { return nlohmann::json::array({{m.m11, m.m12}, {m.m21, m.m22}}); }

struct FitArgs {
    std::string model = "normal";
    std::string scheme; ///< "a1,b1,a2,b2"; overrides the individual proportions when set
    std::string a1 = "0", b1 = "0", a2 = "0", b2 = "0";
    std::string data;
    double scale = 1.0; ///< data are multiplied by this before fitting
    std::string output;
};

inline nlohmann::json fit_json(const FitResult& r, double scale) {
    nlohmann::json j;
    j["model"] = std::string(to_string(r.family));
    j["n"] = r.n;
    j["scheme"] = scheme_json(r.scheme);
    j["branch"] = std::string(to_string(r.branch));
    j["moments"] = {{"T1", r.moments.T1}, {"T2", r.moments.T2}};
    j["candidates"] = {{"first_term", r.candidates.ft},
                       {"second_term", r.candidates.st},
                       {"minus", r.candidates.minus()},
                       {"plus", r.candidates.plus()},
                       {"negative_discriminant", r.candidates.negative_discriminant}};
    if (r.family == Family::Frechet) {
        j["estimates"] = {{"beta", r.params.beta}, {"sigma", r.params.sigma}, {"sigma_star", r.params.sigma / scale}};
    } else {
        j["estimates"] = {{"theta", r.params.theta}, {"sigma", r.params.sigma}};
    }
    if (r.mle) {
        if (r.family == Family::Frechet)
            j["mle"] = {{"beta", r.mle->beta}, {"sigma", r.mle->sigma}};
        else
            j["mle"] = {{"theta", r.mle->theta}, {"sigma", r.mle->sigma}};
    }
    if (r.S_T) {
        j["S_T"] = matrix_json(*r.S_T);
        const double n = static_cast<double>(r.n);
        j["standard_errors"] = {std::sqrt(std::max(0.0, r.S_T->m11 / n)), std::sqrt(std::max(0.0, r.S_T->m22 / n))};
    } else {
        j["S_T"] = nullptr;
    }
    const auto bp = breakdown_points(r.scheme);
    j["breakdown"] = {{"lower", bp.lower}, {"upper", bp.upper}};
    return j;
}

inline int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Family f = parse_family(a.model);
        const auto s = a.scheme.empty() ? validate_scheme(parse_number(a.a1), parse_number(a.b1), parse_number(a.a2),
                                                          parse_number(a.b2))
                                        : parse_scheme(a.scheme);
        if (!(a.scale > 0.0)) throw validation_error("--scale must be positive");
        auto data = read_column_csv(a.data);
        for (auto& x : data) x *= a.scale;
        auto r = fit(f, data, s);
        try {
            attach_covariance(r);
        } catch (const singularity_error& e) {
            err << "warning: " << e.what() << "; covariance omitted\n";
        }
        emit(fit_json(r, a.scale).dump(2) + "\n", a.output, out);
        return static_cast<int>(ok);
    });
}

struct AreArgs {
    std::string model = "normal";
    std::string theta = "0";
    std::string sigma = "1";
    std::string beta = "1";
    std::vector<std::string> schemes;
    bool long_format = false;
    std::string output;
};

inline int cmd_are(const AreArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Family f = parse_family(a.model);
        if (a.schemes.empty()) throw validation_error("at least one --scheme is required");
        std::vector<TrimmingScheme> schemes;
        for (const auto& s : a.schemes) schemes.push_back(parse_scheme(s));
        const auto th = parse_grid(a.theta), sg = parse_grid(a.sigma), be = parse_grid(a.beta);
        const bool fr = f == Family::Frechet;
        // the varying axis gives the table columns
        std::string axis = "sigma";
        if (fr ? be.size() > 1 : th.size() > 1) axis = fr ? "beta" : "theta";
        const auto& first = fr ? be : th;
        if (first.size() > 1 && sg.size() > 1) throw validation_error("vary either sigma or the other parameter, not both");
        std::vector<Params> grid;
        std::vector<double> column;
        if (axis == "sigma") {
            for (double v : sg) {
                grid.push_back({fr ? 0.0 : th.front(), v, fr ? be.front() : 1.0});
                column.push_back(v);
            }
        } else {
            for (double v : first) {
                grid.push_back({fr ? 0.0 : v, sg.front(), fr ? v : 1.0});
                column.push_back(v);
            }
        }
        std::ostringstream os;
        os << std::setprecision(10);
        if (a.long_format) {
            os << "a1,b1,a2,b2," << (fr ? "beta" : "theta") << ",sigma,det_mle,det_T,are,singular\n";
            for (const auto& s : schemes)
                for (const auto& p : grid) {
                    const auto r = are(f, p, s);
                    os << s.a1 << "," << s.b1 << "," << s.a2 << "," << s.b2 << "," << (fr ? p.beta : p.theta) << ","
                       << p.sigma << "," << r.det_mle << "," << r.det_T << "," << std::fixed << std::setprecision(6)
                       << r.value << std::defaultfloat << std::setprecision(10) << "," << (r.singular ? 1 : 0)
                       << "\n";
                }
        } else {
            os << "a1,b1,a2,b2";
            for (double v : column) os << "," << axis << "=" << v;
            os << "\n";
            for (const auto& s : schemes) {
                os << s.a1 << "," << s.b1 << "," << s.a2 << "," << s.b2;
                for (const auto& p : grid) {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, ",%.3f", are(f, p, s).value);
                    os << buf;
                }
                os << "\n";
            }
        }
        emit(os.str(), a.output, out);
        return static_cast<int>(ok);
    });
}

/// Schemes of the Monte Carlo tables, in table order.
inline std::vector<TrimmingScheme> study_schemes() {
    const double rows[][4] = {{0, 0, 0, 0},          {0, .05, 0, .05},      {0, .10, 0, .10},  {.10, 0, .05, .05},
                              {.05, .05, 0, .10},    {.10, .10, 0, .20},    {.15, .15, 0, .30}, {0, .10, .05, .05},
                              {.05, .05, .10, 0},    {.10, .10, .20, 0},    {.15, .15, .30, 0}, {.25, .50, .50, .25}};
    std::vector<TrimmingScheme> out;
    for (const auto& r : rows) out.push_back(validate_scheme(r[0], r[1], r[2], r[3]));
    return out;
}

struct SimulateArgs {
    std::string model = "normal";
    double theta = 0.1, sigma = 5.0, beta = 5.0;
    std::string n = "100,1000";
    std::size_t replicates = 2000;
    std::size_t repetitions = 3;
    std::uint64_t seed = 20240601;
    std::vector<std::string> schemes; ///< empty: the table schemes
    unsigned threads = 0;
    std::string output;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        StudyConfig cfg;
        cfg.family = parse_family(a.model);
        cfg.truth = {cfg.family == Family::Frechet ? 0.0 : a.theta, a.sigma, a.beta};
        validate(cfg.family, cfg.truth);
        cfg.replicates = a.replicates;
        cfg.repetitions = a.repetitions;
        cfg.seed = a.seed;
        cfg.workers = a.threads;
        if (a.schemes.empty()) cfg.schemes = study_schemes();
        for (const auto& s : a.schemes) cfg.schemes.push_back(parse_scheme(s));
        std::vector<std::size_t> sizes;
        for (double v : parse_grid(a.n)) {
            if (!(v >= 1.0) || v != std::floor(v)) throw validation_error("sample sizes must be positive integers");
            sizes.push_back(static_cast<std::size_t>(v));
        }
        std::ostringstream os;
        bool all_ok = true;
        std::string diag;
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            cfg.n = sizes[k];
            const auto r = run_study(cfg);
            write_study_csv(os, r, k == 0);
            if (!r.ok) {
                all_ok = false;
                diag += "n=" + std::to_string(cfg.n) + ": " + r.diagnostic + "\n";
            }
        }
        emit(os.str(), a.output, out);
        if (!all_ok) {
            err << "study failed: " << diag;
            return static_cast<int>(estimation_failed);
        }
        return static_cast<int>(ok);
    });
}

/// Trimming schemes of the real-data table; proportions in units of 1/30.
inline std::vector<std::pair<std::string, std::string>> gof_schemes() {
    return {{"T1", "0,0,0,0"},           {"T2", "0,1/30,0,1/30"},       {"T3", "1/30,1/30,1/30,1/30"},
            {"T4", "7/30,7/30,7/30,7/30"}, {"T5", "0,0,0,1/30"},         {"T6", "1/30,1/30,0,2/30"},
            {"T7", "1/30,1/30,2/30,0"},  {"T8", "0,3/30,0,0"},          {"T9", "4/30,5/30,5/30,2/30"},
            {"T10", "7/30,15/30,15/30,7/30"}};
}

struct GofArgs {
    std::vector<std::string> models = {"lognormal", "frechet"};
    std::string data;
    double scale = 1e9;
    double modify = 10.0; ///< factor applied to the maximum for the modified dataset; 0 disables
    std::vector<std::string> schemes; ///< empty: the default ten; "label=a1,b1,a2,b2" or "a1,b1,a2,b2"
    std::string output;
    bool json = false;
};

inline int cmd_gof(const GofArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::vector<Family> fams;
        for (const auto& m : a.models) fams.push_back(parse_family(m));
        if (!(a.scale > 0.0)) throw validation_error("--scale must be positive");
        std::vector<std::pair<std::string, TrimmingScheme>> schemes;
        if (a.schemes.empty()) {
            for (const auto& [label, spec] : gof_schemes()) schemes.emplace_back(label, parse_scheme(spec));
        } else {
            for (const auto& s : a.schemes) {
                const auto eq = s.find('=');
                if (eq == std::string::npos)
                    schemes.emplace_back(s, parse_scheme(s));
                else
                    schemes.emplace_back(s.substr(0, eq), parse_scheme(s.substr(eq + 1)));
            }
        }
        auto original = read_column_csv(a.data);
        for (auto& x : original) x *= a.scale;
        std::vector<std::pair<DatasetTag, std::vector<double>>> sets = {{DatasetTag::Original, original}};
        if (a.modify > 0.0) sets.emplace_back(DatasetTag::Modified, modify_dataset(original, a.modify));

        std::ostringstream os;
        nlohmann::json reports = nlohmann::json::array();
        if (!a.json) os << "dataset,model,estimator,a1,b1,a2,b2,est1,est2,FIT,AIC,BIC,branch\n";
        for (const auto& [tag, data] : sets) {
            for (Family f : fams) {
                auto row = [&](const std::string& label, const std::optional<TrimmingScheme>& s, const Params& p,
                               const std::string& branch) {
                    const auto g = gof_report(f, label, p, data, tag);
                    const double e1 = f == Family::Frechet ? p.beta : p.theta;
                    const double e2 = f == Family::Frechet ? p.sigma / a.scale : p.sigma;
                    if (a.json) {
                        nlohmann::json j{{"dataset", std::string(to_string(tag))},
                                         {"model", std::string(to_string(f))},
                                         {"estimator", label},
                                         {"n", g.n},
                                         {"FIT", g.fit},
                                         {"AIC", g.ic.aic},
                                         {"BIC", g.ic.bic},
                                         {"loglik", g.ic.loglik},
                                         {"branch", branch}};
                        if (f == Family::Frechet)
                            j["estimates"] = {{"beta", e1}, {"sigma_star", e2}, {"sigma", p.sigma}};
                        else
                            j["estimates"] = {{"theta", e1}, {"sigma", e2}};
                        if (s) j["scheme"] = scheme_json(*s);
                        reports.push_back(j);
                        return;
                    }
                    char buf[512];
                    std::string sc = ",,,";
                    if (s) {
                        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g", s->a1, s->b1, s->a2, s->b2);
                        sc = buf;
                    }
                    std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%.4f,%.4f,%.4f,%.1f,%.1f,%s\n",
                                  std::string(to_string(tag)).c_str(), std::string(to_string(f)).c_str(),
                                  label.c_str(), sc.c_str(), e1, e2, g.fit, g.ic.aic, g.ic.bic, branch.c_str());
                    os << buf;
                };
                row("MLE", std::nullopt, mle(f, data), "");
                for (const auto& [label, s] : schemes) {
                    try {
                        const auto r = fit(f, data, s);
                        row(label, s, r.params, std::string(to_string(r.branch)));
                    } catch (const estimation_error& e) {
                        err << "warning: " << label << " (" << to_string(f) << ", " << to_string(tag)
                            << "): " << e.what() << "\n";
                    }
                }
            }
        }
        emit(a.json ? reports.dump(2) + "\n" : os.str(), a.output, out);
        return static_cast<int>(ok);
    });
}

} // namespace mtm::cli
