#include <catch_amalgamated.hpp>

#include "support/checks.hpp"

using namespace mtm;

namespace {

void require_pass(const checks::Outcome& r) {
    INFO(r.detail);
    CHECK(r.pass);
}

} // namespace

TEST_CASE("moment constant inequalities hold on random schemes") {
    require_pass(checks::inequality_suite(ModelKind::LocationScale, 60, 11));
    require_pass(checks::inequality_suite(ModelKind::Frechet, 60, 12));
}

TEST_CASE("population moments invert exactly") { require_pass(checks::exact_recovery(1e-8)); }

TEST_CASE("analytic Jacobian matches finite differences") { require_pass(checks::jacobian_vs_fd(1e-6)); }

TEST_CASE("branch identities") { require_pass(checks::branch_identities(1e-10)); }

TEST_CASE("Lambda constants are parameter free") {
    require_pass(checks::lambda_parameter_independence(Family::Normal, 1e-12));
    require_pass(checks::lambda_parameter_independence(Family::Frechet, 1e-12));
}

TEST_CASE("random trimmed samples never reorder the kept block") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const auto s = checks::random_scheme(rng, k % 2 ? Ordering::Condition8 : Ordering::Condition12);
        const std::size_t n = 50 + static_cast<std::size_t>(k);
        const auto r1 = kept_range(n, s.a1, s.b1), r2 = kept_range(n, s.a2, s.b2);
        CHECK(r1.first + r1.count <= n);
        CHECK(r2.first + r2.count <= n);
        CHECK(r1.count >= 1);
    }
}
