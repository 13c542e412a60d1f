#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace podrhc {

struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;  // worst observed mismatch / violation
    double tol = 0.0;
    std::string detail;
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return !checks.empty();
    }
};

/// Oracle suites on small fixed instances:
///   gradients   - finite-difference check of the smooth cost gradient
///   prox        - squared-l1 prox against a bisection oracle
///   dualnorm    - V' dual norm against dense-inverse evaluation
///   rigor       - all estimators upper-bound truth errors (randomized)
///   sandwich    - index bounds bracket the exact index in closed loop
///   equivalence - estimator/error co-decay over a basis-size sweep
SuiteReport run_validate_suite(const std::string& suite, std::uint64_t seed);

std::vector<std::string> validate_suite_names();

/// Rigor sweep with a configurable case count (the acceptance criterion
/// runs 500 cases; the default validate suite runs fewer).
SuiteReport run_rigor_suite(std::uint64_t seed, int n_cases);

}  // namespace podrhc
