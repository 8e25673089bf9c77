#pragma once

#include "kirchwell/report.hpp"

namespace kw {

struct CheckResult {
    std::string id;
    std::string description;
    bool pass = false;
    std::string measured;
    double seconds = 0.0;
};

struct SuiteResult {
    std::string suite;
    std::vector<CheckResult> checks;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Suites: grid, eigen, functional, constants, thm1, thm2, thm3, branch, all.
SuiteResult verify_suite(const std::string& name, uint64_t seed = 0);

const std::vector<std::string>& verify_suite_names();

Json suite_to_json(const SuiteResult& s, uint64_t seed);
std::string suite_to_text(const SuiteResult& s);

}  // namespace kw
