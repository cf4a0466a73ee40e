#pragma once

#include <functional>
#include <string>
#include <vector>

namespace vsl {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;     // measured values against the criterion
    double seconds = 0.0;
    double time_limit = 0.0;  // 0 when the check has no runtime bound
};

using CheckCallback = std::function<void(const CheckResult&)>;

/// The acceptance suite: one check per criterion, each including its runtime bound.
std::vector<CheckResult> acceptance_checks(const CheckCallback& on_result = {});

/// Small, fast versions of the same properties for smoke testing.
std::vector<CheckResult> quick_checks(const CheckCallback& on_result = {});

/// Fixed-width table of results.
std::string format_checks(const std::vector<CheckResult>& results);

}  // namespace vsl
