#pragma once

#include <string>
#include <vector>

namespace crdlab {

/// One audited inequality: lhs measured, rhs allowed, pass = lhs <= rhs + slack.
struct AuditResult {
    std::string check;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    bool pass = false;
};

inline bool all_pass(const std::vector<AuditResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

}  // namespace crdlab
