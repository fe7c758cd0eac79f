#pragma once

#include <string>
#include <vector>

namespace ivlab_tests {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Runs every spec invariant as a property check. A prefix like "estimator."
// restricts the run to one module's checks.
std::vector<CheckResult> run_invariant_suite(const std::string& prefix = "");

}  // namespace ivlab_tests
