#pragma once

// Named invariant suites run against one law.

#include <cstdint>
#include <string>
#include <vector>

#include "branchkit/law.hpp"

namespace branchkit {

struct Check {
  std::string name;
  bool passed = false;
  bool skipped = false;
  double value = 0.0;      // worst error, or p-value for statistical checks
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint64_t replicates = 100000;
  double horizon = 1.0;  // mc-agreement
};

struct VerifyReport {
  std::string suite;
  std::vector<Check> checks;
  bool all_passed() const;
};

/// Suites: semigroup, refined-equation, route-agreement, mc-agreement, all.
/// Throws Parse for an unknown suite name.
VerifyReport run_suite(const OffspringLaw& law, const std::string& suite,
                       const VerifyOptions& opts = {});

std::string to_json(const VerifyReport& report);

}  // namespace branchkit
