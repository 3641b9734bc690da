#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emsa/network.hpp"

// Executable form of the theory's guarantees: derivative correctness, the
// MSA/back-propagation equivalence, mu_k nonnegativity and two-path
// agreement, the co-state/backprop identity, the Gronwall-type co-state
// bound, and the error-estimate audit. The CLI's diag subcommand prints one
// row per check; the corruption hooks exist so tests can verify that the
// checks actually catch defects.

namespace emsa {

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst_err = 0.0;  // worst relative error or margin, check-specific
  std::string detail;
};

struct InvariantSuiteOptions {
  std::uint64_t seed = 0;
  int instances_per_kind = 5;  // random instances per layer kind in derivative checks
  // Negative-control hooks (tests only): flip the sign of the co-state
  // recursion's pullback, or scale the audited co-states.
  bool corrupt_pullback_sign = false;
  double corrupt_costate_scale = 1.0;
};

std::vector<CheckResult> run_invariant_suite(const InvariantSuiteOptions& options);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace emsa
