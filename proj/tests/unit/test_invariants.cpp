#include <doctest.h>

#include "emsa/invariants.hpp"

using namespace emsa;

namespace {

const CheckResult& find(const std::vector<CheckResult>& results, const std::string& name) {
  for (const CheckResult& r : results) {
    if (r.name == name) return r;
  }
  FAIL("missing check: ", name);
  static CheckResult dummy;
  return dummy;
}

}  // namespace

TEST_CASE("pristine build passes the whole invariant suite") {
  InvariantSuiteOptions opts;
  opts.seed = 8;
  opts.instances_per_kind = 3;
  const auto results = run_invariant_suite(opts);
  for (const CheckResult& r : results) {
    CHECK_MESSAGE(r.pass, r.name, ": ", r.detail, " (worst ", r.worst_err, ")");
  }
  CHECK(all_passed(results));
}

TEST_CASE("an injected pullback sign error is caught by the costate identity check") {
  InvariantSuiteOptions opts;
  opts.seed = 8;
  opts.instances_per_kind = 2;
  opts.corrupt_pullback_sign = true;
  const auto results = run_invariant_suite(opts);
  CHECK_FALSE(find(results, "costate_identity").pass);
  CHECK_FALSE(all_passed(results));
}

TEST_CASE("a corrupted costate scale is caught by the Gronwall audit") {
  InvariantSuiteOptions opts;
  opts.seed = 8;
  opts.instances_per_kind = 2;
  opts.corrupt_costate_scale = 10.0;
  const auto results = run_invariant_suite(opts);
  CHECK_FALSE(find(results, "costate_norm_bound").pass);
}
