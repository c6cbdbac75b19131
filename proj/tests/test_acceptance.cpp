// Acceptance gate: runs every criterion at its pinned tolerance and prints
// one PASS/FAIL line per criterion. `irbridge verify all` drives the same
// code path from the command line.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "irbridge/acceptance.hpp"

using namespace irbridge;

TEST_CASE("acceptance criteria") {
  AcceptanceOptions options;
  options.seed = 7;
  options.threads = 0;
  options.check_determinism = true;
  const AcceptanceReport report = run_acceptance(options);
  std::fputs(report.to_text().c_str(), stdout);
  std::fflush(stdout);
  for (const auto& criterion : report.criteria) {
    INFO("[", criterion.index, "] ", criterion.name, ": ", criterion.detail);
    CHECK(criterion.pass);
  }
  CHECK(report.criteria.size() == 11);
  CHECK(report.all_pass());
}
