#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace irbridge {

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  int threads = 0;
  /// Re-runs the stochastic criteria with a different worker count and
  /// compares reports byte for byte (the determinism criterion). Roughly
  /// doubles the runtime.
  bool check_determinism = true;
};

struct CriterionResult {
  int index = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  std::uint64_t seed = 0;
  std::string config_hash;

  bool all_pass() const;
  std::string to_text() const;
};

/// Runs every acceptance criterion at its pinned tolerance and returns one
/// pass/fail line per criterion. Fully deterministic in (seed); independent
/// of the worker count.
AcceptanceReport run_acceptance(const AcceptanceOptions& options);

}  // namespace irbridge
