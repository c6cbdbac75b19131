#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "irbridge/path.hpp"
#include "irbridge/transition.hpp"

namespace irbridge {

/// Generative-time policy for pairing bridge iterations with generative
/// timesteps. Times are normalized to [0, 1].
struct SchedulePolicy {
  enum class Kind { one_stage, two_stage, additive };
  Kind kind = Kind::one_stage;

  // one_stage / two_stage
  double j_max = 0.85;
  double j_break = 0.55;
  double break_fraction = 0.5;

  // additive: offset above the critical curve, linear in the iteration index
  // (constant when the endpoints coincide).
  double offset_from = 0.1;
  double offset_to = 0.1;

  static SchedulePolicy one_stage(double j_max);
  static SchedulePolicy two_stage(double j_max, double j_break, double break_fraction);
  static SchedulePolicy additive(double offset_from, double offset_to);
};

/// The eight predefined policies, "setting1" .. "setting8":
///   1-2  one-stage linear decay from 0.850 / 0.550
///   3-5  two-stage 0.850 -> 0.550 -> j_min, break at 50% / 25% / 75% of the budget
///   6-7  additive constant offsets 0.100 / 0.300
///   8    additive offset ramp 0.300 -> 0.100
SchedulePolicy preset(std::string_view name);

struct ScheduleStep {
  double i = 0.0;  // bridge time, strictly decreasing over the schedule
  double j = 0.0;  // paired generative time
};

struct TimestepSchedule {
  std::vector<ScheduleStep> steps;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
  /// Bridge time the reverse transition of step k targets (0 after the last).
  double next_i(std::size_t k) const { return k + 1 < steps.size() ? steps[k + 1].i : 0.0; }
};

struct ScheduleBuildOptions {
  double i_start = 1.0;
  double j_min = 0.001;
  double feasibility_tol = 1e-9;
};

/// Bridge times run linearly from i_start toward 0 (the k-th of n steps sits
/// at i_start * (n - k) / n; the final reverse target is exactly 0).
/// Generative times follow the policy; additive policies are clamped to
/// [0, 1] and rejected when any step lands below the critical curve.
TimestepSchedule build_schedule(const SchedulePolicy& policy, int n_steps, const Path& bridge,
                                const Path& gen, const ScheduleBuildOptions& options = {});

struct StepCheck {
  double i = 0.0;
  double j = 0.0;
  bool source_degenerate = false;  // bridge sigma == 0 at i (skip rule)
  bool forward_ok = false;
  bool reverse_ok = false;
  double critical = 0.0;         // critical timestep of the bridge state (NaN if none)
  double forward_margin = 0.0;   // j - critical, in normalized time (NaN if none)
  double reverse_margin = 0.0;   // beta at sigma=0 for the reverse step
};

struct FeasibilityReport {
  std::vector<StepCheck> steps;
  int forward_violations = 0;
  int reverse_violations = 0;
  int degenerate_steps = 0;

  /// Valid outright, or valid once a degenerate first step is skipped.
  bool ok() const;
};

FeasibilityReport validate_schedule(const TimestepSchedule& schedule, const Path& bridge,
                                    const Path& gen);

/// CSV round-trip (`index,i,j`; %.17g cells, exact to the bit).
std::string schedule_to_csv(const TimestepSchedule& schedule);
void write_schedule_csv(const TimestepSchedule& schedule, const std::string& path);
TimestepSchedule read_schedule_csv(const std::string& path);

}  // namespace irbridge
