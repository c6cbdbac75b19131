#include "irbridge/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "irbridge/csv.hpp"

namespace irbridge {

SchedulePolicy SchedulePolicy::one_stage(double j_max) {
  SchedulePolicy p;
  p.kind = Kind::one_stage;
  p.j_max = j_max;
  return p;
}

SchedulePolicy SchedulePolicy::two_stage(double j_max, double j_break, double break_fraction) {
  SchedulePolicy p;
  p.kind = Kind::two_stage;
  p.j_max = j_max;
  p.j_break = j_break;
  p.break_fraction = break_fraction;
  return p;
}

SchedulePolicy SchedulePolicy::additive(double offset_from, double offset_to) {
  SchedulePolicy p;
  p.kind = Kind::additive;
  p.offset_from = offset_from;
  p.offset_to = offset_to;
  return p;
}

SchedulePolicy preset(std::string_view name) {
  if (name == "setting1") return SchedulePolicy::one_stage(0.850);
  if (name == "setting2") return SchedulePolicy::one_stage(0.550);
  if (name == "setting3") return SchedulePolicy::two_stage(0.850, 0.550, 0.50);
  if (name == "setting4") return SchedulePolicy::two_stage(0.850, 0.550, 0.25);
  if (name == "setting5") return SchedulePolicy::two_stage(0.850, 0.550, 0.75);
  if (name == "setting6") return SchedulePolicy::additive(0.100, 0.100);
  if (name == "setting7") return SchedulePolicy::additive(0.300, 0.300);
  if (name == "setting8") return SchedulePolicy::additive(0.300, 0.100);
  throw std::invalid_argument("unknown schedule preset: " + std::string(name));
}

namespace {

double policy_offset(const SchedulePolicy& p, int k, int n) {
  const double u = n <= 1 ? 0.0 : static_cast<double>(k) / (n - 1);
  return p.offset_from + (p.offset_to - p.offset_from) * u;
}

}  // namespace

TimestepSchedule build_schedule(const SchedulePolicy& policy, int n_steps, const Path& bridge,
                                const Path& gen, const ScheduleBuildOptions& options) {
  if (n_steps < 2) throw std::invalid_argument("build_schedule: n_steps must be >= 2");
  TimestepSchedule schedule;
  schedule.steps.resize(static_cast<std::size_t>(n_steps));
  for (int k = 0; k < n_steps; ++k)
    schedule.steps[static_cast<std::size_t>(k)].i =
        options.i_start * static_cast<double>(n_steps - k) / n_steps;

  switch (policy.kind) {
    case SchedulePolicy::Kind::one_stage: {
      for (int k = 0; k < n_steps; ++k) {
        const double u = static_cast<double>(k) / (n_steps - 1);
        schedule.steps[static_cast<std::size_t>(k)].j =
            policy.j_max + (options.j_min - policy.j_max) * u;
      }
      break;
    }
    case SchedulePolicy::Kind::two_stage: {
      const int m = std::clamp(static_cast<int>(std::lround(policy.break_fraction * n_steps)), 1,
                               n_steps - 1);
      for (int k = 0; k < n_steps; ++k) {
        double j;
        if (k <= m) {
          const double u = static_cast<double>(k) / m;
          j = policy.j_max + (policy.j_break - policy.j_max) * u;
        } else {
          const double u = static_cast<double>(k - m) / (n_steps - 1 - m);
          j = policy.j_break + (options.j_min - policy.j_break) * u;
        }
        schedule.steps[static_cast<std::size_t>(k)].j = j;
      }
      break;
    }
    case SchedulePolicy::Kind::additive: {
      for (int k = 0; k < n_steps; ++k) {
        auto& step = schedule.steps[static_cast<std::size_t>(k)];
        const PathCoefficients src = bridge.coeffs(step.i);
        if (src.sigma == 0.0) {
          // Degenerate source (pinned bridge endpoint); the engine skips this
          // step, so pair it with the top of the generative range.
          step.j = 1.0;
          continue;
        }
        const CriticalResult crit = critical_timestep(src, gen);
        const double offset = policy_offset(policy, k, n_steps);
        double j;
        if (crit.found()) {
          j = std::clamp(crit.value + offset, 0.0, 1.0);
        } else if (crit.status == CriticalResult::Status::above_grid) {
          j = 1.0;  // best available; feasibility is checked below
        } else {
          j = std::clamp(offset, 0.0, 1.0);
        }
        if (forward_margin(src, gen.coeffs(j)) < -options.feasibility_tol)
          throw TransitionError(TransitionErrc::below_critical,
                                "additive policy lands below the critical curve");
        step.j = j;
      }
      break;
    }
  }
  return schedule;
}

bool FeasibilityReport::ok() const {
  if (forward_violations > 0 || reverse_violations > 0) return false;
  if (degenerate_steps == 0) return true;
  // A degenerate first step is the documented skip; anywhere else is fatal.
  return degenerate_steps == 1 && !steps.empty() && steps.front().source_degenerate;
}

FeasibilityReport validate_schedule(const TimestepSchedule& schedule, const Path& bridge,
                                    const Path& gen) {
  FeasibilityReport report;
  report.steps.resize(schedule.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    StepCheck& check = report.steps[k];
    check.i = schedule.steps[k].i;
    check.j = schedule.steps[k].j;
    const PathCoefficients src = bridge.coeffs(check.i);
    const PathCoefficients dst = gen.coeffs(check.j);
    if (src.sigma == 0.0) {
      check.source_degenerate = true;
      check.forward_ok = false;
      check.critical = nan;
      check.forward_margin = nan;
      ++report.degenerate_steps;
    } else {
      check.forward_ok = forward_margin(src, dst) >= -1e-12 * std::max(1.0, dst.sigma * src.f);
      const CriticalResult crit = critical_timestep(src, gen);
      check.critical = crit.found() ? crit.value : nan;
      check.forward_margin = crit.found() ? check.j - crit.value : nan;
      if (!check.forward_ok) ++report.forward_violations;
    }
    // Reverse feasibility targets the next step's bridge time (0 at the end):
    // beta at sigma=0 must be nonnegative there.
    const PathCoefficients next = bridge.coeffs(schedule.next_i(k));
    if (dst.sigma == 0.0) {
      check.reverse_ok = next.sigma == 0.0 && next.f == 1.0;
      check.reverse_margin = nan;
    } else {
      const double beta = next.f - (next.sigma / dst.sigma) * dst.f;
      check.reverse_margin = beta;
      check.reverse_ok = beta >= -1e-12 * std::max(1.0, next.f);
    }
    if (!check.reverse_ok && !(check.source_degenerate && k == 0)) ++report.reverse_violations;
  }
  return report;
}

std::string schedule_to_csv(const TimestepSchedule& schedule) {
  CsvWriter csv({"index", "i", "j"});
  for (std::size_t k = 0; k < schedule.size(); ++k)
    csv.add_row({static_cast<double>(k), schedule.steps[k].i, schedule.steps[k].j});
  return csv.str();
}

void write_schedule_csv(const TimestepSchedule& schedule, const std::string& path) {
  CsvWriter csv({"index", "i", "j"});
  for (std::size_t k = 0; k < schedule.size(); ++k)
    csv.add_row({static_cast<double>(k), schedule.steps[k].i, schedule.steps[k].j});
  csv.write_file(path);
}

TimestepSchedule read_schedule_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header != std::vector<std::string>{"index", "i", "j"})
    throw std::runtime_error("schedule CSV must have header index,i,j: " + path);
  TimestepSchedule schedule;
  schedule.steps.reserve(table.rows.size());
  for (const auto& row : table.rows) schedule.steps.push_back({row[1], row[2]});
  for (std::size_t k = 1; k < schedule.steps.size(); ++k)
    if (!(schedule.steps[k].i < schedule.steps[k - 1].i))
      throw std::runtime_error("schedule CSV: bridge times must be strictly decreasing");
  return schedule;
}

}  // namespace irbridge
