#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "irbridge/path.hpp"
#include "irbridge/schedule.hpp"

using namespace irbridge;

namespace {

BridgeParams default_params() {
  BridgeParams p;
  p.lambda = 2.0;
  p.theta_bar_total = 2.0;
  p.horizon = 1.0;
  return p;
}

DdpmPath default_gen() { return DdpmPath(DdpmSchedule::linear(1000), "ddpm-linear"); }

}  // namespace

TEST_CASE("presets carry the documented parameters") {
  CHECK(preset("setting1").j_max == 0.850);
  CHECK(preset("setting2").j_max == 0.550);
  CHECK(preset("setting3").kind == SchedulePolicy::Kind::two_stage);
  CHECK(preset("setting3").j_break == 0.550);
  CHECK(preset("setting6").offset_from == 0.100);
  CHECK(preset("setting6").offset_to == 0.100);
  CHECK(preset("setting7").offset_from == 0.300);
  CHECK(preset("setting8").offset_from == 0.300);
  CHECK(preset("setting8").offset_to == 0.100);
  CHECK_THROWS_AS(preset("setting9"), std::invalid_argument);
}

TEST_CASE("one-stage schedules: linear grids with exact endpoints") {
  const IrSdePath bridge(default_params());
  const DdpmPath gen = default_gen();
  const TimestepSchedule s = build_schedule(preset("setting1"), 100, bridge, gen);
  REQUIRE(s.size() == 100);
  CHECK(s.steps.front().j == 0.850);
  CHECK(s.steps.front().i == 1.0);
  CHECK(s.steps.back().j == doctest::Approx(0.001).epsilon(1e-12));
  for (std::size_t k = 1; k < s.size(); ++k) {
    CHECK(s.steps[k].i < s.steps[k - 1].i);
    CHECK(s.steps[k].j < s.steps[k - 1].j);
  }
  CHECK(s.next_i(s.size() - 1) == 0.0);
}

TEST_CASE("two-stage schedules bend at the breakpoint") {
  const IrSdePath bridge(default_params());
  const DdpmPath gen = default_gen();
  const TimestepSchedule s = build_schedule(preset("setting3"), 100, bridge, gen);
  CHECK(s.steps.front().j == 0.850);
  CHECK(s.steps[50].j == doctest::Approx(0.550).epsilon(1e-12));
  CHECK(s.steps.back().j == doctest::Approx(0.001).epsilon(1e-12));
}

TEST_CASE("additive schedules ride the critical curve by the configured offset") {
  const IrSdePath bridge(default_params());
  const DdpmPath gen = default_gen();
  const TimestepSchedule s = build_schedule(preset("setting8"), 50, bridge, gen);
  // Unclamped steps sit exactly offset above the critical curve; the ramp
  // runs 0.3 down to 0.1.
  for (std::size_t k = 0; k < s.size(); ++k) {
    const CriticalResult crit = critical_timestep(bridge.coeffs(s.steps[k].i), gen);
    REQUIRE(crit.found());
    const double offset = 0.3 + (0.1 - 0.3) * static_cast<double>(k) / (s.size() - 1);
    if (crit.value + offset <= 1.0)
      CHECK(s.steps[k].j == doctest::Approx(crit.value + offset).epsilon(1e-9));
    else
      CHECK(s.steps[k].j == 1.0);
  }

  // Nonnegative offsets validate with zero forward violations.
  for (const char* name : {"setting6", "setting7", "setting8"}) {
    const TimestepSchedule sched = build_schedule(preset(name), 40, bridge, gen);
    const FeasibilityReport report = validate_schedule(sched, bridge, gen);
    INFO(name);
    CHECK(report.forward_violations == 0);
    CHECK(report.reverse_violations == 0);
    CHECK(report.ok());
  }

  // A negative offset dips below the critical curve and is rejected.
  CHECK_THROWS_AS(build_schedule(SchedulePolicy::additive(-0.2, -0.2), 40, bridge, gen),
                  TransitionError);
}

TEST_CASE("one-stage schedule starting below the critical curve flags the violation") {
  const IrSdePath bridge(default_params());
  const DdpmPath gen = default_gen();
  // The critical time of the bridge start sits near 0.73 here; 0.3 is far under it.
  const TimestepSchedule s = build_schedule(SchedulePolicy::one_stage(0.3), 40, bridge, gen);
  const FeasibilityReport report = validate_schedule(s, bridge, gen);
  CHECK_FALSE(report.steps.front().forward_ok);
  CHECK(report.forward_violations > 0);
  CHECK_FALSE(report.ok());
}

TEST_CASE("pinned bridge: degenerate first step is tolerated and flagged") {
  const GoubPath bridge(default_params());
  const DdpmPath gen = default_gen();
  const TimestepSchedule s = build_schedule(preset("setting8"), 50, bridge, gen);
  CHECK(s.steps.front().j == 1.0);
  const FeasibilityReport report = validate_schedule(s, bridge, gen);
  CHECK(report.degenerate_steps == 1);
  CHECK(report.steps.front().source_degenerate);
  CHECK(report.forward_violations == 0);
  CHECK(report.ok());
}

TEST_CASE("schedules are reproducible and empty schedules validate trivially") {
  const IrSdePath bridge(default_params());
  const DdpmPath gen = default_gen();
  const TimestepSchedule a = build_schedule(preset("setting4"), 64, bridge, gen);
  const TimestepSchedule b = build_schedule(preset("setting4"), 64, bridge, gen);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.steps[k].i == b.steps[k].i);
    CHECK(a.steps[k].j == b.steps[k].j);
  }

  const TimestepSchedule empty;
  const FeasibilityReport report = validate_schedule(empty, bridge, gen);
  CHECK(report.steps.empty());
  CHECK(report.ok());
}

TEST_CASE("schedule CSV round-trips bit-exactly") {
  const IrSdePath bridge(default_params());
  const DdpmPath gen = default_gen();
  const TimestepSchedule s = build_schedule(preset("setting5"), 33, bridge, gen);
  const auto path = std::filesystem::temp_directory_path() / "irbridge_sched_test.csv";
  write_schedule_csv(s, path.string());
  const TimestepSchedule back = read_schedule_csv(path.string());
  REQUIRE(back.size() == s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    CHECK(back.steps[k].i == s.steps[k].i);
    CHECK(back.steps[k].j == s.steps[k].j);
  }
  std::filesystem::remove(path);
}
