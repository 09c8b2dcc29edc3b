#pragma once

#include <cstdint>
#include <string>

namespace expbias::bias {

enum class ScheduleKind { StepAtT0, Reciprocal, Constant };

/// Weight beta(t) given to the last observation against the expectation
/// anchor at rollout step t >= 1.
struct BetaSchedule {
  ScheduleKind kind = ScheduleKind::StepAtT0;
  std::int64_t threshold = 20; // StepAtT0
  double value = 1.0;          // Constant

  static BetaSchedule step_at(std::int64_t t0);
  static BetaSchedule reciprocal();
  static BetaSchedule constant(double value);

  /// "step:<t0>", "reciprocal" or "constant:<v>".
  std::string describe() const;
  static BetaSchedule parse(const std::string &text);
};

/// StepAtT0: 1 for t < t0, else 0. Reciprocal: 1/t. Constant: value.
double beta_value(const BetaSchedule &schedule, std::int64_t t);

} // namespace expbias::bias
