#include "expbias/bias/schedule.hpp"

#include "expbias/data/csv.hpp"
#include "expbias/error.hpp"

#include <charconv>

namespace expbias::bias {

BetaSchedule BetaSchedule::step_at(std::int64_t t0) {
  require(t0 >= 1, ErrorKind::InvalidConfiguration, "step schedule threshold must be >= 1");
  BetaSchedule s;
  s.kind = ScheduleKind::StepAtT0;
  s.threshold = t0;
  return s;
}

BetaSchedule BetaSchedule::reciprocal() {
  BetaSchedule s;
  s.kind = ScheduleKind::Reciprocal;
  return s;
}

BetaSchedule BetaSchedule::constant(double value) {
  require(value >= 0.0 && value <= 1.0, ErrorKind::InvalidConfiguration, "constant beta must lie in [0,1]");
  BetaSchedule s;
  s.kind = ScheduleKind::Constant;
  s.value = value;
  return s;
}

std::string BetaSchedule::describe() const {
  switch (kind) {
  case ScheduleKind::StepAtT0:
    return "step:" + std::to_string(threshold);
  case ScheduleKind::Reciprocal:
    return "reciprocal";
  case ScheduleKind::Constant:
    return "constant:" + data::format_double(value);
  }
  return "";
}

BetaSchedule BetaSchedule::parse(const std::string &text) {
  if (text == "reciprocal") {
    return reciprocal();
  }
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "step" && !arg.empty()) {
    std::int64_t t0 = 0;
    const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), t0);
    require(res.ec == std::errc() && res.ptr == arg.data() + arg.size(), ErrorKind::InvalidConfiguration,
            "bad step threshold in schedule '" + text + "'");
    return step_at(t0);
  }
  if (head == "constant" && !arg.empty()) {
    double v = 0.0;
    const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), v);
    require(res.ec == std::errc() && res.ptr == arg.data() + arg.size(), ErrorKind::InvalidConfiguration,
            "bad value in schedule '" + text + "'");
    return constant(v);
  }
  raise(ErrorKind::InvalidConfiguration,
        "unknown beta schedule '" + text + "' (expected step:<t0>, reciprocal or constant:<v>)");
}

double beta_value(const BetaSchedule &schedule, std::int64_t t) {
  require(t >= 1, ErrorKind::InvalidInput, "beta(t) is defined for t >= 1, got " + std::to_string(t));
  switch (schedule.kind) {
  case ScheduleKind::StepAtT0:
    return t < schedule.threshold ? 1.0 : 0.0;
  case ScheduleKind::Reciprocal:
    return 1.0 / static_cast<double>(t);
  case ScheduleKind::Constant:
    return schedule.value;
  }
  return 0.0;
}

} // namespace expbias::bias
