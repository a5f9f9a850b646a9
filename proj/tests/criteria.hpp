#pragma once

// Acceptance criteria shared by the acceptance binary and `mlab oracle`.

#include <functional>
#include <string>
#include <vector>

namespace mlab {

struct CriterionResult {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  std::string key;
  std::string title;
  double budget_seconds = 0.0;
  std::function<CriterionResult()> body;
};

const std::vector<Criterion>& criteria();
// Runs the body, times it and fails the result when the budget is exceeded.
CriterionResult run_criterion(const Criterion& c);
std::string format_result(const Criterion& c, const CriterionResult& r);

// Measurements behind the pinned constants, printed by `mlab oracle calibrate`.
std::string calibration_report();

}  // namespace mlab
