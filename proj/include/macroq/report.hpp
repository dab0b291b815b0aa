#pragma once

#include <map>
#include <string>

namespace macroq {

// Uniform result carrier for every measure: the headline number, the route
// that produced it, a nonnegative accuracy estimate, and whatever knobs the
// route wants to disclose (truncations, node counts, optimizer settings).
struct MeasureReport {
  double value = 0.0;
  std::string method;
  double error_estimate = 0.0;
  std::map<std::string, double> metadata;
};

}  // namespace macroq
