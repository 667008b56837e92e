#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "taskframe/json_util.hpp"
#include "taskframe/synthetic.hpp"

namespace taskframe {

// Process exit codes.
enum ExitCode { kExitOk = 0, kExitInternal = 1, kExitInput = 2, kExitNumerical = 3 };

// Entry point of the command-line tool; never throws.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Derived-vs-reference differences for one anchor.
struct FrameComparison {
  double origin_distance;  // m
  double axis_angle;       // rad, to the closest frame axis
  double common_normal;    // m, between the derived and reference axis lines
};
FrameComparison CompareFrame(const TaskFrame& frame, const GroundTruth& truth, bool motion);

// Human-readable candidate tables; adds error columns when truth is given.
std::string RenderReport(const Json& report, const std::optional<GroundTruth>& truth);

}  // namespace taskframe
