#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "taskframe/trajectory.hpp"

namespace taskframe {

// Trial CSV: '#' header lines frame_pose=w->tl, wrench_frame=<w|tl>,
// wrench_point=<x y z>, then the column line
// t,px,py,pz,qw,qx,qy,qz,fx,fy,fz,mx,my,mz and one row per sample.
// The wrench is converted to world coordinates about the world origin.
// Parse errors carry the source name and line number.
DemoTrial ReadTrialCsv(std::istream& in, const std::string& source);
DemoTrial ReadTrialCsvFile(const std::string& path);

// Writes world-frame wrenches about the world origin, full precision.
// `comment` becomes a free-text header line and must not contain '='.
void WriteTrialCsv(std::ostream& out, const DemoTrial& trial, const std::string& comment = "");
void WriteTrialCsvFile(const std::string& path, const DemoTrial& trial,
                       const std::string& comment = "");

}  // namespace taskframe
