#pragma once

#include <string>
#include <vector>

#include "taskframe/geometry.hpp"

namespace taskframe {

// One preprocessed demonstration. All series share the time base.
// Poses are T_tl^w (tool w.r.t. world). World screws have their moment about
// the world origin, tool screws about the tool origin.
struct Trial {
  std::string name;
  std::vector<double> times;
  std::vector<Pose> poses;
  std::vector<Screw> twists_world;
  std::vector<Screw> wrenches_world;
  std::vector<Screw> twists_tool;
  std::vector<Screw> wrenches_tool;

  size_t size() const { return times.size(); }
  const std::vector<Screw>& Twists(FrameTag view) const {
    return view == FrameTag::kWorld ? twists_world : twists_tool;
  }
  const std::vector<Screw>& Wrenches(FrameTag view) const {
    return view == FrameTag::kWorld ? wrenches_world : wrenches_tool;
  }
  // Checks equal lengths across all series.
  void Validate() const;
};

struct TrialBatch {
  std::vector<Trial> trials;
  bool gravity_compensated = true;

  size_t TotalSamples() const;
  // Concatenation over all trials, in trial order.
  std::vector<Screw> ConcatTwists(FrameTag view) const;
  std::vector<Screw> ConcatWrenches(FrameTag view) const;
  std::vector<Pose> ConcatPoses() const;
};

}  // namespace taskframe
