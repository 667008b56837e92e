#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taskframe/geometry.hpp"
#include "taskframe/json_util.hpp"
#include "taskframe/pipeline.hpp"
#include "taskframe/trajectory.hpp"

namespace taskframe {

enum class MotionKind { kPureRotation, kConstantTranslation };
enum class WrenchKind { kPureForce, kConstantMoment };

std::string_view ToString(MotionKind k);
std::string_view ToString(WrenchKind k);

// Anchor point and axis are coordinates in the anchor frame. A tool anchor
// is integrated with body twists, a world anchor with spatial twists.
//
// PureRotation: omega = omega_mag * e(t) * u(t) about the anchor, where
// e(t) = 0.75 - 0.25 cos(2 pi t / T) and u(t) wobbles around `axis` by
// wobble, three turns per trial.
// ConstantTranslation: the anchor moves at v_mag along `axis` (constant in
// anchor-frame coordinates) while the tool turns about it with a zero-mean
// angular velocity of amplitude omega_mag.
struct MotionSpec {
  MotionKind model = MotionKind::kPureRotation;
  FrameTag anchor_frame = FrameTag::kTool;
  Vec3 anchor = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double omega_mag = 0.5;  // rad/s
  double v_mag = 0.05;     // m/s
  double wobble = 0.15;    // rad
};

// PureForce: force of magnitude force_mag (0.85 + 0.15 cos(4 pi t / T)), its
// direction sweeping once around a cone
// of half-angle `cone` around `axis`, line of action through the anchor.
// ConstantMoment: the same force plus the constant moment
// moment_mag * moment_axis about the anchor.
struct WrenchSpec {
  WrenchKind model = WrenchKind::kPureForce;
  FrameTag anchor_frame = FrameTag::kTool;
  Vec3 anchor = Vec3::Zero();
  Vec3 axis = Vec3::UnitX();
  double force_mag = 10.0;  // N
  double moment_mag = 0.0;  // N m
  Vec3 moment_axis = Vec3::UnitX();
  double cone = 0.3;  // rad
};

struct NoiseSpec {
  double pose_pos = 0.0;  // m
  double pose_rot = 0.0;  // rad, per rotation-vector component
  double wrench_f = 0.0;  // N
  double wrench_m = 0.0;  // N m
};

// Uniformly random rotation (axis uniform on the sphere, angle uniform up to
// max_angle) and translation uniform in [-box, box].
struct PlacementSpec {
  double max_angle = 0.0;
  Vec3 box = Vec3::Zero();
  bool enabled() const { return max_angle > 0 || box.norm() > 0; }
};

struct VariationSpec {
  PlacementSpec world_placement;  // T_k = P_k T
  PlacementSpec grasp;            // T_k = T G_k
  double magnitude_jitter = 0.0;  // fraction
};

struct ScenarioSpec {
  MotionSpec motion;
  WrenchSpec wrench;
  double duration = 4.0;  // s
  double rate = 100.0;    // Hz
  int substeps = 10;
  Pose initial_pose;
  std::optional<std::pair<double, double>> contact_window;  // s
  NoiseSpec noise;
  VariationSpec variation;
  int trials = 5;
  uint64_t seed = 1;

  void Validate() const;
  static ScenarioSpec FromJson(const Json& j);
  Json ToJson() const;
};

struct TrialTruth {
  std::string name;
  Pose placement;  // P_k
  Pose grasp;      // G_k
  double magnitude_scale = 1.0;
  // Anchors at the first sample: world position and tool coordinates.
  Vec3 motion_anchor_world, motion_anchor_tool;
  Vec3 wrench_anchor_world, wrench_anchor_tool;
  // Axes in world and tool coordinates at the first sample.
  Vec3 motion_axis_world, motion_axis_tool;
  Vec3 wrench_axis_world, wrench_axis_tool;
  std::optional<std::pair<size_t, size_t>> contact_samples;  // [begin, end)
};

struct GroundTruth {
  ScrewModel motion_model;
  ScrewModel wrench_model;
  VectorsOfInterest vectors;
  // Empty when the variation does not single out a viewpoint.
  std::optional<FrameTag> expected_viewpoint;
  FrameTag motion_anchor_frame, wrench_anchor_frame;
  Vec3 motion_anchor, wrench_anchor;  // in the anchor frames
  // Axes of the vectors of interest: omega or v, force or moment.
  Vec3 motion_axis, wrench_axis;
  std::vector<TrialTruth> trials;

  Json ToJson() const;
  static GroundTruth FromJson(const Json& j);
};

struct SyntheticBundle {
  std::vector<DemoTrial> trials;
  GroundTruth truth;
};

// Deterministic in spec (including its seed).
SyntheticBundle Generate(const ScenarioSpec& spec);

// Noise-free nominal trajectory in the anchor convention, before placement:
// the twist of the tool (world coordinates, world origin) at time t given
// the current pose, and the world wrench at world origin.
Screw NominalTwist(const ScenarioSpec& spec, double t, const Pose& pose, double scale = 1.0);
Screw NominalWrench(const ScenarioSpec& spec, double t, const Pose& pose, double scale = 1.0);

}  // namespace taskframe
