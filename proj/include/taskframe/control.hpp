#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "taskframe/geometry.hpp"
#include "taskframe/json_util.hpp"
#include "taskframe/task_model.hpp"

namespace taskframe {

struct ControllerConfig {
  double k_p = 3.0;           // 1/s
  double k_w = 3.0;           // 1/s
  double c_f = 1e-3;          // m/N
  double c_m = 0.1;           // rad/(N m)
  double w_p = 0.5;
  double w_w = 0.5;
  double control_rate = 500;  // Hz
  void Validate() const;
};

// Spring environments. Each acts on a tool-fixed point (tool coordinates)
// with a pure force through it.
struct Spring1D {
  Vec3 axis = Vec3::UnitX();
  Vec3 rest_point = Vec3::Zero();  // world
  double stiffness = 1e4;          // N/m
  Vec3 tool_point = Vec3::Zero();
};

// One-sided: pushes along `normal` while the point is below the plane.
struct PointOnPlane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double stiffness = 1e4;
  Vec3 tool_point = Vec3::Zero();
};

// Keeps the tool point on the circle of `radius` around the hinge axis at
// height `axial_offset` along it.
struct RevoluteJoint {
  Vec3 hinge = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double radial_stiffness = 1e3;
  double axial_stiffness = 1e3;
  double radius = 0.0;
  double axial_offset = 0.0;
  Vec3 tool_point = Vec3::Zero();
};

struct EnvironmentModel {
  std::variant<std::monostate, Spring1D, PointOnPlane, RevoluteJoint> model;
  void Validate() const;
  static EnvironmentModel FromJson(const Json& j);
  Json ToJson() const;
};

// Wrench the environment exerts on the tool; world coordinates, moment
// about the world origin. Zero for an empty environment.
Screw EnvironmentWrench(const EnvironmentModel& env, const Pose& tool_pose);

// k_p * log(actual^-1 desired) + desired_twist, all in one frame.
Screw PoseConstraintTwist(const Pose& actual, const Pose& desired, const Screw& desired_twist,
                          double k_p);

// Force error drives translational velocity, moment error angular velocity.
Screw WrenchConstraintTwist(const Screw& actual_wrench, const Screw& desired_wrench,
                            const Screw& desired_twist, double k_w, double c_f, double c_m);

// Commanded twist w_p t_p + w_w t_w and the pose after dt, both in the frame
// the twists are expressed in (T <- exp(dt t_cmd) T).
struct StepResult {
  Screw twist;
  Pose pose;
};
StepResult BlendAndStep(const Screw& t_p, const Screw& t_w, double w_p, double w_w, double dt,
                        const Pose& pose);

// One control cycle in the task frame: desired tool pose (world), feedforward
// twist and desired wrench in the current task frame, measured wrench (what
// the tool exerts, world). Returns the commanded twist in the task frame.
struct ControlInput {
  Pose tool;            // T_tl^w
  Pose task_frame;      // T_tf^w
  Pose desired_tool;    // world
  Screw desired_twist = Screw::Zero(ScrewKind::kTwist);    // tf
  Screw desired_wrench = Screw::Zero(ScrewKind::kWrench);  // tf
  Screw measured_wrench_world = Screw::Zero(ScrewKind::kWrench);
};
struct ControlOutput {
  Screw command;          // tf
  Screw pose_twist;       // tf
  Screw wrench_twist;     // tf
  Pose pose_error;        // desired relative to actual, in tf
  Screw measured_wrench;  // tf
};
ControlOutput ControlCycle(const ControllerConfig& cfg, const ControlInput& in);

struct SimOverrides {
  double speed_scale = 1.0;
  double wrench_scale = 1.0;
  std::optional<Pose> initial_pose;
  Vec3 origin_offset = Vec3::Zero();       // m, task-frame coordinates
  Vec3 orientation_offset = Vec3::Zero();  // rotation vector, rad
  bool IsNominal() const;
};

struct SimScenario {
  ControllerConfig controller;
  EnvironmentModel environment;
  Pose initial_pose;
  SimOverrides overrides;
  std::optional<double> t_max;  // s; default three nominal durations

  static SimScenario FromJson(const Json& j);
  Json ToJson() const;
};

struct SimRow {
  double t, xi_bar;
  Pose actual, desired;
  Vec6 twist, desired_twist;    // tf
  Vec6 wrench, desired_wrench;  // tf
};

// Root-mean-square tracking errors over the run.
struct Rmse {
  double rotation_deg = 0, position_mm = 0;
  double omega_deg_s = 0, v_mm_s = 0;
  double force_n = 0, moment_nm = 0;
  Json ToJson() const;
};

struct SimLog {
  std::vector<SimRow> rows;
  Rmse rmse;
  bool completed = false;  // progress reached 1
  double final_xi_bar = 0;
};

SimLog RunSimulation(const TaskModel& model, const SimScenario& scenario);

// Reference signals at xi_bar, linear in position, twist and wrench, slerp
// in orientation.
struct ReferenceSample {
  Pose pose;
  Screw twist;
  Screw wrench;
};
ReferenceSample SampleReference(const ReferenceSignals& ref, double xi_bar);

void WriteSimLogCsv(std::ostream& out, const SimLog& log);

}  // namespace taskframe
