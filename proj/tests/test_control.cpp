#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "taskframe/control.hpp"
#include "taskframe/error.hpp"
#include "taskframe/synthetic.hpp"
#include "taskframe/task_model.hpp"

using namespace taskframe;

namespace {

const Screw kZeroTwist = Screw::Zero(ScrewKind::kTwist);
const Screw kZeroWrench = Screw::Zero(ScrewKind::kWrench);

// Tool-fixed hinge at (0, 0.15, 0) turning about tool z, force through it.
TaskModel ValveModel() {
  static const TaskModel model = [] {
    ScenarioSpec s;
    s.motion.anchor = Vec3(0, 0.15, 0);
    s.wrench.anchor = s.motion.anchor;
    s.duration = 2.0;
    s.trials = 3;
    s.variation.world_placement.max_angle = 0.5;
    s.variation.world_placement.box = Vec3::Constant(0.2);
    s.seed = 61;
    DeriveConfig cfg;
    cfg.preprocess.pose_sigma_s = 0.0;
    cfg.preprocess.wrench_sigma_s = 0.0;
    return RunDerive(Generate(s).trials, cfg).model;
  }();
  return model;
}

SimScenario ValveScenario() {
  SimScenario sc;
  sc.controller.c_f = 0.005;
  RevoluteJoint j;
  j.hinge = Vec3(0, 0.15, 0);
  j.tool_point = j.hinge;
  j.radial_stiffness = 2000;
  j.axial_stiffness = 2000;
  sc.environment.model = j;
  return sc;
}

}  // namespace

TEST_CASE("pose_constraint_twist") {
  const Pose p(RotExp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3));
  CHECK(PoseConstraintTwist(p, p, kZeroTwist, 3.0).Vector().norm() < 1e-12);
  const Screw ff = Screw::Twist(Vec3(0.1, 0, 0), Vec3(0, 0.2, 0));
  CHECK((PoseConstraintTwist(p, p, ff, 3.0).Vector() - ff.Vector()).norm() < 1e-12);

  const Screw fb = PoseConstraintTwist(Pose(), Pose::Translation(Vec3(0.01, 0, 0)), kZeroTwist, 3.0);
  CHECK((fb.moment() - Vec3(0.03, 0, 0)).norm() < 1e-15);
  CHECK(fb.directional().norm() < 1e-15);
}

TEST_CASE("wrench_constraint_twist") {
  const Screw w = Screw::Wrench(Vec3(1, 2, 3), Vec3(0.1, 0.2, 0.3));
  const Screw ff = Screw::Twist(Vec3(0.1, 0, 0), Vec3(0, 0.2, 0));
  CHECK((WrenchConstraintTwist(w, w, ff, 3, 1e-3, 0.1).Vector() - ff.Vector()).norm() < 1e-15);

  const Screw f = WrenchConstraintTwist(kZeroWrench, Screw::Wrench(Vec3(5, 0, 0), Vec3::Zero()),
                                        kZeroTwist, 3, 1e-3, 0.1);
  CHECK((f.moment() - Vec3(0.015, 0, 0)).norm() < 1e-15);
  CHECK(f.directional().norm() == 0.0);

  const Screw m = WrenchConstraintTwist(kZeroWrench, Screw::Wrench(Vec3::Zero(), Vec3(0, 0, 0.5)),
                                        kZeroTwist, 3, 1e-3, 0.1);
  CHECK((m.directional() - Vec3(0, 0, 0.15)).norm() < 1e-15);
  CHECK(m.moment().norm() == 0.0);
}

TEST_CASE("blend_and_step") {
  const Screw t = Screw::Twist(Vec3(0, 0, 1), Vec3(0.1, 0, 0));
  const Screw u = Screw::Twist(Vec3(1, 0, 0), Vec3::Zero());
  CHECK((BlendAndStep(t, t, 0.3, 0.7, 0.01, Pose()).twist.Vector() - t.Vector()).norm() < 1e-15);
  const StepResult pure = BlendAndStep(t, u, 1.0, 0.0, 0.01, Pose());
  CHECK((pure.twist.Vector() - t.Vector()).norm() < 1e-15);
  CHECK((pure.pose.Matrix() - PoseExp(Screw::Displacement(Vec3(0, 0, 0.01), Vec3(0.001, 0, 0)))
                                  .Matrix()).norm() < 1e-15);
  CHECK_THROWS_AS(BlendAndStep(t, u, 0.5, 0.5, 0.0, Pose()), Error);
}

TEST_CASE("controller config validation") {
  ControllerConfig c;
  CHECK_NOTHROW(c.Validate());
  c.w_p = 0.6;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = {};
  c.k_p = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
}

TEST_CASE("environment_wrench") {
  Spring1D s;
  s.stiffness = 1e4;
  s.rest_point = Vec3(0.5, 0, 0);
  EnvironmentModel env{s};
  CHECK(EnvironmentWrench(env, Pose::Translation(Vec3(0.5, 0.3, 0))).Vector().norm() == 0.0);
  const Screw w = EnvironmentWrench(env, Pose::Translation(Vec3(0.502, 0, 0)));
  CHECK((w.directional() - Vec3(-20, 0, 0)).norm() < 1e-9);

  PointOnPlane p;
  p.stiffness = 1e3;
  env.model = p;
  CHECK(EnvironmentWrench(env, Pose::Translation(Vec3(0, 0, 0.01))).Vector().norm() == 0.0);
  const Screw push = EnvironmentWrench(env, Pose::Translation(Vec3(1, 0, -0.01)));
  CHECK((push.directional() - Vec3(0, 0, 10)).norm() < 1e-9);
  CHECK((push.moment() - Vec3(1, 0, -0.01).cross(Vec3(0, 0, 10))).norm() < 1e-9);

  RevoluteJoint r;
  r.hinge = Vec3(0.1, 0.2, 0.3);
  r.axis = Vec3(0, 1, 1).normalized();
  r.radius = 0.25;
  r.axial_offset = 0.05;
  env.model = r;
  const Vec3 radial = Vec3(1, 0, 0);
  for (double a : {0.0, 1.0, 2.5}) {
    const Vec3 q = r.hinge + 0.05 * r.axis + 0.25 * (RotExp(a * r.axis) * radial);
    CHECK(EnvironmentWrench(env, Pose::Translation(q)).Vector().norm() < 1e-9);
  }
  CHECK(EnvironmentWrench(EnvironmentModel{}, Pose::Translation(Vec3(5, 5, 5))).Vector().norm() == 0);
}

TEST_CASE("environment json round trip and validation") {
  const Json j = Json::parse(R"({"type": "revolute_joint", "hinge_m": [0, 0.15, 0], "axis": [0, 0, 1],
    "radial_stiffness_n_m": 2000, "axial_stiffness_n_m": 1000, "tool_point_m": [0, 0.15, 0]})");
  const EnvironmentModel env = EnvironmentModel::FromJson(j);
  CHECK(EnvironmentModel::FromJson(env.ToJson()).ToJson() == env.ToJson());
  CHECK_THROWS_AS(EnvironmentModel::FromJson(Json::parse(R"({"type": "spring_1d"})")), Error);
  CHECK_THROWS_AS(EnvironmentModel::FromJson(Json::parse(
                      R"({"type": "spring_1d", "stiffness_n_m": 10, "color": 1})")),
                  Error);
  CHECK_THROWS_AS(EnvironmentModel::FromJson(Json::parse(R"({"type": "magnet"})")), Error);
}

TEST_CASE("control cycle: pure pose tracking converges at k_p") {
  ControllerConfig cfg;
  cfg.w_p = 1.0;
  cfg.w_w = 0.0;
  const double dt = 1e-3;
  Pose tool(RotExp(Vec3(0.01, -0.02, 0.015)), Vec3(0.004, -0.003, 0.002));
  const Pose tf(RotExp(Vec3(0.3, 0.1, -0.2)), Vec3(0.2, 0.1, 0.0));
  auto err = [&] { return PoseLog(tool).Vector().norm(); };
  const double e0 = err();
  for (int i = 0; i < 500; ++i) {
    const ControlOutput out = ControlCycle(
        cfg, {tool, tf, Pose(), kZeroTwist, kZeroWrench, kZeroWrench});
    const Screw w = ScrewTransform(tf, out.command);
    tool = PoseExp(Screw::Displacement(dt * w.directional(), dt * w.moment())) * tool;
  }
  const double rate = std::log(e0 / err()) / 0.5;
  CHECK(rate == doctest::Approx(cfg.k_p).epsilon(0.1));
}

TEST_CASE("control cycle: pure force control converges at w_w k_w c_f k_env") {
  ControllerConfig cfg;
  cfg.w_p = 0.0;
  cfg.w_w = 1.0;
  cfg.c_f = 1e-3;
  Spring1D s;
  s.stiffness = 1e3;
  const EnvironmentModel env{s};
  const Screw fd = Screw::Wrench(Vec3(10, 0, 0), Vec3::Zero());
  const double dt = 1e-3;
  Pose tool;
  auto ferr = [&] { return 10.0 + EnvironmentWrench(env, tool).directional().x(); };
  const double e0 = ferr();
  for (int i = 0; i < 300; ++i) {
    const ControlOutput out =
        ControlCycle(cfg, {tool, Pose(), Pose(), kZeroTwist, fd, -EnvironmentWrench(env, tool)});
    tool = PoseExp(Screw::Displacement(dt * out.command.directional(), dt * out.command.moment())) *
           tool;
  }
  const double rate = std::log(e0 / ferr()) / 0.3;
  CHECK(rate == doctest::Approx(cfg.k_w * cfg.c_f * s.stiffness).epsilon(0.1));
}

TEST_CASE("control cycle: errors and wrenches are seen in the task frame") {
  ControllerConfig cfg;
  const Pose tf(RotExp(Vec3(0, 0, std::numbers::pi / 2)), Vec3(1, 0, 0));
  const Pose tool = tf;
  const Pose desired = Pose::Translation(Vec3(0, 0.01, 0)) * tool;  // 10 mm along world y
  const Screw measured_world = ScrewTransform(tf, Screw::Wrench(Vec3(2, 0, 0), Vec3::Zero()));
  const ControlOutput out =
      ControlCycle(cfg, {tool, tf, desired, kZeroTwist, kZeroWrench, measured_world});
  // World y is task-frame x.
  CHECK((out.pose_twist.moment() - Vec3(0.03, 0, 0)).norm() < 1e-12);
  CHECK((out.measured_wrench.directional() - Vec3(2, 0, 0)).norm() < 1e-12);
  CHECK((out.wrench_twist.moment() - Vec3(-3 * 1e-3 * 2, 0, 0)).norm() < 1e-12);
  CHECK((out.command.Vector() - (0.5 * out.pose_twist + 0.5 * out.wrench_twist).Vector()).norm() <
        1e-15);
}

TEST_CASE("sample_reference interpolates") {
  ReferenceSignals r;
  r.grid = {0.0, 0.5, 1.0};
  r.positions = {Vec3::Zero(), Vec3(1, 0, 0), Vec3(1, 1, 0)};
  for (double a : {0.0, 0.4, 0.8}) {
    const Eigen::Quaterniond q(Eigen::AngleAxisd(a, Vec3::UnitZ()));
    r.quaternions.push_back({q.w(), q.x(), q.y(), q.z()});
  }
  r.twists = {Vec6::Zero(), Vec6::Ones(), Vec6::Zero()};
  r.wrenches = {Vec6::Zero(), 2 * Vec6::Ones(), Vec6::Zero()};
  const ReferenceSample s = SampleReference(r, 0.25);
  CHECK((s.pose.position - Vec3(0.5, 0, 0)).norm() < 1e-15);
  CHECK(RotationAngleBetween(s.pose.rotation, RotExp(Vec3(0, 0, 0.2))) < 1e-12);
  CHECK((s.twist.Vector() - 0.5 * Vec6::Ones()).norm() < 1e-15);
  CHECK((s.wrench.Vector() - Vec6::Ones()).norm() < 1e-15);
  CHECK((SampleReference(r, 2.0).pose.position - Vec3(1, 1, 0)).norm() < 1e-15);
}

TEST_CASE("sim scenario json") {
  const Json j = Json::parse(R"({"controller": {"k_p_1_s": 4, "w_p": 0.7},
      "environment": {"type": "none"}, "overrides": {"speed_scale": 0.5}, "t_max_s": 3})");
  const SimScenario s = SimScenario::FromJson(j);
  CHECK(s.controller.k_p == 4);
  CHECK(s.controller.w_w == doctest::Approx(0.3));
  CHECK(s.overrides.speed_scale == 0.5);
  CHECK_FALSE(s.overrides.IsNominal());
  CHECK(*s.t_max == 3);
  const SimScenario back = SimScenario::FromJson(s.ToJson());
  CHECK(back.ToJson() == s.ToJson());
  CHECK_THROWS_AS(SimScenario::FromJson(Json::parse(R"({"environment": {"type": "none"}, "gain": 1})")),
                  Error);
  CHECK_THROWS_AS(SimScenario::FromJson(Json::parse(
                      R"({"controller": {"w_p": 0.7, "w_w": 0.7}, "environment": {"type": "none"}})")),
                  Error);
}

TEST_CASE("run_simulation: valve task") {
  const TaskModel model = ValveModel();
  const SimScenario sc = ValveScenario();
  const SimLog a = RunSimulation(model, sc);
  CHECK(a.completed);
  CHECK(a.final_xi_bar == 1.0);
  CHECK(std::isfinite(a.rmse.rotation_deg));
  CHECK(a.rmse.position_mm < 10.0);
  CHECK(a.rmse.force_n < 2.0);

  const SimLog b = RunSimulation(model, sc);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rmse.ToJson() == b.rmse.ToJson());
  CHECK(a.rows.back().actual.Matrix() == b.rows.back().actual.Matrix());

  std::ostringstream csv;
  WriteSimLogCsv(csv, a);
  const std::string text = csv.str();
  CHECK(text.rfind("t,xi_bar,px,py,pz,qw,qx,qy,qz,", 0) == 0);
  CHECK(static_cast<size_t>(std::count(text.begin(), text.end(), '\n')) == a.rows.size() + 1);
}

TEST_CASE("run_simulation: progress stalls without motion") {
  SimScenario sc = ValveScenario();
  sc.t_max = 0.5;
  sc.overrides.speed_scale = 1e-6;
  const SimLog log = RunSimulation(ValveModel(), sc);
  CHECK_FALSE(log.completed);
  CHECK(log.final_xi_bar < 0.01);
}

TEST_CASE("run_simulation: divergence guard") {
  SimScenario sc = ValveScenario();
  sc.controller.c_f = 0.05;
  std::get<RevoluteJoint>(sc.environment.model).radial_stiffness = 1e6;
  try {
    RunSimulation(ValveModel(), sc);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumerical);
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}
