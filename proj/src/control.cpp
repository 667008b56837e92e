#include "taskframe/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/Geometry>

#include "taskframe/error.hpp"

namespace taskframe {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Vec3 Unit(StrictObject& o, const std::string& key, const Vec3& fallback) {
  const Vec3 v = o.Vector3(key, fallback);
  if (!(v.norm() > 1e-12)) ThrowInvalid("field '" + o.path() + "." + key + "' must be nonzero");
  return v.normalized();
}

Screw Reexpress(const Pose& q, const Screw& s) { return ScrewTransform(q.Inverse(), s); }

}  // namespace

void ControllerConfig::Validate() const {
  if (!(k_p > 0) || !(k_w > 0)) ThrowInvalid("controller gains must be > 0");
  if (!(c_f > 0) || !(c_m > 0)) ThrowInvalid("controller compliances must be > 0");
  if (w_p < 0 || w_w < 0 || std::abs(w_p + w_w - 1.0) > 1e-9)
    ThrowInvalid("controller weights must be >= 0 and sum to 1");
  if (!(control_rate > 0)) ThrowInvalid("field 'control_rate_hz' must be > 0");
}

void EnvironmentModel::Validate() const {
  auto unit = [](const Vec3& v, const char* what) {
    if (std::abs(v.norm() - 1.0) > 1e-9) ThrowInvalid(std::string(what) + " must be a unit vector");
  };
  if (const auto* s = std::get_if<Spring1D>(&model)) {
    if (!(s->stiffness > 0)) ThrowInvalid("spring stiffness must be > 0");
    unit(s->axis, "spring axis");
  } else if (const auto* p = std::get_if<PointOnPlane>(&model)) {
    if (!(p->stiffness > 0)) ThrowInvalid("plane stiffness must be > 0");
    unit(p->normal, "plane normal");
  } else if (const auto* r = std::get_if<RevoluteJoint>(&model)) {
    if (!(r->radial_stiffness > 0) || !(r->axial_stiffness > 0))
      ThrowInvalid("joint stiffnesses must be > 0");
    if (r->radius < 0) ThrowInvalid("joint radius must be >= 0");
    unit(r->axis, "joint axis");
  }
}

EnvironmentModel EnvironmentModel::FromJson(const Json& j) {
  StrictObject o(j, "environment");
  EnvironmentModel env;
  const std::string type = o.String("type");
  if (type == "none") {
  } else if (type == "spring_1d") {
    Spring1D s;
    s.axis = Unit(o, "axis", s.axis);
    s.rest_point = o.Vector3("rest_point_m", s.rest_point);
    s.stiffness = o.Positive("stiffness_n_m");
    s.tool_point = o.Vector3("tool_point_m", s.tool_point);
    env.model = s;
  } else if (type == "point_on_plane") {
    PointOnPlane p;
    p.point = o.Vector3("point_m", p.point);
    p.normal = Unit(o, "normal", p.normal);
    p.stiffness = o.Positive("stiffness_n_m");
    p.tool_point = o.Vector3("tool_point_m", p.tool_point);
    env.model = p;
  } else if (type == "revolute_joint") {
    RevoluteJoint r;
    r.hinge = o.Vector3("hinge_m", r.hinge);
    r.axis = Unit(o, "axis", r.axis);
    r.radial_stiffness = o.Positive("radial_stiffness_n_m");
    r.axial_stiffness = o.Positive("axial_stiffness_n_m");
    r.radius = o.NonNegative("radius_m", 0.0);
    r.axial_offset = o.Number("axial_offset_m", 0.0);
    r.tool_point = o.Vector3("tool_point_m", r.tool_point);
    env.model = r;
  } else {
    ThrowInvalid("unknown environment type '" + type + "'");
  }
  o.Finish();
  env.Validate();
  return env;
}

Json EnvironmentModel::ToJson() const {
  if (const auto* s = std::get_if<Spring1D>(&model))
    return {{"type", "spring_1d"},
            {"axis", taskframe::ToJson(s->axis)},
            {"rest_point_m", taskframe::ToJson(s->rest_point)},
            {"stiffness_n_m", s->stiffness},
            {"tool_point_m", taskframe::ToJson(s->tool_point)}};
  if (const auto* p = std::get_if<PointOnPlane>(&model))
    return {{"type", "point_on_plane"},
            {"point_m", taskframe::ToJson(p->point)},
            {"normal", taskframe::ToJson(p->normal)},
            {"stiffness_n_m", p->stiffness},
            {"tool_point_m", taskframe::ToJson(p->tool_point)}};
  if (const auto* r = std::get_if<RevoluteJoint>(&model))
    return {{"type", "revolute_joint"},
            {"hinge_m", taskframe::ToJson(r->hinge)},
            {"axis", taskframe::ToJson(r->axis)},
            {"radial_stiffness_n_m", r->radial_stiffness},
            {"axial_stiffness_n_m", r->axial_stiffness},
            {"radius_m", r->radius},
            {"axial_offset_m", r->axial_offset},
            {"tool_point_m", taskframe::ToJson(r->tool_point)}};
  return {{"type", "none"}};
}

Screw EnvironmentWrench(const EnvironmentModel& env, const Pose& tool_pose) {
  Vec3 q = Vec3::Zero(), f = Vec3::Zero();
  if (const auto* s = std::get_if<Spring1D>(&env.model)) {
    q = tool_pose.TransformPoint(s->tool_point);
    f = -s->stiffness * s->axis.dot(q - s->rest_point) * s->axis;
  } else if (const auto* p = std::get_if<PointOnPlane>(&env.model)) {
    q = tool_pose.TransformPoint(p->tool_point);
    const double d = p->normal.dot(q - p->point);
    if (d < 0) f = -p->stiffness * d * p->normal;
  } else if (const auto* r = std::get_if<RevoluteJoint>(&env.model)) {
    q = tool_pose.TransformPoint(r->tool_point);
    const Vec3 d = q - r->hinge;
    const double z = r->axis.dot(d);
    const Vec3 radial = d - z * r->axis;
    const double rho = radial.norm();
    if (r->radius == 0.0)
      f = -r->radial_stiffness * radial;
    else if (rho > 1e-12)
      f = -r->radial_stiffness * (rho - r->radius) / rho * radial;
    f -= r->axial_stiffness * (z - r->axial_offset) * r->axis;
  }
  return Screw::Wrench(f, q.cross(f));
}

Screw PoseConstraintTwist(const Pose& actual, const Pose& desired, const Screw& desired_twist,
                          double k_p) {
  const Screw d = PoseLog(actual.Inverse() * desired);
  return Screw::Twist(k_p * d.directional(), k_p * d.moment()) + desired_twist;
}

Screw WrenchConstraintTwist(const Screw& actual_wrench, const Screw& desired_wrench,
                            const Screw& desired_twist, double k_w, double c_f, double c_m) {
  const Vec3 df = desired_wrench.directional() - actual_wrench.directional();
  const Vec3 dm = desired_wrench.moment() - actual_wrench.moment();
  return Screw::Twist(k_w * c_m * dm, k_w * c_f * df) + desired_twist;
}

StepResult BlendAndStep(const Screw& t_p, const Screw& t_w, double w_p, double w_w, double dt,
                        const Pose& pose) {
  if (!(dt > 0)) ThrowInvalid("blend_and_step: dt must be > 0");
  const Screw cmd = w_p * t_p + w_w * t_w;
  const Pose next =
      PoseExp(Screw::Displacement(dt * cmd.directional(), dt * cmd.moment())) * pose;
  return {cmd, next};
}

ControlOutput ControlCycle(const ControllerConfig& cfg, const ControlInput& in) {
  const Pose tf_inv = in.task_frame.Inverse();
  ControlOutput out{Screw::Zero(ScrewKind::kTwist), Screw::Zero(ScrewKind::kTwist),
                    Screw::Zero(ScrewKind::kTwist), Pose(),
                    ScrewTransform(tf_inv, in.measured_wrench_world)};
  // Spatial error T_des T^-1 observed from the task frame; the actual pose is
  // then the identity.
  out.pose_error = tf_inv * in.desired_tool * in.tool.Inverse() * in.task_frame;
  out.pose_twist = PoseConstraintTwist(Pose(), out.pose_error, in.desired_twist, cfg.k_p);
  out.wrench_twist = WrenchConstraintTwist(out.measured_wrench, in.desired_wrench,
                                           in.desired_twist, cfg.k_w, cfg.c_f, cfg.c_m);
  out.command = cfg.w_p * out.pose_twist + cfg.w_w * out.wrench_twist;
  return out;
}

bool SimOverrides::IsNominal() const {
  return speed_scale == 1.0 && wrench_scale == 1.0 && !initial_pose &&
         origin_offset.isZero(0) && orientation_offset.isZero(0);
}

SimScenario SimScenario::FromJson(const Json& j) {
  StrictObject o(j, "");
  SimScenario s;
  if (o.Has("controller")) {
    StrictObject c = o.Object("controller");
    auto& cc = s.controller;
    cc.k_p = c.Positive("k_p_1_s", cc.k_p);
    cc.k_w = c.Positive("k_w_1_s", cc.k_w);
    cc.c_f = c.Positive("c_f_m_n", cc.c_f);
    cc.c_m = c.Positive("c_m_rad_nm", cc.c_m);
    cc.w_p = c.NonNegative("w_p", cc.w_p);
    cc.w_w = c.NonNegative("w_w", 1.0 - cc.w_p);
    cc.control_rate = c.Positive("control_rate_hz", cc.control_rate);
    c.Finish();
  }
  s.controller.Validate();
  s.environment = EnvironmentModel::FromJson(o.Raw("environment"));
  if (o.Has("initial_pose")) s.initial_pose = PoseFromJson(o.Raw("initial_pose"), "initial_pose");
  if (o.Has("overrides")) {
    StrictObject v = o.Object("overrides");
    auto& ov = s.overrides;
    ov.speed_scale = v.Positive("speed_scale", 1.0);
    ov.wrench_scale = v.NonNegative("wrench_scale", 1.0);
    if (v.Has("initial_pose"))
      ov.initial_pose = PoseFromJson(v.Raw("initial_pose"), "overrides.initial_pose");
    ov.origin_offset = v.Vector3("origin_offset_m", Vec3::Zero());
    ov.orientation_offset = v.Vector3("orientation_offset_rad", Vec3::Zero());
    v.Finish();
  }
  if (o.Has("t_max_s")) s.t_max = o.Positive("t_max_s");
  o.Finish();
  return s;
}

Json SimScenario::ToJson() const {
  Json j = {{"controller",
             {{"k_p_1_s", controller.k_p},
              {"k_w_1_s", controller.k_w},
              {"c_f_m_n", controller.c_f},
              {"c_m_rad_nm", controller.c_m},
              {"w_p", controller.w_p},
              {"w_w", controller.w_w},
              {"control_rate_hz", controller.control_rate}}},
            {"environment", environment.ToJson()},
            {"initial_pose", taskframe::ToJson(initial_pose)}};
  Json ov = {{"speed_scale", overrides.speed_scale},
             {"wrench_scale", overrides.wrench_scale},
             {"origin_offset_m", taskframe::ToJson(overrides.origin_offset)},
             {"orientation_offset_rad", taskframe::ToJson(overrides.orientation_offset)}};
  if (overrides.initial_pose) ov["initial_pose"] = taskframe::ToJson(*overrides.initial_pose);
  j["overrides"] = ov;
  if (t_max) j["t_max_s"] = *t_max;
  return j;
}

Json Rmse::ToJson() const {
  return {{"rotation_deg", rotation_deg}, {"position_mm", position_mm},
          {"omega_deg_s", omega_deg_s},   {"v_mm_s", v_mm_s},
          {"force_n", force_n},           {"moment_nm", moment_nm}};
}

ReferenceSample SampleReference(const ReferenceSignals& ref, double xi_bar) {
  const auto& g = ref.grid;
  if (g.size() < 2) ThrowInvalid("reference needs at least 2 grid points");
  xi_bar = std::clamp(xi_bar, g.front(), g.back());
  size_t k = std::upper_bound(g.begin(), g.end(), xi_bar) - g.begin();
  k = std::clamp<size_t>(k, 1, g.size() - 1) - 1;
  const double s = (xi_bar - g[k]) / (g[k + 1] - g[k]);
  const auto& qa = ref.quaternions[k];
  const auto& qb = ref.quaternions[k + 1];
  const Eigen::Quaterniond a(qa(0), qa(1), qa(2), qa(3)), b(qb(0), qb(1), qb(2), qb(3));
  ReferenceSample out{
      Pose(a.slerp(s, b).toRotationMatrix(),
           (1 - s) * ref.positions[k] + s * ref.positions[k + 1]),
      Screw::FromVector(ScrewKind::kTwist, (1 - s) * ref.twists[k] + s * ref.twists[k + 1]),
      Screw::FromVector(ScrewKind::kWrench,
                        (1 - s) * ref.wrenches[k] + s * ref.wrenches[k + 1])};
  return out;
}

SimLog RunSimulation(const TaskModel& model, const SimScenario& sc) {
  sc.controller.Validate();
  sc.environment.Validate();
  const SimOverrides& ov = sc.overrides;
  const ReferenceSignals& ref = model.ref;
  if (!(ref.xi_max_avg > 0) || !(ref.nominal_rate > 0))
    ThrowInvalid("task model has no progress scale");

  // Controller frame tf' = tf * offset * turn; references re-expressed by turn.
  const Pose offset = Pose::Translation(ov.origin_offset);
  const Pose turn = Pose::Rotation(RotExp(ov.orientation_offset));
  const Pose perturb = offset * turn;
  auto task_frame = [&](const Pose& tool) {
    return AssembleTaskFrame(model.frame.origin, model.frame.orientation, FrameTag::kWorld,
                             &tool) *
           perturb;
  };

  const Pose start = ov.initial_pose ? *ov.initial_pose : sc.initial_pose;
  const Pose x = start.Inverse() * task_frame(start);
  const Pose x_inv = x.Inverse();
  const double rate = ref.nominal_rate * ov.speed_scale;  // progress units per s
  const double dt = 1.0 / sc.controller.control_rate;
  const double t_max = sc.t_max ? *sc.t_max : 3.0 * ref.xi_max_avg / rate;
  const ProgressKind kind = model.frame.progress;

  SimLog log;
  Pose tool = start;
  double xi_bar = 0.0, t = 0.0;
  double acc[6] = {0, 0, 0, 0, 0, 0};
  for (;;) {
    const ReferenceSample r = SampleReference(ref, xi_bar);
    const Pose rel = turn.Inverse() * r.pose * turn;
    const Screw twist_ref = Reexpress(turn, r.twist);
    const Screw wrench_ref = ov.wrench_scale * Reexpress(turn, r.wrench);

    ControlInput in{tool,
                    task_frame(tool),
                    start * x * rel * x_inv,
                    rate * twist_ref,
                    wrench_ref,
                    -EnvironmentWrench(sc.environment, tool)};
    const ControlOutput out = ControlCycle(sc.controller, in);

    const double dp = (in.desired_tool.position - tool.position).norm();
    if (dp > 1.0) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "simulation diverged at t = %.3f s: position error %.3f m",
                    t, dp);
      ThrowNumerical(buf);
    }

    const Screw dtw = out.command - in.desired_twist;
    const Screw dw = out.measured_wrench - in.desired_wrench;
    const double e[6] = {RotLog(out.pose_error.rotation).norm() * kRadToDeg,
                         out.pose_error.position.norm() * 1e3,
                         dtw.directional().norm() * kRadToDeg,
                         dtw.moment().norm() * 1e3,
                         dw.directional().norm(),
                         dw.moment().norm()};
    for (int c = 0; c < 6; ++c) acc[c] += e[c] * e[c];
    log.rows.push_back({t, xi_bar, tool, in.desired_tool, out.command.Vector(),
                        in.desired_twist.Vector(), out.measured_wrench.Vector(),
                        in.desired_wrench.Vector()});

    if (xi_bar >= 1.0) {
      log.completed = true;
      break;
    }
    if (t >= t_max) break;

    const Screw cmd_world = ScrewTransform(in.task_frame, out.command);
    tool = PoseExp(Screw::Displacement(dt * cmd_world.directional(), dt * cmd_world.moment())) *
           tool;
    const double xi_dot = RateVector(out.command, kind).norm();
    xi_bar = std::min(1.0, xi_bar + dt * xi_dot / ref.xi_max_avg);
    t += dt;
  }
  const double n = static_cast<double>(log.rows.size());
  Rmse& m = log.rmse;
  m.rotation_deg = std::sqrt(acc[0] / n);
  m.position_mm = std::sqrt(acc[1] / n);
  m.omega_deg_s = std::sqrt(acc[2] / n);
  m.v_mm_s = std::sqrt(acc[3] / n);
  m.force_n = std::sqrt(acc[4] / n);
  m.moment_nm = std::sqrt(acc[5] / n);
  log.final_xi_bar = xi_bar;
  return log;
}

void WriteSimLogCsv(std::ostream& out, const SimLog& log) {
  out << "t,xi_bar,px,py,pz,qw,qx,qy,qz,px_d,py_d,pz_d,qw_d,qx_d,qy_d,qz_d,"
         "wx,wy,wz,vx,vy,vz,wx_d,wy_d,wz_d,vx_d,vy_d,vz_d,"
         "fx,fy,fz,mx,my,mz,fx_d,fy_d,fz_d,mx_d,my_d,mz_d\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    out << buf;
  };
  auto pose = [&](const Pose& p) {
    for (int c = 0; c < 3; ++c) put(p.position(c));
    const Eigen::Quaterniond q(p.rotation);
    put(q.w());
    put(q.x());
    put(q.y());
    put(q.z());
  };
  for (const auto& r : log.rows) {
    std::snprintf(buf, sizeof buf, "%.10g", r.t);
    out << buf;
    put(r.xi_bar);
    pose(r.actual);
    pose(r.desired);
    for (const Vec6* v : {&r.twist, &r.desired_twist, &r.wrench, &r.desired_wrench})
      for (int c = 0; c < 6; ++c) put((*v)(c));
    out << "\n";
  }
}

}  // namespace taskframe
