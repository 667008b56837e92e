#include "taskframe/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "taskframe/error.hpp"
#include "taskframe/log.hpp"

namespace taskframe {

namespace {

constexpr double kPi = std::numbers::pi;

// Deterministic orthonormal pair completing `axis`.
void Perpendiculars(const Vec3& axis, Vec3* e1, Vec3* e2) {
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  *e1 = axis.cross(helper).normalized();
  *e2 = axis.cross(*e1);
}

Json PlacementToJson(const PlacementSpec& p) {
  return {{"max_angle_rad", p.max_angle}, {"translation_box_m", ToJson(p.box)}};
}

PlacementSpec PlacementFromJson(StrictObject o) {
  PlacementSpec p;
  p.max_angle = o.NonNegative("max_angle_rad", 0.0);
  p.box = o.Vector3("translation_box_m", Vec3::Zero());
  if ((p.box.array() < 0).any())
    ThrowInvalid("field '" + o.path() + ".translation_box_m' must be >= 0");
  o.Finish();
  return p;
}

Vec3 UnitVector(StrictObject& o, const std::string& key, const Vec3& fallback) {
  const Vec3 v = o.Vector3(key, fallback);
  if (!(v.norm() > 1e-12)) ThrowInvalid("field '" + o.path() + "." + key + "' must be nonzero");
  return v.normalized();
}

MotionKind MotionKindFromString(const std::string& s) {
  if (s == "pure_rotation") return MotionKind::kPureRotation;
  if (s == "constant_translation") return MotionKind::kConstantTranslation;
  ThrowInvalid("unknown motion model '" + s + "'");
}

WrenchKind WrenchKindFromString(const std::string& s) {
  if (s == "pure_force") return WrenchKind::kPureForce;
  if (s == "constant_moment") return WrenchKind::kConstantMoment;
  ThrowInvalid("unknown wrench model '" + s + "'");
}

Pose DrawPlacement(const PlacementSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Pose p;
  if (spec.max_angle > 0) {
    Vec3 axis(normal(rng), normal(rng), normal(rng));
    axis.normalize();
    p.rotation = RotExp(axis * spec.max_angle * unit(rng));
  }
  for (int i = 0; i < 3; ++i) p.position(i) = spec.box(i) * (2 * unit(rng) - 1);
  return p;
}

}  // namespace

std::string_view ToString(MotionKind k) {
  return k == MotionKind::kPureRotation ? "pure_rotation" : "constant_translation";
}

std::string_view ToString(WrenchKind k) {
  return k == WrenchKind::kPureForce ? "pure_force" : "constant_moment";
}

void ScenarioSpec::Validate() const {
  if (!(duration > 0)) ThrowInvalid("field 'duration_s' must be > 0");
  if (!(rate > 0)) ThrowInvalid("field 'rate_hz' must be > 0");
  if (duration * rate < 4) ThrowInvalid("duration_s * rate_hz must give at least 5 samples");
  if (substeps < 1) ThrowInvalid("field 'substeps' must be >= 1");
  if (trials < 1) ThrowInvalid("field 'trials' must be >= 1");
  if (motion.omega_mag < 0 || motion.v_mag < 0 || motion.wobble < 0)
    ThrowInvalid("motion magnitudes must be >= 0");
  if (wrench.force_mag < 0 || wrench.moment_mag < 0 || wrench.cone < 0)
    ThrowInvalid("wrench magnitudes must be >= 0");
  if (contact_window && !(contact_window->first < contact_window->second))
    ThrowInvalid("field 'contact_window_s' must be an increasing pair");
  if (variation.magnitude_jitter < 0 || variation.magnitude_jitter >= 1)
    ThrowInvalid("field 'trial_variation.magnitude_jitter' must be in [0, 1)");
}

ScenarioSpec ScenarioSpec::FromJson(const Json& j) {
  ScenarioSpec s;
  StrictObject o(j, "");
  {
    StrictObject m = o.Object("motion");
    s.motion.model = MotionKindFromString(m.String("model"));
    s.motion.anchor_frame = FrameTagFromString(m.String("anchor_frame", "tool"));
    s.motion.anchor = m.Vector3("anchor_m", Vec3::Zero());
    s.motion.axis = UnitVector(m, "axis", Vec3::UnitZ());
    s.motion.omega_mag = m.NonNegative("omega_rad_s", s.motion.omega_mag);
    s.motion.v_mag = m.NonNegative("v_m_s", s.motion.v_mag);
    s.motion.wobble = m.NonNegative("wobble_rad", s.motion.wobble);
    m.Finish();
  }
  {
    StrictObject w = o.Object("wrench");
    s.wrench.model = WrenchKindFromString(w.String("model"));
    s.wrench.anchor_frame = FrameTagFromString(w.String("anchor_frame", "tool"));
    s.wrench.anchor = w.Vector3("anchor_m", Vec3::Zero());
    s.wrench.axis = UnitVector(w, "axis", Vec3::UnitX());
    s.wrench.force_mag = w.NonNegative("force_n", s.wrench.force_mag);
    s.wrench.moment_mag = w.NonNegative("moment_nm", s.wrench.moment_mag);
    s.wrench.moment_axis = UnitVector(w, "moment_axis", s.wrench.axis);
    s.wrench.cone = w.NonNegative("cone_rad", s.wrench.cone);
    w.Finish();
  }
  s.duration = o.Number("duration_s", s.duration);
  s.rate = o.Number("rate_hz", s.rate);
  s.substeps = static_cast<int>(o.Integer("substeps", s.substeps));
  if (o.Has("initial_pose")) s.initial_pose = PoseFromJson(o.Raw("initial_pose"), "initial_pose");
  if (o.Has("contact_window_s")) {
    const Json& cw = o.Raw("contact_window_s");
    if (!cw.is_array() || cw.size() != 2)
      ThrowInvalid("field 'contact_window_s' must hold 2 numbers");
    s.contact_window.emplace(NumberFromJson(cw[0], "contact_window_s"),
                             NumberFromJson(cw[1], "contact_window_s"));
  }
  if (o.Has("noise")) {
    StrictObject n = o.Object("noise");
    s.noise.pose_pos = n.NonNegative("pose_pos_m", 0.0);
    s.noise.pose_rot = n.NonNegative("pose_rot_rad", 0.0);
    s.noise.wrench_f = n.NonNegative("wrench_f_n", 0.0);
    s.noise.wrench_m = n.NonNegative("wrench_m_nm", 0.0);
    n.Finish();
  }
  if (o.Has("trial_variation")) {
    StrictObject v = o.Object("trial_variation");
    if (v.Has("world_placement"))
      s.variation.world_placement = PlacementFromJson(v.Object("world_placement"));
    if (v.Has("grasp_offset")) s.variation.grasp = PlacementFromJson(v.Object("grasp_offset"));
    s.variation.magnitude_jitter = v.NonNegative("magnitude_jitter", 0.0);
    v.Finish();
  }
  s.trials = static_cast<int>(o.Integer("trials", s.trials));
  const int64_t seed = o.Integer("seed", 1);
  if (seed < 0) ThrowInvalid("field 'seed' must be >= 0");
  s.seed = static_cast<uint64_t>(seed);
  o.Finish();
  s.Validate();
  return s;
}

Json ScenarioSpec::ToJson() const {
  Json j = {
      {"motion",
       {{"model", ToString(motion.model)},
        {"anchor_frame", ToString(motion.anchor_frame)},
        {"anchor_m", taskframe::ToJson(motion.anchor)},
        {"axis", taskframe::ToJson(motion.axis)},
        {"omega_rad_s", motion.omega_mag},
        {"v_m_s", motion.v_mag},
        {"wobble_rad", motion.wobble}}},
      {"wrench",
       {{"model", ToString(wrench.model)},
        {"anchor_frame", ToString(wrench.anchor_frame)},
        {"anchor_m", taskframe::ToJson(wrench.anchor)},
        {"axis", taskframe::ToJson(wrench.axis)},
        {"force_n", wrench.force_mag},
        {"moment_nm", wrench.moment_mag},
        {"moment_axis", taskframe::ToJson(wrench.moment_axis)},
        {"cone_rad", wrench.cone}}},
      {"duration_s", duration},
      {"rate_hz", rate},
      {"substeps", substeps},
      {"initial_pose", taskframe::ToJson(initial_pose)}};
  if (contact_window) j["contact_window_s"] = {contact_window->first, contact_window->second};
  j["noise"] = {{"pose_pos_m", noise.pose_pos},
                {"pose_rot_rad", noise.pose_rot},
                {"wrench_f_n", noise.wrench_f},
                {"wrench_m_nm", noise.wrench_m}};
  j["trial_variation"] = {{"world_placement", PlacementToJson(variation.world_placement)},
                          {"grasp_offset", PlacementToJson(variation.grasp)},
                          {"magnitude_jitter", variation.magnitude_jitter}};
  j["trials"] = trials;
  j["seed"] = seed;
  return j;
}

Screw NominalTwist(const ScenarioSpec& spec, double t, const Pose& pose, double scale) {
  const MotionSpec& m = spec.motion;
  const double tn = t / spec.duration;
  Vec3 e1, e2;
  Perpendiculars(m.axis, &e1, &e2);
  Vec3 omega, v;
  if (m.model == MotionKind::kPureRotation) {
    // envelope harmonics orthogonal to the wobble: the mean axis is `axis`
    const double env = 0.75 - 0.25 * std::cos(2 * kPi * tn);
    const double phi = 2 * kPi * 3 * tn;
    const Vec3 u = std::cos(m.wobble) * m.axis +
                   std::sin(m.wobble) * (std::cos(phi) * e1 + std::sin(phi) * e2);
    omega = scale * m.omega_mag * env * u;
    v = m.anchor.cross(omega);
  } else {
    // zero mean over the trial
    omega = scale * m.omega_mag *
            (std::sin(2 * kPi * tn) * e1 + 0.8 * std::sin(4 * kPi * tn + 0.5) * e2 +
             0.6 * std::cos(3 * kPi * tn) * m.axis);
    const Vec3 v0 = scale * m.v_mag * m.axis;
    const Vec3 point = m.anchor_frame == FrameTag::kTool ? m.anchor : Vec3(m.anchor + v0 * t);
    v = v0 + point.cross(omega);
  }
  const Screw local = Screw::Twist(omega, v);
  return m.anchor_frame == FrameTag::kTool ? ScrewTransform(pose, local) : local;
}

Screw NominalWrench(const ScenarioSpec& spec, double t, const Pose& pose, double scale) {
  const WrenchSpec& w = spec.wrench;
  const double tn = t / spec.duration;
  Vec3 e1, e2;
  Perpendiculars(w.axis, &e1, &e2);
  const double psi = 2 * kPi * tn + 0.7;
  const Vec3 dir = std::cos(w.cone) * w.axis +
                   std::sin(w.cone) * (std::cos(psi) * e1 + std::sin(psi) * e2);
  const Vec3 f = scale * w.force_mag * (0.85 + 0.15 * std::cos(4 * kPi * tn)) * dir;
  Vec3 m = w.anchor.cross(f);
  if (w.model == WrenchKind::kConstantMoment) m += scale * w.moment_mag * w.moment_axis;
  const Screw local = Screw::Wrench(f, m);
  return w.anchor_frame == FrameTag::kTool ? ScrewTransform(pose, local) : local;
}

SyntheticBundle Generate(const ScenarioSpec& spec) {
  spec.Validate();
  const auto& var = spec.variation;
  const bool placed = var.world_placement.enabled();
  const bool grasped = var.grasp.enabled();
  if (placed && (spec.motion.anchor_frame == FrameTag::kWorld ||
                 spec.wrench.anchor_frame == FrameTag::kWorld))
    Warn("world-anchored model combined with world-placement randomization");
  if (grasped && (spec.motion.anchor_frame == FrameTag::kTool ||
                  spec.wrench.anchor_frame == FrameTag::kTool))
    Warn("tool-anchored model combined with grasp-offset randomization");

  SyntheticBundle out;
  GroundTruth& gt = out.truth;
  gt.motion_model = spec.motion.model == MotionKind::kPureRotation ? ScrewModel::kModel1
                                                                   : ScrewModel::kModel2;
  gt.wrench_model = spec.wrench.model == WrenchKind::kPureForce ? ScrewModel::kModel1
                                                                : ScrewModel::kModel2;
  gt.vectors = SelectVectorsOfInterest(gt.motion_model, gt.wrench_model);
  if (placed && !grasped) gt.expected_viewpoint = FrameTag::kTool;
  if (grasped && !placed) gt.expected_viewpoint = FrameTag::kWorld;
  gt.motion_anchor_frame = spec.motion.anchor_frame;
  gt.wrench_anchor_frame = spec.wrench.anchor_frame;
  gt.motion_anchor = spec.motion.anchor;
  gt.wrench_anchor = spec.wrench.anchor;
  gt.motion_axis = spec.motion.axis;
  // axis of the wrench vector of interest
  const Vec3 wrench_axis = spec.wrench.model == WrenchKind::kConstantMoment
                               ? Vec3(spec.wrench.moment_axis.normalized())
                               : spec.wrench.axis;
  gt.wrench_axis = wrench_axis;

  const size_t n = static_cast<size_t>(std::floor(spec.duration * spec.rate + 1e-9)) + 1;
  const double dt = 1.0 / spec.rate;
  const double h = dt / spec.substeps;

  for (int k = 0; k < spec.trials; ++k) {
    std::seed_seq seq{static_cast<uint64_t>(spec.seed), static_cast<uint64_t>(k)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    TrialTruth tt;
    tt.name = "trial_" + std::string(k < 10 ? "0" : "") + std::to_string(k);
    tt.magnitude_scale = 1.0 + var.magnitude_jitter * unit(rng);
    tt.placement = DrawPlacement(var.world_placement, rng);
    tt.grasp = DrawPlacement(var.grasp, rng);
    const double scale = tt.magnitude_scale;

    DemoTrial demo;
    demo.name = tt.name;
    Pose pose = spec.initial_pose;
    for (size_t i = 0; i < n; ++i) {
      const double t = i * dt;
      Screw w = NominalWrench(spec, t, pose, scale);
      if (spec.contact_window &&
          (t < spec.contact_window->first || t > spec.contact_window->second))
        w = Screw::Zero(ScrewKind::kWrench);
      demo.times.push_back(t);
      demo.poses.push_back(tt.placement * pose * tt.grasp);
      demo.wrenches.push_back(ScrewTransform(tt.placement, w));
      if (i + 1 == n) break;
      for (int s = 0; s < spec.substeps; ++s) {
        // midpoint twist; the anchor predicate holds for any step size
        const Screw tw = NominalTwist(spec, t + (s + 0.5) * h, pose, scale);
        pose = PoseExp(Screw::Displacement(h * tw.directional(), h * tw.moment())) * pose;
      }
    }

    const Pose first = spec.initial_pose;
    const Pose tool0 = tt.placement * first * tt.grasp;
    auto anchor_truth = [&](FrameTag frame, const Vec3& a, const Vec3& axis, Vec3* aw,
                            Vec3* atl, Vec3* xw, Vec3* xtl) {
      if (frame == FrameTag::kTool) {
        *aw = tt.placement.TransformPoint(first.TransformPoint(a));
        *xw = tt.placement.rotation * first.rotation * axis;
      } else {
        *aw = tt.placement.TransformPoint(a);
        *xw = tt.placement.rotation * axis;
      }
      *atl = tool0.Inverse().TransformPoint(*aw);
      *xtl = tool0.rotation.transpose() * *xw;
    };
    anchor_truth(spec.motion.anchor_frame, spec.motion.anchor, spec.motion.axis,
                 &tt.motion_anchor_world, &tt.motion_anchor_tool, &tt.motion_axis_world,
                 &tt.motion_axis_tool);
    anchor_truth(spec.wrench.anchor_frame, spec.wrench.anchor, wrench_axis,
                 &tt.wrench_anchor_world, &tt.wrench_anchor_tool, &tt.wrench_axis_world,
                 &tt.wrench_axis_tool);
    if (spec.contact_window) {
      const size_t b = static_cast<size_t>(std::ceil(spec.contact_window->first * spec.rate - 1e-9));
      const size_t e = std::min(
          n, static_cast<size_t>(std::floor(spec.contact_window->second * spec.rate + 1e-9)) + 1);
      tt.contact_samples.emplace(b, e);
    }

    const NoiseSpec& nz = spec.noise;
    for (size_t i = 0; i < n; ++i) {
      Pose& p = demo.poses[i];
      Vec3 dp, dr, df, dm;
      for (int c = 0; c < 3; ++c) dp(c) = nz.pose_pos * normal(rng);
      for (int c = 0; c < 3; ++c) dr(c) = nz.pose_rot * normal(rng);
      for (int c = 0; c < 3; ++c) df(c) = nz.wrench_f * normal(rng);
      for (int c = 0; c < 3; ++c) dm(c) = nz.wrench_m * normal(rng);
      p.position += dp;
      p.rotation = RotExp(dr) * p.rotation;
      demo.wrenches[i] = demo.wrenches[i] + Screw::Wrench(df, dm);
    }
    out.trials.push_back(std::move(demo));
    gt.trials.push_back(std::move(tt));
  }
  return out;
}

Json GroundTruth::ToJson() const {
  Json trials_j = Json::array();
  for (const auto& t : trials) {
    Json tj = {{"name", t.name},
               {"placement", taskframe::ToJson(t.placement)},
               {"grasp_offset", taskframe::ToJson(t.grasp)},
               {"magnitude_scale", t.magnitude_scale},
               {"motion_anchor_world_m", taskframe::ToJson(t.motion_anchor_world)},
               {"motion_anchor_tool_m", taskframe::ToJson(t.motion_anchor_tool)},
               {"wrench_anchor_world_m", taskframe::ToJson(t.wrench_anchor_world)},
               {"wrench_anchor_tool_m", taskframe::ToJson(t.wrench_anchor_tool)},
               {"motion_axis_world", taskframe::ToJson(t.motion_axis_world)},
               {"motion_axis_tool", taskframe::ToJson(t.motion_axis_tool)},
               {"wrench_axis_world", taskframe::ToJson(t.wrench_axis_world)},
               {"wrench_axis_tool", taskframe::ToJson(t.wrench_axis_tool)}};
    if (t.contact_samples)
      tj["contact_samples"] = {t.contact_samples->first, t.contact_samples->second};
    trials_j.push_back(tj);
  }
  return {{"motion_model", ToString(motion_model)},
          {"wrench_model", ToString(wrench_model)},
          {"motion_vector", ToString(vectors.motion)},
          {"wrench_vector", ToString(vectors.wrench)},
          {"progress", ToString(vectors.progress)},
          {"expected_viewpoint",
           expected_viewpoint ? Json(ToString(*expected_viewpoint)) : Json("none")},
          {"motion_anchor", {{"frame", ToString(motion_anchor_frame)},
                             {"point_m", taskframe::ToJson(motion_anchor)},
                             {"axis", taskframe::ToJson(motion_axis)}}},
          {"wrench_anchor", {{"frame", ToString(wrench_anchor_frame)},
                             {"point_m", taskframe::ToJson(wrench_anchor)},
                             {"axis", taskframe::ToJson(wrench_axis)}}},
          {"trials", trials_j}};
}

GroundTruth GroundTruth::FromJson(const Json& j) {
  StrictObject o(j, "truth");
  GroundTruth g;
  g.motion_model = ScrewModelFromString(o.String("motion_model"));
  g.wrench_model = ScrewModelFromString(o.String("wrench_model"));
  g.vectors.motion = MotionVectorFromString(o.String("motion_vector"));
  g.vectors.wrench = WrenchVectorFromString(o.String("wrench_vector"));
  g.vectors.progress = ProgressKindFromString(o.String("progress"));
  const std::string vp = o.String("expected_viewpoint");
  if (vp != "none") g.expected_viewpoint = FrameTagFromString(vp);
  auto anchor = [&](const std::string& key, FrameTag* frame, Vec3* point, Vec3* axis) {
    StrictObject a = o.Object(key);
    *frame = FrameTagFromString(a.String("frame"));
    *point = a.Vector3("point_m");
    *axis = a.Vector3("axis");
    a.Finish();
  };
  anchor("motion_anchor", &g.motion_anchor_frame, &g.motion_anchor, &g.motion_axis);
  anchor("wrench_anchor", &g.wrench_anchor_frame, &g.wrench_anchor, &g.wrench_axis);
  const Json& tr = o.Raw("trials");
  if (!tr.is_array()) ThrowInvalid("field 'truth.trials' must be an array");
  for (const auto& tj : tr) {
    StrictObject t(tj, "truth.trials[]");
    TrialTruth tt;
    tt.name = t.String("name");
    tt.placement = PoseFromJson(t.Raw("placement"), "placement");
    tt.grasp = PoseFromJson(t.Raw("grasp_offset"), "grasp_offset");
    tt.magnitude_scale = t.Number("magnitude_scale");
    tt.motion_anchor_world = t.Vector3("motion_anchor_world_m");
    tt.motion_anchor_tool = t.Vector3("motion_anchor_tool_m");
    tt.wrench_anchor_world = t.Vector3("wrench_anchor_world_m");
    tt.wrench_anchor_tool = t.Vector3("wrench_anchor_tool_m");
    tt.motion_axis_world = t.Vector3("motion_axis_world");
    tt.motion_axis_tool = t.Vector3("motion_axis_tool");
    tt.wrench_axis_world = t.Vector3("wrench_axis_world");
    tt.wrench_axis_tool = t.Vector3("wrench_axis_tool");
    if (t.Has("contact_samples")) {
      const Json& cs = t.Raw("contact_samples");
      if (!cs.is_array() || cs.size() != 2) ThrowInvalid("contact_samples must hold 2 indices");
      tt.contact_samples.emplace(cs[0].get<size_t>(), cs[1].get<size_t>());
    }
    t.Finish();
    g.trials.push_back(std::move(tt));
  }
  o.Finish();
  return g;
}

}  // namespace taskframe
