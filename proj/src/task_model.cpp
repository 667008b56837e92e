#include "taskframe/task_model.hpp"

#include "taskframe/error.hpp"

namespace taskframe {

namespace {

Json RatioToJson(const Ratio& r) {
  Json j = {{"value", NumberToJson(r.value)}};
  if (r.both_degenerate) j["both_degenerate"] = true;
  return j;
}

Ratio RatioFromJson(const Json& j, const std::string& where) {
  StrictObject o(j, where);
  Ratio r;
  r.value = o.Number("value");
  r.both_degenerate = o.Bool("both_degenerate", false);
  o.Finish();
  return r;
}

Json AsipToJson(const AsipResult& a) {
  return {{"point_m", ToJson(a.point)},
          {"covariance_m2", ToJson(a.covariance)},
          {"sigma_hat_sq", a.sigma_hat_sq},
          {"singular_values_m2", ToJson(a.singular_values)},
          {"singular_vectors", ToJson(a.singular_vectors)}};
}

}  // namespace

DeriveConfig DeriveConfig::FromJson(const Json& j) {
  DeriveConfig c;
  StrictObject o(j, "");
  if (o.Has("preprocess")) {
    StrictObject p = o.Object("preprocess");
    c.preprocess.pose_sigma_s = p.NonNegative("pose_sigma_s", c.preprocess.pose_sigma_s);
    c.preprocess.wrench_sigma_s = p.NonNegative("wrench_sigma_s", c.preprocess.wrench_sigma_s);
    c.preprocess.f_thresh = p.NonNegative("f_thresh_n", 0.0);
    c.preprocess.m_thresh = p.NonNegative("m_thresh_nm", 0.0);
    c.preprocess.omega_thresh = p.NonNegative("omega_thresh_rad_s", 0.0);
    c.preprocess.v_thresh = p.NonNegative("v_thresh_m_s", 0.0);
    c.preprocess.segment = p.Bool("segment", true);
    p.Finish();
  }
  if (o.Has("asip")) {
    StrictObject a = o.Object("asip");
    c.pipeline.epsilon = a.NonNegative("epsilon", 0.0);
    c.pipeline.p0 = a.Vector3("p0_m", Vec3::Zero());
    a.Finish();
  }
  if (o.Has("weighting")) {
    StrictObject w = o.Object("weighting");
    auto& wc = c.pipeline.weighting;
    wc.enabled = w.Bool("enabled", false);
    wc.omega_ref = w.Positive("omega_ref_rad_s", wc.omega_ref);
    wc.v_ref = w.Positive("v_ref_m_s", wc.v_ref);
    wc.f_ref = w.Positive("f_ref_n", wc.f_ref);
    wc.m_ref = w.Positive("m_ref_nm", wc.m_ref);
    w.Finish();
  }
  if (o.Has("rotation_average")) {
    StrictObject r = o.Object("rotation_average");
    c.pipeline.rotation_tol = r.Positive("tol_rad", c.pipeline.rotation_tol);
    r.Finish();
  }
  if (o.Has("resample")) {
    StrictObject r = o.Object("resample");
    const int64_t n = r.Integer("samples", 100);
    if (n < 2) ThrowInvalid("field 'resample.samples' must be >= 2");
    c.samples = static_cast<size_t>(n);
    c.spline_lambda = r.NonNegative("spline_lambda", 0.0);
    r.Finish();
  }
  c.gravity_compensated = o.Bool("gravity_compensated", true);
  o.Finish();
  return c;
}

Json DeriveConfig::ToJson() const {
  const auto& w = pipeline.weighting;
  return {
      {"preprocess",
       {{"pose_sigma_s", preprocess.pose_sigma_s},
        {"wrench_sigma_s", preprocess.wrench_sigma_s},
        {"f_thresh_n", preprocess.f_thresh},
        {"m_thresh_nm", preprocess.m_thresh},
        {"omega_thresh_rad_s", preprocess.omega_thresh},
        {"v_thresh_m_s", preprocess.v_thresh},
        {"segment", preprocess.segment}}},
      {"asip", {{"epsilon", pipeline.epsilon}, {"p0_m", taskframe::ToJson(pipeline.p0)}}},
      {"weighting",
       {{"enabled", w.enabled},
        {"omega_ref_rad_s", w.omega_ref},
        {"v_ref_m_s", w.v_ref},
        {"f_ref_n", w.f_ref},
        {"m_ref_nm", w.m_ref}}},
      {"rotation_average", {{"tol_rad", pipeline.rotation_tol}}},
      {"resample", {{"samples", samples}, {"spline_lambda", spline_lambda}}},
      {"gravity_compensated", gravity_compensated}};
}

Json TaskFrameToJson(const TaskFrame& f) {
  const auto& o = f.origin;
  const auto& r = f.orientation;
  return {{"origin_viewpoint", ToString(o.viewpoint)},
          {"origin_m", ToJson(o.origin)},
          {"origin_covariance_m2", ToJson(o.covariance)},
          {"motion_model", ToString(o.motion_model)},
          {"wrench_model", ToString(o.wrench_model)},
          {"orientation_viewpoint", ToString(r.viewpoint)},
          {"rotation", ToJson(r.rotation)},
          {"orientation_covariance", ToJson(r.covariance)},
          {"motion_vector", ToString(r.motion_vector)},
          {"wrench_vector", ToString(r.wrench_vector)},
          {"progress", ToString(f.progress)},
          {"weighting_applied", r.weighting_applied},
          {"ratios",
           {{"origin_viewpoint", RatioToJson(o.viewpoint_ratio)},
            {"motion_model", RatioToJson(o.motion_ratio)},
            {"wrench_model", RatioToJson(o.wrench_ratio)},
            {"orientation_viewpoint", RatioToJson(r.ratio)}}}};
}

TaskFrame TaskFrameFromJson(const Json& j) {
  StrictObject o(j, "task_frame");
  TaskFrame f;
  f.origin.viewpoint = FrameTagFromString(o.String("origin_viewpoint"));
  f.origin.origin = o.Vector3("origin_m");
  f.origin.covariance = Mat3FromJson(o.Raw("origin_covariance_m2"), "task_frame.origin_covariance_m2");
  f.origin.motion_model = ScrewModelFromString(o.String("motion_model"));
  f.origin.wrench_model = ScrewModelFromString(o.String("wrench_model"));
  f.orientation.viewpoint = FrameTagFromString(o.String("orientation_viewpoint"));
  f.orientation.rotation = Mat3FromJson(o.Raw("rotation"), "task_frame.rotation");
  if (!IsRotation(f.orientation.rotation, 1e-6))
    ThrowInvalid("task_frame.rotation is not a rotation matrix");
  f.orientation.covariance =
      Mat3FromJson(o.Raw("orientation_covariance"), "task_frame.orientation_covariance");
  f.orientation.motion_vector = MotionVectorFromString(o.String("motion_vector"));
  f.orientation.wrench_vector = WrenchVectorFromString(o.String("wrench_vector"));
  f.progress = ProgressKindFromString(o.String("progress"));
  f.orientation.weighting_applied = o.Bool("weighting_applied", false);
  StrictObject r = o.Object("ratios");
  f.origin.viewpoint_ratio = RatioFromJson(r.Raw("origin_viewpoint"), "ratios.origin_viewpoint");
  f.origin.motion_ratio = RatioFromJson(r.Raw("motion_model"), "ratios.motion_model");
  f.origin.wrench_ratio = RatioFromJson(r.Raw("wrench_model"), "ratios.wrench_model");
  f.orientation.ratio = RatioFromJson(r.Raw("orientation_viewpoint"), "ratios.orientation_viewpoint");
  r.Finish();
  o.Finish();
  return f;
}

Json TaskFrameReport(const TaskFrame& f) {
  Json origin_candidates = Json::array();
  for (const auto& c : f.origin.candidates)
    origin_candidates.push_back({{"viewpoint", ToString(c.viewpoint)},
                                 {"screw", ToString(c.kind)},
                                 {"model", ToString(c.model)},
                                 {"det_m6", c.det},
                                 {"asip", AsipToJson(c.asip)}});
  Json fused = Json::array();
  for (const auto& fo : f.origin.fused) {
    if (!fo) continue;
    fused.push_back({{"viewpoint", ToString(fo->viewpoint)},
                     {"point_m", ToJson(fo->point)},
                     {"covariance_m2", ToJson(fo->covariance)},
                     {"det_m6", fo->det},
                     {"motion_model", ToString(fo->motion_model)},
                     {"wrench_model", ToString(fo->wrench_model)},
                     {"motion_ratio", RatioToJson(fo->motion_ratio)},
                     {"wrench_ratio", RatioToJson(fo->wrench_ratio)}});
  }
  Json orient_candidates = Json::array();
  for (const auto& c : f.orientation.candidates)
    orient_candidates.push_back(
        {{"viewpoint", ToString(c.viewpoint)},
         {"vector", c.is_motion ? ToString(f.orientation.motion_vector)
                                : ToString(f.orientation.wrench_vector)},
         {"frame", ToJson(c.avof.frame)},
         {"aligned", ToJson(c.aligned)},
         {"avof_covariance", ToJson(c.avof.covariance)},
         {"covariance", ToJson(c.covariance)},
         {"singular_values", ToJson(c.avof.singular_values)},
         {"mean_sq_norm", c.avof.mean_sq_norm},
         {"det", PsdDeterminant(c.covariance)}});
  Json averaged = Json::array();
  for (const auto& a : f.orientation.averaged) {
    if (!a) continue;
    averaged.push_back({{"viewpoint", ToString(a->viewpoint)},
                        {"rotation", ToJson(a->rotation)},
                        {"covariance", ToJson(a->covariance)},
                        {"det", a->det},
                        {"iterations", a->iterations}});
  }
  return {{"task_frame", TaskFrameToJson(f)},
          {"origin_candidates", origin_candidates},
          {"fused_origins", fused},
          {"orientation_candidates", orient_candidates},
          {"averaged_orientations", averaged}};
}

Json TaskModel::ToJson() const {
  Json grid = Json::array(), pose = Json::array(), twist = Json::array(), wrench = Json::array();
  for (size_t j = 0; j < ref.grid.size(); ++j) {
    grid.push_back(ref.grid[j]);
    const auto& p = ref.positions[j];
    const auto& q = ref.quaternions[j];
    pose.push_back({p(0), p(1), p(2), q(0), q(1), q(2), q(3)});
    Json t = Json::array(), w = Json::array();
    for (int c = 0; c < 6; ++c) {
      t.push_back(ref.twists[j](c));
      w.push_back(ref.wrenches[j](c));
    }
    twist.push_back(t);
    wrench.push_back(w);
  }
  return {{"task_frame", TaskFrameToJson(frame)},
          {"grid", grid},
          {"pose_ref", {{"columns", "px,py,pz,qw,qx,qy,qz"}, {"values", pose}}},
          {"twist_ref", {{"columns", "wx,wy,wz,vx,vy,vz (per unit progress)"}, {"values", twist}}},
          {"wrench_ref", {{"columns", "fx,fy,fz,mx,my,mz"}, {"values", wrench}}},
          {"xi_max_avg", ref.xi_max_avg},
          {"nominal_rate", ref.nominal_rate},
          {"provenance", provenance}};
}

TaskModel TaskModel::FromJson(const Json& j) {
  StrictObject o(j, "");
  TaskModel m;
  m.frame = TaskFrameFromJson(o.Raw("task_frame"));
  const Json& grid = o.Raw("grid");
  if (!grid.is_array() || grid.size() < 2) ThrowInvalid("field 'grid' must hold >= 2 values");
  auto values = [&](const std::string& key, size_t width) {
    StrictObject s = o.Object(key);
    s.String("columns");
    const Json& v = s.Raw("values");
    s.Finish();
    if (!v.is_array() || v.size() != grid.size())
      ThrowInvalid("field '" + key + ".values' must match the grid length");
    for (const auto& row : v)
      if (!row.is_array() || row.size() != width)
        ThrowInvalid("field '" + key + ".values' rows must hold " + std::to_string(width) + " numbers");
    return v;
  };
  const Json pose = values("pose_ref", 7);
  const Json twist = values("twist_ref", 6);
  const Json wrench = values("wrench_ref", 6);
  double prev = -1;
  for (size_t k = 0; k < grid.size(); ++k) {
    const double g = NumberFromJson(grid[k], "grid");
    if (!(g > prev)) ThrowInvalid("field 'grid' must be strictly increasing");
    prev = g;
    m.ref.grid.push_back(g);
    m.ref.positions.emplace_back(pose[k][0].get<double>(), pose[k][1].get<double>(),
                                 pose[k][2].get<double>());
    Eigen::Vector4d q(pose[k][3].get<double>(), pose[k][4].get<double>(),
                      pose[k][5].get<double>(), pose[k][6].get<double>());
    if (std::abs(q.norm() - 1.0) > 1e-6) ThrowInvalid("pose_ref quaternion not unit norm");
    m.ref.quaternions.push_back(q.normalized());
    Vec6 t, w;
    for (int c = 0; c < 6; ++c) {
      t(c) = twist[k][c].get<double>();
      w(c) = wrench[k][c].get<double>();
    }
    m.ref.twists.push_back(t);
    m.ref.wrenches.push_back(w);
  }
  if (m.ref.grid.front() != 0.0 || m.ref.grid.back() != 1.0)
    ThrowInvalid("field 'grid' must span [0, 1]");
  m.ref.xi_max_avg = o.Positive("xi_max_avg");
  m.ref.nominal_rate = o.Positive("nominal_rate");
  m.provenance = o.Has("provenance") ? o.Raw("provenance") : Json::object();
  o.Finish();
  return m;
}

DeriveResult RunDerive(const std::vector<DemoTrial>& demos, const DeriveConfig& cfg) {
  if (demos.empty()) ThrowInvalid("derive: no trials");
  if (!cfg.gravity_compensated)
    ThrowInvalid("derive: wrenches must be gravity compensated upstream");
  DeriveResult r;
  r.batch.gravity_compensated = cfg.gravity_compensated;
  for (const auto& d : demos) r.batch.trials.push_back(Preprocess(d, cfg.preprocess));
  r.frame = DeriveTaskFrame(r.batch, cfg.pipeline);

  std::vector<ReparamTrial> rep;
  for (const auto& t : r.batch.trials)
    rep.push_back(Reparameterize(ExpressInTaskFrame(t, r.frame), r.frame.progress, cfg.samples));
  r.model.frame = r.frame;
  r.model.ref = AverageTrials(rep, cfg.spline_lambda);
  r.model.provenance = {{"config", cfg.ToJson()}};
  return r;
}

}  // namespace taskframe
