#include "taskframe/pipeline.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "taskframe/error.hpp"

namespace taskframe {

std::string_view ToString(ScrewModel m) {
  return m == ScrewModel::kModel1 ? "model1" : "model2";
}
std::string_view ToString(MotionVector m) {
  return m == MotionVector::kOmega ? "omega" : "v";
}
std::string_view ToString(WrenchVector m) {
  return m == WrenchVector::kForce ? "f" : "m";
}
std::string_view ToString(ProgressKind m) {
  return m == ProgressKind::kRotationAngle ? "rotation_angle" : "arc_length";
}

ScrewModel ScrewModelFromString(std::string_view s) {
  if (s == "model1") return ScrewModel::kModel1;
  if (s == "model2") return ScrewModel::kModel2;
  ThrowInvalid("unknown model '" + std::string(s) + "'");
}
MotionVector MotionVectorFromString(std::string_view s) {
  if (s == "omega") return MotionVector::kOmega;
  if (s == "v") return MotionVector::kV;
  ThrowInvalid("unknown motion vector '" + std::string(s) + "'");
}
WrenchVector WrenchVectorFromString(std::string_view s) {
  if (s == "f") return WrenchVector::kForce;
  if (s == "m") return WrenchVector::kMoment;
  ThrowInvalid("unknown wrench vector '" + std::string(s) + "'");
}
ProgressKind ProgressKindFromString(std::string_view s) {
  if (s == "rotation_angle") return ProgressKind::kRotationAngle;
  if (s == "arc_length") return ProgressKind::kArcLength;
  ThrowInvalid("unknown progress kind '" + std::string(s) + "'");
}

double PsdDeterminant(const Mat3& c) {
  return std::max(0.0, (0.5 * (c + c.transpose())).determinant());
}

Ratio SignificanceRatio(const Mat3& c1, const Mat3& c2) {
  const double d1 = PsdDeterminant(c1), d2 = PsdDeterminant(c2);
  const double lo = std::min(d1, d2), hi = std::max(d1, d2);
  Ratio r;
  if (lo <= 0.0) {
    r.value = std::numeric_limits<double>::infinity();
    r.both_degenerate = hi <= 0.0;
    return r;
  }
  r.value = std::sqrt(hi / lo);
  return r;
}

void WeightingConfig::Validate() const {
  if (!enabled) return;
  if (!(omega_ref > 0 && v_ref > 0 && f_ref > 0 && m_ref > 0))
    ThrowInvalid("weighting reference magnitudes must be > 0");
}

namespace {

// Pseudo-inverse of a symmetric PSD matrix and the projector onto its
// null space.
Mat3 SymPinv(const Mat3& s, Mat3* null_proj) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (s + s.transpose()));
  const Vec3 ev = es.eigenvalues();
  const Mat3 u = es.eigenvectors();
  const double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Vec3 inv = Vec3::Zero();
  Vec3 nul = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    if (ev(i) > cut)
      inv(i) = 1.0 / ev(i);
    else
      nul(i) = 1.0;
  }
  if (null_proj) *null_proj = u * nul.asDiagonal() * u.transpose();
  return u * inv.asDiagonal() * u.transpose();
}

Mat3 Sym(const Mat3& m) { return 0.5 * (m + m.transpose()); }

std::string CandidateName(FrameTag view, ScrewKind kind, ScrewModel model) {
  return std::string(ToString(view)) + "/" + std::string(ToString(kind)) + "/" +
         std::string(ToString(model));
}

OriginCandidate RunCandidate(const std::vector<Screw>& screws, FrameTag view,
                             ScrewKind kind, ScrewModel model,
                             const PipelineConfig& cfg) {
  try {
    OriginCandidate c{view, kind, model, {}, 0.0};
    if (model == ScrewModel::kModel1) {
      c.asip = Asip(screws, cfg.epsilon, cfg.p0);
    } else {
      const auto ms = MeanSubtract(screws);
      c.asip = Asip(ms, cfg.epsilon, cfg.p0);
    }
    c.det = PsdDeterminant(c.asip.covariance);
    return c;
  } catch (const Error& e) {
    throw Error(e.code(),
                "origin candidate " + CandidateName(view, kind, model) + ": " +
                    e.what());
  }
}

}  // namespace

void FuseOrigins(const Vec3& p1, const Mat3& c1, const Vec3& p2, const Mat3& c2,
                 Vec3* p, Mat3* c) {
  // Equivalent to C = (C1^-1 + C2^-1)^-1, p = C (C1^-1 p1 + C2^-1 p2) when
  // both are invertible, but well defined for exact (zero-covariance) fits.
  Mat3 nul;
  const Mat3 s_inv = SymPinv(c1 + c2, &nul);
  *p = c2 * s_inv * p1 + c1 * s_inv * p2 + nul * (0.5 * (p1 + p2));
  *c = Sym(c1 * s_inv * c2);
}

OriginDecision DeriveOrigin(const TrialBatch& batch, const PipelineConfig& cfg) {
  if (batch.trials.empty()) ThrowInvalid("derive_origin: empty batch");
  OriginDecision d;
  const FrameTag views[2] = {FrameTag::kWorld, FrameTag::kTool};
  for (int vi = 0; vi < 2; ++vi) {
    const FrameTag view = views[vi];
    const auto tw = batch.ConcatTwists(view);
    const auto ws = batch.ConcatWrenches(view);
    const OriginCandidate t1 = RunCandidate(tw, view, ScrewKind::kTwist, ScrewModel::kModel1, cfg);
    const OriginCandidate t2 = RunCandidate(tw, view, ScrewKind::kTwist, ScrewModel::kModel2, cfg);
    const OriginCandidate w1 = RunCandidate(ws, view, ScrewKind::kWrench, ScrewModel::kModel1, cfg);
    const OriginCandidate w2 = RunCandidate(ws, view, ScrewKind::kWrench, ScrewModel::kModel2, cfg);
    d.candidates.insert(d.candidates.end(), {t1, t2, w1, w2});

    // ties go to Model 1
    const OriginCandidate& tw_best = (t2.det < t1.det) ? t2 : t1;
    const OriginCandidate& ws_best = (w2.det < w1.det) ? w2 : w1;
    FusedOrigin f;
    f.viewpoint = view;
    f.motion_model = tw_best.model;
    f.wrench_model = ws_best.model;
    f.motion_ratio = SignificanceRatio(t1.asip.covariance, t2.asip.covariance);
    f.wrench_ratio = SignificanceRatio(w1.asip.covariance, w2.asip.covariance);
    FuseOrigins(tw_best.asip.point, tw_best.asip.covariance, ws_best.asip.point,
                ws_best.asip.covariance, &f.point, &f.covariance);
    f.det = PsdDeterminant(f.covariance);
    d.fused[vi] = f;
  }
  const FusedOrigin& fw = *d.fused[0];
  const FusedOrigin& ft = *d.fused[1];
  const FusedOrigin& best = (fw.det < ft.det) ? fw : ft;  // ties go to tool
  d.viewpoint = best.viewpoint;
  d.origin = best.point;
  d.covariance = best.covariance;
  d.motion_model = best.motion_model;
  d.wrench_model = best.wrench_model;
  d.motion_ratio = best.motion_ratio;
  d.wrench_ratio = best.wrench_ratio;
  d.viewpoint_ratio = SignificanceRatio(fw.covariance, ft.covariance);
  return d;
}

VectorsOfInterest SelectVectorsOfInterest(ScrewModel motion, ScrewModel wrench) {
  VectorsOfInterest v;
  v.motion = motion == ScrewModel::kModel1 ? MotionVector::kOmega : MotionVector::kV;
  v.progress = motion == ScrewModel::kModel1 ? ProgressKind::kRotationAngle
                                             : ProgressKind::kArcLength;
  v.wrench = wrench == ScrewModel::kModel1 ? WrenchVector::kForce : WrenchVector::kMoment;
  return v;
}

VectorsOfInterest SelectVectorsOfInterest(const OriginDecision& origin) {
  return SelectVectorsOfInterest(origin.motion_model, origin.wrench_model);
}

Mat3 AlignFrames(const Mat3& u1, const Mat3& u2, Mat3* permutation) {
  Mat3 rd = u2.transpose() * u1;
  Mat3 p = Mat3::Zero();
  bool used[3] = {false, false, false};
  for (int c = 0; c < 3; ++c) {
    int r = -1;
    for (int k = 0; k < 3; ++k)
      if (!used[k] && (r < 0 || std::abs(rd(k, c)) > std::abs(rd(r, c)))) r = k;
    p(r, c) = rd(r, c) >= 0 ? 1.0 : -1.0;
    used[r] = true;
    rd.row(r).setZero();
  }
  // The greedy signs can produce a reflection; flip the weakest (last
  // assigned) column to stay right-handed.
  if (p.determinant() < 0) p.col(2) = -p.col(2);
  if (permutation) *permutation = p;
  return u2 * p;
}

RotationAverage AverageRotations(const Mat3& r1, const Mat3& r2, const Mat3& c1,
                                 const Mat3& c2, double tol, int max_iterations) {
  // Lambda_1 = (C1^-1 + C2^-1)^-1 C1^-1 = C2 (C1 + C2)^-1, written without
  // inverting C1, C2 so that exact (singular) estimates are admissible.
  Mat3 nul;
  const Mat3 s_inv = SymPinv(c1 + c2, &nul);
  const Mat3 l1 = c2 * s_inv + 0.5 * nul;
  const Mat3 l2 = c1 * s_inv + 0.5 * nul;

  RotationAverage out;
  out.covariance = Sym(c1 * s_inv * c2);
  Mat3 r = r1;
  double step = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < max_iterations) {
    ++it;
    const Vec3 delta = l1 * RotLog(r1 * r.transpose()) + l2 * RotLog(r2 * r.transpose());
    r = RotExp(delta) * r;
    step = delta.norm();
    if (step < tol) break;
  }
  if (!(step < tol))
    ThrowNumerical("rotation averaging did not converge after " +
                   std::to_string(max_iterations) +
                   " iterations (last |delta| = " + std::to_string(step) + ")");
  // re-orthonormalize against drift
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  out.iterations = it;
  out.last_step = step;
  return out;
}

std::vector<Vec3> VectorsInViewpoint(const TrialBatch& batch,
                                     const OriginDecision& origin, FrameTag view,
                                     bool motion, const VectorsOfInterest& voi) {
  std::vector<Vec3> out;
  out.reserve(batch.TotalSamples());
  const bool directional = motion ? voi.motion == MotionVector::kOmega
                                  : voi.wrench == WrenchVector::kForce;
  for (const Trial& tr : batch.trials) {
    const auto& screws = motion ? tr.Twists(view) : tr.Wrenches(view);
    for (size_t i = 0; i < tr.size(); ++i) {
      const Screw& s = screws[i];
      if (directional) {
        out.push_back(s.directional());
        continue;
      }
      Vec3 p = origin.origin;
      if (origin.viewpoint != view) {
        p = (view == FrameTag::kWorld) ? tr.poses[i].TransformPoint(origin.origin)
                                       : tr.poses[i].Inverse().TransformPoint(origin.origin);
      }
      out.push_back(ChangeReferencePoint(s, Vec3::Zero(), p).moment());
    }
  }
  return out;
}

OrientationDecision DeriveOrientation(const TrialBatch& batch,
                                      const OriginDecision& origin,
                                      const VectorsOfInterest& voi,
                                      const PipelineConfig& cfg) {
  cfg.weighting.Validate();
  OrientationDecision d;
  d.motion_vector = voi.motion;
  d.wrench_vector = voi.wrench;
  d.weighting_applied = cfg.weighting.enabled;
  const double motion_ref =
      voi.motion == MotionVector::kOmega ? cfg.weighting.omega_ref : cfg.weighting.v_ref;
  const double wrench_ref =
      voi.wrench == WrenchVector::kForce ? cfg.weighting.f_ref : cfg.weighting.m_ref;

  const FrameTag views[2] = {FrameTag::kWorld, FrameTag::kTool};
  for (int vi = 0; vi < 2; ++vi) {
    const FrameTag view = views[vi];
    const auto mv = VectorsInViewpoint(batch, origin, view, true, voi);
    const auto wv = VectorsInViewpoint(batch, origin, view, false, voi);
    OrientationCandidate cm{view, true, {}, Mat3::Identity(), Mat3::Zero()};
    OrientationCandidate cw{view, false, {}, Mat3::Identity(), Mat3::Zero()};
    try {
      cm.avof = Avof(mv);
    } catch (const Error& e) {
      throw Error(e.code(), "orientation candidate " + std::string(ToString(view)) +
                                "/" + std::string(ToString(voi.motion)) + ": " + e.what());
    }
    try {
      cw.avof = Avof(wv);
    } catch (const Error& e) {
      throw Error(e.code(), "orientation candidate " + std::string(ToString(view)) +
                                "/" + std::string(ToString(voi.wrench)) + ": " + e.what());
    }
    cm.aligned = cm.avof.frame;
    cw.aligned = AlignFrames(cm.aligned, cw.avof.frame);
    cm.covariance = cm.avof.covariance;
    cw.covariance = cw.avof.covariance;
    if (cfg.weighting.enabled) {
      cm.covariance *= motion_ref * motion_ref / cm.avof.mean_sq_norm;
      cw.covariance *= wrench_ref * wrench_ref / cw.avof.mean_sq_norm;
    }
    const RotationAverage avg = AverageRotations(cm.aligned, cw.aligned, cm.covariance,
                                                 cw.covariance, cfg.rotation_tol);
    d.candidates.push_back(cm);
    d.candidates.push_back(cw);
    d.averaged[vi] = AveragedOrientation{view, avg.rotation, avg.covariance,
                                         PsdDeterminant(avg.covariance), avg.iterations};
  }
  const AveragedOrientation& aw = *d.averaged[0];
  const AveragedOrientation& at = *d.averaged[1];
  const AveragedOrientation& best = (aw.det < at.det) ? aw : at;
  d.viewpoint = best.viewpoint;
  d.rotation = best.rotation;
  d.covariance = best.covariance;
  d.ratio = SignificanceRatio(aw.covariance, at.covariance);
  return d;
}

TaskFrame DeriveTaskFrame(const TrialBatch& batch, const PipelineConfig& cfg) {
  TaskFrame tf;
  tf.origin = DeriveOrigin(batch, cfg);
  const VectorsOfInterest voi = SelectVectorsOfInterest(tf.origin);
  tf.orientation = DeriveOrientation(batch, tf.origin, voi, cfg);
  tf.progress = voi.progress;
  return tf;
}

Pose AssembleTaskFrame(FrameTag origin_view, const Vec3& origin,
                       FrameTag orientation_view, const Mat3& rotation,
                       FrameTag ref, const Pose* tool_in_world) {
  auto view_in_ref = [&](FrameTag view) -> Pose {
    if (view == ref) return Pose::Identity();
    if (!tool_in_world)
      ThrowInvalid("task frame mixes viewpoints; instantaneous tool pose required");
    return view == FrameTag::kTool ? *tool_in_world : tool_in_world->Inverse();
  };
  const Pose o = view_in_ref(origin_view);
  const Pose r = view_in_ref(orientation_view);
  return {r.rotation * rotation, o.TransformPoint(origin)};
}

Pose AssembleTaskFrame(const OriginDecision& origin,
                       const OrientationDecision& orientation, FrameTag ref,
                       const Pose* tool_in_world) {
  return AssembleTaskFrame(origin.viewpoint, origin.origin, orientation.viewpoint,
                           orientation.rotation, ref, tool_in_world);
}

}  // namespace taskframe
