#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "doctest.h"
#include "taskframe/error.hpp"
#include "taskframe/pipeline.hpp"
#include "taskframe/synthetic.hpp"
#include "taskframe/trajectory.hpp"

using namespace taskframe;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

TrialBatch MakeBatch(const ScenarioSpec& spec, double sigma_s = 0.0) {
  PreprocessConfig pc;
  pc.pose_sigma_s = sigma_s;
  pc.wrench_sigma_s = sigma_s;
  TrialBatch b;
  for (const DemoTrial& d : Generate(spec).trials) b.trials.push_back(Preprocess(d, pc));
  return b;
}

ScenarioSpec Revolute(uint64_t seed, bool noisy) {
  ScenarioSpec s;
  s.motion.anchor_frame = FrameTag::kTool;
  s.motion.anchor = Vec3(0.3, 0.0, 0.2);
  s.motion.axis = Vec3::UnitZ();
  s.wrench.anchor_frame = FrameTag::kTool;
  s.wrench.anchor = s.motion.anchor;
  s.wrench.axis = Vec3::UnitX();
  s.variation.world_placement.max_angle = 0.5;
  s.variation.world_placement.box = Vec3::Constant(0.2);
  if (noisy) {
    s.noise.pose_pos = 1e-3;
    s.noise.pose_rot = 0.2 * kDeg;
    s.noise.wrench_f = 0.2;
    s.noise.wrench_m = 0.02;
  }
  s.seed = seed;
  return s;
}

Mat3 Rz(double a) { return RotExp(Vec3(0, 0, a)); }

// All 24 right-handed signed column permutations of u.
std::vector<Mat3> SignedPermutations(const Mat3& u) {
  std::vector<Mat3> out;
  std::array<int, 3> idx{0, 1, 2};
  do {
    for (int s = 0; s < 8; ++s) {
      Mat3 m;
      for (int c = 0; c < 3; ++c) m.col(c) = ((s >> c) & 1 ? -1.0 : 1.0) * u.col(idx[c]);
      if (m.determinant() > 0) out.push_back(m);
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

}  // namespace

TEST_CASE("significance_ratio") {
  const Mat3 a = Vec3(1, 2, 3).asDiagonal();
  CHECK(SignificanceRatio(a, a).value == doctest::Approx(1.0));
  CHECK(SignificanceRatio(16.0 * Mat3::Identity(), Vec3(1, 1, 1).asDiagonal()).value ==
        doctest::Approx(std::sqrt(16.0 * 16 * 16)));
  CHECK(SignificanceRatio(Vec3(4, 2, 2).asDiagonal(), Vec3(1, 1, 1).asDiagonal()).value ==
        doctest::Approx(4.0));
  CHECK(SignificanceRatio(a, Vec3(2, 2, 2).asDiagonal()).value ==
        doctest::Approx(std::sqrt(8.0 / 6.0)).epsilon(1e-12));
  const Ratio inf = SignificanceRatio(a, Mat3::Zero());
  CHECK(std::isinf(inf.value));
  CHECK_FALSE(inf.both_degenerate);
  const Ratio both = SignificanceRatio(Mat3::Zero(), Mat3::Zero());
  CHECK(std::isinf(both.value));
  CHECK(both.both_degenerate);
}

TEST_CASE("select_vectors_of_interest covers the table") {
  auto v = SelectVectorsOfInterest(ScrewModel::kModel1, ScrewModel::kModel1);
  CHECK(v.motion == MotionVector::kOmega);
  CHECK(v.wrench == WrenchVector::kForce);
  CHECK(v.progress == ProgressKind::kRotationAngle);
  v = SelectVectorsOfInterest(ScrewModel::kModel2, ScrewModel::kModel2);
  CHECK(v.motion == MotionVector::kV);
  CHECK(v.wrench == WrenchVector::kMoment);
  CHECK(v.progress == ProgressKind::kArcLength);
  v = SelectVectorsOfInterest(ScrewModel::kModel2, ScrewModel::kModel1);
  CHECK(v.motion == MotionVector::kV);
  CHECK(v.wrench == WrenchVector::kForce);
  CHECK(v.progress == ProgressKind::kArcLength);
  v = SelectVectorsOfInterest(ScrewModel::kModel1, ScrewModel::kModel2);
  CHECK(v.motion == MotionVector::kOmega);
  CHECK(v.wrench == WrenchVector::kMoment);
  CHECK(v.progress == ProgressKind::kRotationAngle);
}

TEST_CASE("align_frames") {
  const Mat3 u = RotExp(Vec3(0.3, -0.8, 0.5));
  Mat3 p;
  CHECK((AlignFrames(u, u, &p) - u).norm() < 1e-15);
  CHECK((p - Mat3::Identity()).norm() < 1e-15);

  Mat3 cyc;
  cyc << u.col(1), u.col(2), u.col(0);
  CHECK((AlignFrames(u, cyc) - u).norm() < 1e-12);

  // Greedy matching is optimal when u2 is a relabelled perturbation of u1.
  int greedy_optimal = 0, random_optimal = 0;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  auto optimal = [](const Mat3& u1, const Mat3& u2) {
    const Mat3 r2 = AlignFrames(u1, u2);
    CHECK(IsRotation(r2));
    double best = std::numeric_limits<double>::infinity();
    for (const Mat3& m : SignedPermutations(u2)) best = std::min(best, RotationAngleBetween(u1, m));
    return RotationAngleBetween(u1, r2) <= best + 1e-12;
  };
  for (int i = 0; i < 100; ++i) {
    const Mat3 u1 = RotExp(Vec3(n(rng), n(rng), n(rng)));
    const Mat3 near = RotExp(0.3 * Vec3(n(rng), n(rng), n(rng))) * u1;
    const std::vector<Mat3> relabelled = SignedPermutations(near);
    if (optimal(u1, relabelled[static_cast<size_t>(i) % relabelled.size()])) ++greedy_optimal;
    if (optimal(u1, RotExp(Vec3(n(rng), n(rng), n(rng))))) ++random_optimal;
  }
  MESSAGE("greedy alignment optimal on " << greedy_optimal << "/100 perturbed and "
                                         << random_optimal << "/100 unrelated pairs");
  CHECK(greedy_optimal >= 95);
}

TEST_CASE("average_rotations") {
  const Mat3 i3 = Mat3::Identity();
  const Mat3 r = RotExp(Vec3(0.2, 0.1, -0.4));
  const RotationAverage same = AverageRotations(r, r, i3, i3);
  CHECK((same.rotation - r).norm() < 1e-12);
  CHECK(same.iterations <= 1);

  const RotationAverage mid = AverageRotations(i3, Rz(0.4), i3, i3);
  CHECK(RotationAngleBetween(mid.rotation, Rz(0.2)) < 1e-10);
  CHECK((mid.covariance - 0.5 * i3).norm() < 1e-12);

  const RotationAverage dom = AverageRotations(r, Rz(0.4), 1e-6 * i3, i3);
  CHECK(RotationAngleBetween(dom.rotation, r) < 1e-3);

  const Mat3 c1 = Vec3(1, 2, 0.5).asDiagonal(), c2 = Vec3(0.3, 1, 4).asDiagonal();
  const Mat3 r2 = RotExp(Vec3(-0.3, 0.4, 0.2));
  const RotationAverage ab = AverageRotations(r, r2, c1, c2);
  const RotationAverage ba = AverageRotations(r2, r, c2, c1);
  CHECK(RotationAngleBetween(ab.rotation, ba.rotation) < 1e-9);
}

TEST_CASE("fuse_origins") {
  Vec3 p;
  Mat3 c;
  FuseOrigins(Vec3(0, 0, 0), Mat3::Identity(), Vec3(2, 0, 0), Mat3::Identity(), &p, &c);
  CHECK((p - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((c - 0.5 * Mat3::Identity()).norm() < 1e-12);

  // A singular covariance pins its estimate in the constrained directions.
  FuseOrigins(Vec3(1, 1, 1), Vec3(0, 0, 1).asDiagonal(), Vec3(3, 3, 3), Mat3::Identity(), &p, &c);
  CHECK(std::abs(p.x() - 1.0) < 1e-9);
  CHECK(std::abs(p.y() - 1.0) < 1e-9);
  CHECK(std::abs(p.z() - 2.0) < 1e-9);
}

TEST_CASE("derive_origin: revolute analogue in the tool frame") {
  const ScenarioSpec spec = Revolute(41, true);
  const OriginDecision d = DeriveOrigin(MakeBatch(spec, 0.05));
  CHECK(d.viewpoint == FrameTag::kTool);
  CHECK(d.motion_model == ScrewModel::kModel1);
  CHECK(d.wrench_model == ScrewModel::kModel1);
  CHECK((d.origin - spec.motion.anchor).norm() < 5e-3);
  CHECK(d.viewpoint_ratio.value >= 1.0);
  CHECK(d.motion_ratio.value >= 1.0);
  CHECK(d.wrench_ratio.value >= 1.0);
  CHECK(d.candidates.size() == 8);
}

TEST_CASE("derive_origin: constant translation with a force through the tip") {
  ScenarioSpec spec = Revolute(42, true);
  spec.motion.model = MotionKind::kConstantTranslation;
  spec.motion.axis = Vec3::UnitX();
  spec.motion.omega_mag = 0.2;
  spec.motion.anchor = Vec3(0.0, 0.0, 0.15);
  spec.wrench.anchor = spec.motion.anchor;
  spec.wrench.axis = Vec3::UnitZ();
  const OriginDecision d = DeriveOrigin(MakeBatch(spec, 0.05));
  CHECK(d.motion_model == ScrewModel::kModel2);
  CHECK(d.wrench_model == ScrewModel::kModel1);
  CHECK(d.viewpoint == FrameTag::kTool);
  CHECK((d.origin - spec.motion.anchor).norm() < 5e-3);
}

TEST_CASE("derive_origin: exact model gives an infinite ratio") {
  const OriginDecision d = DeriveOrigin(MakeBatch(Revolute(43, false)));
  CHECK(d.viewpoint == FrameTag::kTool);
  CHECK(std::isinf(d.viewpoint_ratio.value));
}

TEST_CASE("derive_orientation: tool-fixed axes on a tumbling tool") {
  const ScenarioSpec spec = Revolute(44, true);
  const TrialBatch batch = MakeBatch(spec, 0.05);
  const TaskFrame tf = DeriveTaskFrame(batch);
  CHECK(tf.orientation.viewpoint == FrameTag::kTool);
  CHECK(IsRotation(tf.orientation.rotation, 1e-9));
  const OrientationCandidate& motion_tool = tf.orientation.candidates[2];
  REQUIRE(motion_tool.viewpoint == FrameTag::kTool);
  REQUIRE(motion_tool.is_motion);
  const double c = std::abs(motion_tool.avof.frame.col(0).dot(Vec3::UnitZ()));
  CHECK(std::acos(std::min(1.0, c)) < 2.0 * kDeg);
  CHECK(tf.progress == ProgressKind::kRotationAngle);
}

TEST_CASE("derive_orientation: weighting inflates a weak wrench") {
  ScenarioSpec spec = Revolute(45, false);
  spec.wrench.force_mag = 0.1;
  spec.wrench.cone = 0.6;
  const TrialBatch batch = MakeBatch(spec);
  const OriginDecision origin = DeriveOrigin(batch);
  const VectorsOfInterest voi = SelectVectorsOfInterest(origin);
  PipelineConfig plain, weighted;
  weighted.weighting.enabled = true;
  weighted.weighting.f_ref = 1.0;
  const OrientationDecision a = DeriveOrientation(batch, origin, voi, plain);
  const OrientationDecision b = DeriveOrientation(batch, origin, voi, weighted);
  CHECK(b.weighting_applied);

  const OrientationCandidate& wa = a.candidates[3];
  const OrientationCandidate& wb = b.candidates[3];
  REQUIRE_FALSE(wb.is_motion);
  // f_ref^2 / mean |f|^2 with |f| = 0.1 (0.85 + 0.15 cos)
  const double scale = 1.0 / wb.avof.mean_sq_norm;
  CHECK(scale == doctest::Approx(100.0 / (0.85 * 0.85 + 0.15 * 0.15 / 2)).epsilon(0.02));
  CHECK((wb.covariance - scale * wa.covariance).norm() < 1e-9 * scale);

  const double omega_ref = weighted.weighting.omega_ref;
  const OrientationCandidate& mb = b.candidates[2];
  CHECK((mb.covariance - omega_ref * omega_ref / mb.avof.mean_sq_norm * mb.avof.covariance)
            .norm() < 1e-12);

  // Independent recomputation of the weighted average.
  const RotationAverage avg =
      AverageRotations(mb.aligned, wb.aligned, mb.covariance, wb.covariance);
  CHECK(RotationAngleBetween(avg.rotation, b.averaged[1]->rotation) < 1e-9);
  CHECK(RotationAngleBetween(b.averaged[1]->rotation, mb.aligned) < 1.0 * kDeg);
}

TEST_CASE("assemble_task_frame") {
  const Vec3 o(0.1, 0.2, 0.3);
  const Mat3 r = RotExp(Vec3(0.1, -0.4, 0.7));
  const Pose tool(RotExp(Vec3(1.0, 0.2, -0.5)), Vec3(0.5, -0.3, 1.2));

  const Pose a = AssembleTaskFrame(FrameTag::kTool, o, FrameTag::kTool, r, FrameTag::kTool);
  CHECK((a.position - o).norm() < 1e-15);
  CHECK((a.rotation - r).norm() < 1e-15);

  CHECK_THROWS_AS(AssembleTaskFrame(FrameTag::kTool, o, FrameTag::kWorld, r, FrameTag::kTool),
                  Error);
  const Pose mixed =
      AssembleTaskFrame(FrameTag::kTool, o, FrameTag::kWorld, r, FrameTag::kTool, &tool);
  CHECK((mixed.rotation - tool.rotation.transpose() * r).norm() < 1e-12);
  CHECK((mixed.position - o).norm() < 1e-15);

  const Pose in_world =
      AssembleTaskFrame(FrameTag::kTool, o, FrameTag::kWorld, r, FrameTag::kWorld, &tool);
  const Pose back = tool.Inverse() * in_world;
  CHECK((back.Matrix() - mixed.Matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pipeline invariances") {
  const ScenarioSpec spec = Revolute(46, true);
  const TrialBatch batch = MakeBatch(spec, 0.05);
  const TaskFrame ref = DeriveTaskFrame(batch);

  SUBCASE("trial order") {
    TrialBatch p = batch;
    std::reverse(p.trials.begin(), p.trials.end());
    std::swap(p.trials[0], p.trials[2]);
    const TaskFrame t = DeriveTaskFrame(p);
    CHECK(t.origin.viewpoint == ref.origin.viewpoint);
    CHECK(t.orientation.viewpoint == ref.orientation.viewpoint);
    CHECK((t.origin.origin - ref.origin.origin).norm() < 1e-12);
    CHECK((t.orientation.rotation - ref.orientation.rotation).norm() < 1e-12);
  }

  SUBCASE("wrench scaling keeps decisions") {
    for (double k : {0.01, 7.0}) {
      TrialBatch s = batch;
      for (Trial& t : s.trials) {
        for (Screw& w : t.wrenches_world) w = k * w;
        for (Screw& w : t.wrenches_tool) w = k * w;
      }
      const TaskFrame t = DeriveTaskFrame(s);
      CHECK(t.origin.viewpoint == ref.origin.viewpoint);
      CHECK(t.origin.motion_model == ref.origin.motion_model);
      CHECK(t.origin.wrench_model == ref.origin.wrench_model);
      CHECK(t.orientation.viewpoint == ref.orientation.viewpoint);
    }
  }

  SUBCASE("world re-placement") {
    const Pose g(RotExp(Vec3(0.4, 1.1, -0.6)), Vec3(2.0, -1.0, 0.5));
    TrialBatch m = batch;
    for (Trial& t : m.trials) {
      for (Pose& p : t.poses) p = g * p;
      for (Screw& s : t.twists_world) s = ScrewTransform(g, s);
      for (Screw& s : t.wrenches_world) s = ScrewTransform(g, s);
    }
    const TaskFrame t = DeriveTaskFrame(m);
    CHECK(t.origin.viewpoint == FrameTag::kTool);
    CHECK((t.origin.origin - ref.origin.origin).norm() < 1e-9);
    CHECK((t.orientation.rotation - ref.orientation.rotation).norm() < 1e-9);
    REQUIRE(t.origin.fused[0].has_value());
    CHECK((t.origin.fused[0]->point - g.TransformPoint(ref.origin.fused[0]->point)).norm() <
          1e-9);
  }
}
