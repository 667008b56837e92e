#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "taskframe/geometry.hpp"
#include "taskframe/statistics.hpp"
#include "taskframe/trial.hpp"

namespace taskframe {

// Model 1: minimal moment at a point (pure rotation / pure force).
// Model 2: constant moment at a point (constant translation / constant moment).
enum class ScrewModel { kModel1, kModel2 };
enum class MotionVector { kOmega, kV };
enum class WrenchVector { kForce, kMoment };
enum class ProgressKind { kRotationAngle, kArcLength };

std::string_view ToString(ScrewModel m);
std::string_view ToString(MotionVector m);
std::string_view ToString(WrenchVector m);
std::string_view ToString(ProgressKind m);
ScrewModel ScrewModelFromString(std::string_view s);
MotionVector MotionVectorFromString(std::string_view s);
WrenchVector WrenchVectorFromString(std::string_view s);
ProgressKind ProgressKindFromString(std::string_view s);

// sqrt(max det / min det). Infinite when the smaller determinant vanishes;
// both_degenerate is set when both do.
struct Ratio {
  double value = 1.0;
  bool both_degenerate = false;
};
Ratio SignificanceRatio(const Mat3& c1, const Mat3& c2);

// Determinant of a PSD matrix, clamped at zero against round-off.
double PsdDeterminant(const Mat3& c);

struct OriginCandidate {
  FrameTag viewpoint;
  ScrewKind kind;  // kTwist or kWrench
  ScrewModel model;
  AsipResult asip;
  double det;
};

struct FusedOrigin {
  FrameTag viewpoint;
  Vec3 point;
  Mat3 covariance;
  double det;
  ScrewModel motion_model;
  ScrewModel wrench_model;
  Ratio motion_ratio;
  Ratio wrench_ratio;
};

struct OriginDecision {
  FrameTag viewpoint = FrameTag::kTool;
  Vec3 origin = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  ScrewModel motion_model = ScrewModel::kModel1;
  ScrewModel wrench_model = ScrewModel::kModel1;
  Ratio viewpoint_ratio, motion_ratio, wrench_ratio;
  // Audit trail: 8 ASIP candidates (world then tool; twist, twist-mean,
  // wrench, wrench-mean) and the two per-viewpoint fused origins.
  std::vector<OriginCandidate> candidates;
  std::array<std::optional<FusedOrigin>, 2> fused;  // [world, tool]
};

struct VectorsOfInterest {
  MotionVector motion;
  WrenchVector wrench;
  ProgressKind progress;
};

struct WeightingConfig {
  bool enabled = false;
  double omega_ref = 0.05;  // rad/s
  double v_ref = 0.005;     // m/s
  double f_ref = 1.0;       // N
  double m_ref = 0.1;       // N m
  void Validate() const;
};

struct OrientationCandidate {
  FrameTag viewpoint;
  bool is_motion;
  AvofResult avof;
  Mat3 aligned;          // after alignment (motion candidate unchanged)
  Mat3 covariance;       // possibly reweighted
};

struct AveragedOrientation {
  FrameTag viewpoint;
  Mat3 rotation;
  Mat3 covariance;
  double det;
  int iterations;
};

struct OrientationDecision {
  FrameTag viewpoint = FrameTag::kTool;
  Mat3 rotation = Mat3::Identity();
  Mat3 covariance = Mat3::Zero();
  MotionVector motion_vector = MotionVector::kOmega;
  WrenchVector wrench_vector = WrenchVector::kForce;
  Ratio ratio;
  bool weighting_applied = false;
  std::vector<OrientationCandidate> candidates;  // world motion/wrench, tool motion/wrench
  std::array<std::optional<AveragedOrientation>, 2> averaged;
};

struct TaskFrame {
  OriginDecision origin;
  OrientationDecision orientation;
  ProgressKind progress = ProgressKind::kRotationAngle;
};

struct PipelineConfig {
  double epsilon = 0.0;
  Vec3 p0 = Vec3::Zero();
  WeightingConfig weighting;
  double rotation_tol = 1e-10;
};

// Fuses two point estimates with (possibly singular) covariances in
// information form; falls back to the plain mean in directions where both
// covariances vanish.
void FuseOrigins(const Vec3& p1, const Mat3& c1, const Vec3& p2, const Mat3& c2,
                 Vec3* p, Mat3* c);

OriginDecision DeriveOrigin(const TrialBatch& batch, const PipelineConfig& cfg = {});

VectorsOfInterest SelectVectorsOfInterest(ScrewModel motion, ScrewModel wrench);
VectorsOfInterest SelectVectorsOfInterest(const OriginDecision& origin);

// Greedy column matching of u2 onto u1. Returns r2 = u2 * P.
Mat3 AlignFrames(const Mat3& u1, const Mat3& u2, Mat3* permutation = nullptr);

struct RotationAverage {
  Mat3 rotation;
  Mat3 covariance;
  int iterations;
  double last_step;
};
RotationAverage AverageRotations(const Mat3& r1, const Mat3& r2, const Mat3& c1,
                                 const Mat3& c2, double tol = 1e-10,
                                 int max_iterations = 100);

// Motion / wrench vectors of interest of every sample, in a viewpoint, with
// v and m referred to the chosen origin.
std::vector<Vec3> VectorsInViewpoint(const TrialBatch& batch,
                                     const OriginDecision& origin,
                                     FrameTag view, bool motion,
                                     const VectorsOfInterest& voi);

OrientationDecision DeriveOrientation(const TrialBatch& batch,
                                      const OriginDecision& origin,
                                      const VectorsOfInterest& voi,
                                      const PipelineConfig& cfg = {});

TaskFrame DeriveTaskFrame(const TrialBatch& batch, const PipelineConfig& cfg = {});

// T_tf^ref from origin and orientation decisions. tool_in_world is the
// instantaneous T_tl^w, required whenever a viewpoint differs from ref.
Pose AssembleTaskFrame(const OriginDecision& origin,
                       const OrientationDecision& orientation, FrameTag ref,
                       const Pose* tool_in_world = nullptr);
Pose AssembleTaskFrame(FrameTag origin_view, const Vec3& origin,
                       FrameTag orientation_view, const Mat3& rotation,
                       FrameTag ref, const Pose* tool_in_world = nullptr);

}  // namespace taskframe
