#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace taskframe {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// The two frames a task-frame origin or orientation can be rigidly fixed to.
enum class FrameTag { kWorld, kTool };

std::string_view ToString(FrameTag tag);
FrameTag FrameTagFromString(std::string_view text);

// Skew-symmetric cross-product matrix, [v]x * w == v.cross(w).
Mat3 Skew(const Vec3& v);
// Inverse of Skew; uses the antisymmetric part of m.
Vec3 Vee(const Mat3& m);

// True when r is orthonormal and right-handed within tol (elementwise).
bool IsRotation(const Mat3& r, double tol = 1e-9);

// Rotation matrix from a rotation vector (Rodrigues).
Mat3 RotExp(const Vec3& rotation_vector);
// Rotation vector with norm in [0, pi]. Stable at and near pi.
Vec3 RotLog(const Mat3& rotation);
// Geodesic angle between two rotations.
double RotationAngleBetween(const Mat3& a, const Mat3& b);

// Homogeneous transform of a frame b with respect to a frame a.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  Pose() = default;
  Pose(const Mat3& r, const Vec3& p) : rotation(r), position(p) {}

  static Pose Identity() { return {}; }
  static Pose Translation(const Vec3& p) { return {Mat3::Identity(), p}; }
  static Pose Rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  // Throws kInvalidInput if the upper-left block is not a rotation or the
  // bottom row is not (0, 0, 0, 1).
  static Pose FromMatrix(const Mat4& m);

  Mat4 Matrix() const;
  Pose Inverse() const;
  Vec3 TransformPoint(const Vec3& p) const { return rotation * p + position; }

  friend Pose operator*(const Pose& a, const Pose& b) {
    return {a.rotation * b.rotation, a.rotation * b.position + a.position};
  }
};

enum class ScrewKind { kTwist, kWrench, kDisplacement };

std::string_view ToString(ScrewKind kind);

// General screw (a, b^o): directional part and moment part about the origin
// of the expression frame. Twist = (omega, v^o), wrench = (f, m^o),
// displacement = (r, u^o). Arithmetic between different kinds throws.
class Screw {
 public:
  Screw(ScrewKind kind, const Vec3& directional, const Vec3& moment)
      : kind_(kind), directional_(directional), moment_(moment) {}

  static Screw Twist(const Vec3& omega, const Vec3& v) {
    return {ScrewKind::kTwist, omega, v};
  }
  static Screw Wrench(const Vec3& f, const Vec3& m) {
    return {ScrewKind::kWrench, f, m};
  }
  static Screw Displacement(const Vec3& r, const Vec3& u) {
    return {ScrewKind::kDisplacement, r, u};
  }
  static Screw Zero(ScrewKind kind) {
    return {kind, Vec3::Zero(), Vec3::Zero()};
  }
  static Screw FromVector(ScrewKind kind, const Vec6& v) {
    return {kind, v.head<3>(), v.tail<3>()};
  }

  ScrewKind kind() const { return kind_; }
  const Vec3& directional() const { return directional_; }
  const Vec3& moment() const { return moment_; }
  Vec6 Vector() const;

  Screw operator+(const Screw& other) const;
  Screw operator-(const Screw& other) const;
  Screw operator-() const { return {kind_, -directional_, -moment_}; }
  Screw operator*(double s) const {
    return {kind_, s * directional_, s * moment_};
  }
  friend Screw operator*(double s, const Screw& screw) { return screw * s; }

 private:
  void RequireSameKind(const Screw& other) const;

  ScrewKind kind_;
  Vec3 directional_;
  Vec3 moment_;
};

// T = exp([d]x) for a displacement screw d = (r, u^o).
Pose PoseExp(const Screw& displacement);
// Displacement screw of a pose; rotation angle may equal pi.
Screw PoseLog(const Pose& pose);

// Relative pose of b w.r.t. a, observed from frame c: T_ca^-1 * T_ba * T_ca.
Pose SimilarityTransform(const Pose& pose_b_in_a, const Pose& pose_c_in_a);

// 6x6 screw transformation matrix [[R, 0], [[p]x R, R]].
Mat6 ScrewTransformMatrix(const Pose& pose_b_in_a);
// Expresses a screw given in frame b in frame a; kind preserved.
Screw ScrewTransform(const Pose& pose_b_in_a, const Screw& screw_in_b);

// Moves the reference point of the moment part from `from` to `to`, all
// coordinates in one frame: b_to = b_from + a x (to - from).
Screw ChangeReferencePoint(const Screw& screw, const Vec3& from, const Vec3& to);

// World-frame twists [t]x = dT/dt * T^-1 from sampled poses. Second-order
// three-point differences in the interior and at both ends.
std::vector<Screw> DifferentiatePoses(std::span<const Pose> poses,
                                      std::span<const double> times);

}  // namespace taskframe
