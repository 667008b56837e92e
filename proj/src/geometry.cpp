#include "taskframe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "taskframe/error.hpp"

namespace taskframe {

std::string_view ToString(FrameTag tag) {
  return tag == FrameTag::kWorld ? "world" : "tool";
}

FrameTag FrameTagFromString(std::string_view text) {
  if (text == "world" || text == "w") return FrameTag::kWorld;
  if (text == "tool" || text == "tl") return FrameTag::kTool;
  ThrowInvalid("unknown frame tag '" + std::string(text) + "'");
}

std::string_view ToString(ScrewKind kind) {
  switch (kind) {
    case ScrewKind::kTwist: return "twist";
    case ScrewKind::kWrench: return "wrench";
    case ScrewKind::kDisplacement: return "displacement";
  }
  return "?";
}

Mat3 Skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

Vec3 Vee(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

bool IsRotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if (((r * r.transpose()) - Mat3::Identity()).cwiseAbs().maxCoeff() > tol)
    return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 RotExp(const Vec3& rv) {
  const double th2 = rv.squaredNorm();
  const double th = std::sqrt(th2);
  double a, b;  // sin(th)/th, (1-cos(th))/th^2
  if (th < 1e-4) {
    a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
    b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
  } else {
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / th2;
  }
  const Mat3 k = Skew(rv);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 RotLog(const Mat3& r) {
  const Vec3 w = Vee(r);  // sin(th) * axis
  const double s = w.norm();
  const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double th = std::atan2(s, c);

  if (th < 1e-5) {
    // th/sin(th) ~ 1 + th^2/6
    return (1.0 + th * th / 6.0) * w;
  }
  if (std::numbers::pi - th > 1e-6) {
    return (th / s) * w;
  }
  // Near pi: axis from the symmetric part, a a^T = (S - c I) / (1 - c).
  const Mat3 sym = 0.5 * (r + r.transpose());
  const Mat3 aat = (sym - c * Mat3::Identity()) / (1.0 - c);
  int k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(w) < 0) axis = -axis;
  return th * axis;
}

double RotationAngleBetween(const Mat3& a, const Mat3& b) {
  return RotLog(a.transpose() * b).norm();
}

Pose Pose::FromMatrix(const Mat4& m) {
  if (std::abs(m(3, 0)) > 1e-9 || std::abs(m(3, 1)) > 1e-9 ||
      std::abs(m(3, 2)) > 1e-9 || std::abs(m(3, 3) - 1.0) > 1e-9)
    ThrowInvalid("homogeneous matrix bottom row must be (0, 0, 0, 1)");
  const Mat3 r = m.topLeftCorner<3, 3>();
  if (!IsRotation(r)) ThrowInvalid("pose rotation block is not a rotation");
  return {r, m.topRightCorner<3, 1>()};
}

Mat4 Pose::Matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = position;
  return m;
}

Pose Pose::Inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -(rt * position)};
}

Vec6 Screw::Vector() const {
  Vec6 v;
  v << directional_, moment_;
  return v;
}

void Screw::RequireSameKind(const Screw& other) const {
  if (kind_ != other.kind_)
    ThrowInvalid("mixed-kind screw arithmetic: " + std::string(ToString(kind_)) +
                 " and " + std::string(ToString(other.kind_)));
}

Screw Screw::operator+(const Screw& o) const {
  RequireSameKind(o);
  return {kind_, directional_ + o.directional_, moment_ + o.moment_};
}

Screw Screw::operator-(const Screw& o) const {
  RequireSameKind(o);
  return {kind_, directional_ - o.directional_, moment_ - o.moment_};
}

namespace {

// Left Jacobian V of SO(3) and its inverse, used by the SE(3) exp/log.
Mat3 LeftJacobian(const Vec3& r) {
  const double th2 = r.squaredNorm();
  const double th = std::sqrt(th2);
  double b, c;  // (1-cos)/th^2, (th-sin)/th^3
  if (th < 1e-4) {
    b = 0.5 - th2 / 24.0;
    c = 1.0 / 6.0 - th2 / 120.0;
  } else {
    b = (1.0 - std::cos(th)) / th2;
    c = (th - std::sin(th)) / (th2 * th);
  }
  const Mat3 k = Skew(r);
  return Mat3::Identity() + b * k + c * k * k;
}

Mat3 LeftJacobianInverse(const Vec3& r) {
  const double th2 = r.squaredNorm();
  const double th = std::sqrt(th2);
  double e;
  if (th < 1e-4) {
    e = 1.0 / 12.0 + th2 / 720.0;
  } else {
    e = (1.0 - th * std::sin(th) / (2.0 * (1.0 - std::cos(th)))) / th2;
  }
  const Mat3 k = Skew(r);
  return Mat3::Identity() - 0.5 * k + e * k * k;
}

}  // namespace

Pose PoseExp(const Screw& d) {
  const Vec3& r = d.directional();
  return {RotExp(r), LeftJacobian(r) * d.moment()};
}

Screw PoseLog(const Pose& t) {
  const Vec3 r = RotLog(t.rotation);
  return Screw::Displacement(r, LeftJacobianInverse(r) * t.position);
}

Pose SimilarityTransform(const Pose& t_ba, const Pose& t_ca) {
  return t_ca.Inverse() * t_ba * t_ca;
}

Mat6 ScrewTransformMatrix(const Pose& t) {
  Mat6 s = Mat6::Zero();
  s.topLeftCorner<3, 3>() = t.rotation;
  s.bottomRightCorner<3, 3>() = t.rotation;
  s.bottomLeftCorner<3, 3>() = Skew(t.position) * t.rotation;
  return s;
}

Screw ScrewTransform(const Pose& t, const Screw& s) {
  const Vec3 a = t.rotation * s.directional();
  return {s.kind(), a, t.position.cross(a) + t.rotation * s.moment()};
}

Screw ChangeReferencePoint(const Screw& s, const Vec3& from, const Vec3& to) {
  return {s.kind(), s.directional(),
          s.moment() + s.directional().cross(to - from)};
}

std::vector<Screw> DifferentiatePoses(std::span<const Pose> poses,
                                      std::span<const double> times) {
  const size_t n = poses.size();
  if (n != times.size()) ThrowInvalid("poses and times differ in length");
  if (n < 3) ThrowInvalid("insufficient samples (need at least 3)");
  for (size_t i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1]))
      ThrowInvalid("sample times must be strictly increasing (index " +
                   std::to_string(i) + ")");

  std::vector<Screw> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    // Three-point stencil around i (shifted inward at the ends).
    size_t k0 = (i == 0) ? 0 : (i == n - 1 ? n - 3 : i - 1);
    const size_t idx[3] = {k0, k0 + 1, k0 + 2};
    const double t = times[i];
    double w[3];
    for (int a = 0; a < 3; ++a) {
      // derivative of the Lagrange basis polynomial l_a at t
      const double ta = times[idx[a]];
      double denom = 1.0, num = 0.0;
      for (int b = 0; b < 3; ++b) {
        if (b == a) continue;
        denom *= ta - times[idx[b]];
        double prod = 1.0;
        for (int c = 0; c < 3; ++c)
          if (c != a && c != b) prod *= t - times[idx[c]];
        num += prod;
      }
      w[a] = num / denom;
    }
    Vec3 omega = Vec3::Zero(), pdot = Vec3::Zero();
    const Mat3 ri_t = poses[i].rotation.transpose();
    for (int a = 0; a < 3; ++a) {
      const Pose& pk = poses[idx[a]];
      omega += w[a] * RotLog(pk.rotation * ri_t);
      pdot += w[a] * pk.position;
    }
    out.push_back(
        Screw::Twist(omega, pdot - omega.cross(poses[i].position)));
  }
  return out;
}

}  // namespace taskframe
