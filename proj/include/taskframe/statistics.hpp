#pragma once

#include <span>
#include <vector>

#include "taskframe/geometry.hpp"

namespace taskframe {

struct AvofResult {
  Mat3 frame;            // U_avof, columns sorted by decreasing singular value
  Mat3 covariance;       // C_c / trace(C_c)
  Vec3 singular_values;  // sigma_1^2 >= sigma_2^2 >= sigma_3^2
  double mean_sq_norm;   // trace(C_c)
};

struct AsipResult {
  Vec3 point;
  Mat3 covariance;
  double sigma_hat_sq;
  Mat3 singular_vectors;  // of the covariance, most uncertain direction first
  Vec3 singular_values;
};

// Uncentered covariance C_c = 1/N sum c c^T.
Mat3 UncenteredCovariance(std::span<const Vec3> vectors);

// Average vector orientation frame. Throws kNumerical "degenerate vector set"
// when all vectors vanish.
AvofResult Avof(std::span<const Vec3> vectors);

// Average screw-axes intersection point of screws of one kind, regularized
// towards p0 with weight epsilon.
AsipResult Asip(std::span<const Screw> screws, double epsilon = 0.0,
                const Vec3& p0 = Vec3::Zero());

// Cost 1/N sum |a x p + b|^2 + eps |p - p0|^2.
double AsipCost(std::span<const Screw> screws, const Vec3& p, double epsilon = 0.0,
                const Vec3& p0 = Vec3::Zero());

// s_i - mean(s).
std::vector<Screw> MeanSubtract(std::span<const Screw> screws);

std::vector<Vec3> DirectionalParts(std::span<const Screw> screws);
std::vector<Vec3> MomentParts(std::span<const Screw> screws);

struct AvofAsipRelation {
  Mat3 asip_covariance;
  Mat3 predicted_covariance;  // sigma^2 / tr(C_c) * (I - C_avof)^-1
  double max_relative_deviation;
  double max_singular_vector_deviation;  // up to sign and order
};

// Checks that AVOF on the directional parts and ASIP (epsilon = 0) share
// their directions of variation and the closed-form covariance link.
AvofAsipRelation CheckAvofAsipRelation(std::span<const Screw> screws);

}  // namespace taskframe
