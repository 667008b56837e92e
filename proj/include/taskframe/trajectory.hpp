#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskframe/geometry.hpp"
#include "taskframe/pipeline.hpp"
#include "taskframe/trial.hpp"

namespace taskframe {

// A demonstration as recorded: tool poses T_tl^w and the interaction wrench
// in world coordinates with the moment about the world origin.
struct DemoTrial {
  std::string name;
  std::vector<double> times;
  std::vector<Pose> poses;
  std::vector<Screw> wrenches;
};

struct PreprocessConfig {
  double pose_sigma_s = 0.1;     // 0 disables
  double wrench_sigma_s = 0.05;  // 0 disables
  double f_thresh = 0.0;         // N
  double m_thresh = 0.0;         // N m
  double omega_thresh = 0.0;     // rad/s
  double v_thresh = 0.0;         // m/s
  bool segment = true;
  void Validate() const;
};

// Truncated (+-3 sigma) normalized Gaussian, sigma in samples.
std::vector<double> GaussianKernel(double sigma_samples);

// Gaussian moving average of each component; kernel renormalized at the ends.
std::vector<Vec6> SmoothSeries(std::span<const Vec6> series, double sigma_samples);
std::vector<Screw> SmoothWrench(std::span<const Screw> series, double sigma_samples);

// Gaussian moving average on SE(3): every sample is replaced by
// T_i exp(sum_k w_k log(T_i^-1 T_k)). Motions along a constant screw are
// left unchanged in the interior.
std::vector<Pose> SmoothPoses(std::span<const Pose> poses, double sigma_samples);

// Mean sampling interval.
double MeanStep(std::span<const double> times);

// Half-open [begin, end) index range of the contact segment.
std::pair<size_t, size_t> SegmentContact(std::span<const Screw> wrenches,
                                         std::span<const Screw> twists_world,
                                         std::span<const Pose> poses,
                                         const PreprocessConfig& cfg);

// Fills the tool-frame twists and wrenches from the world series.
void ExpandViewpoints(Trial& trial);

// Smoothing, differentiation, segmentation, viewpoint expansion.
Trial Preprocess(const DemoTrial& demo, const PreprocessConfig& cfg);

// Demonstration data re-expressed in the task frame: relative tool poses
// T_tl^tl_init observed from tf, and tf-expressed twists and wrenches.
struct ExpressedTrial {
  std::vector<double> times;
  std::vector<Pose> poses;
  std::vector<Screw> twists;
  std::vector<Screw> wrenches;
};

// T_tf^w at every sample.
std::vector<Pose> TaskFramePoses(const Trial& trial, const TaskFrame& tf);

ExpressedTrial ExpressInTaskFrame(const Trial& trial, const TaskFrame& tf);

// Progress rate |omega| or |v| of a tf-expressed twist.
double ProgressRate(const Screw& twist, ProgressKind kind);
Vec3 RateVector(const Screw& twist, ProgressKind kind);

struct ReparamTrial {
  std::vector<double> grid;  // xi_bar, uniform on [0, 1]
  std::vector<Pose> poses;
  std::vector<Screw> twists;  // d/dxi
  std::vector<Screw> wrenches;
  double xi_max = 0.0;
  double duration = 0.0;
};

// Resamples onto n uniform values of xi_bar = xi / xi_max.
ReparamTrial Reparameterize(const ExpressedTrial& trial, ProgressKind kind, size_t n);

// Cubic smoothing spline through (x, y) with penalty lambda * int f''^2,
// evaluated at x. lambda = 0 interpolates.
std::vector<double> SmoothingSpline(std::span<const double> x,
                                    std::span<const double> y, double lambda);

// Unit quaternion (w, x, y, z) <-> rotation matrix.
Eigen::Vector4d QuaternionFromRotation(const Mat3& r);
Mat3 RotationFromQuaternion(const Eigen::Vector4d& q);

struct ReferenceSignals {
  std::vector<double> grid;
  std::vector<Vec3> positions;
  std::vector<Eigen::Vector4d> quaternions;
  std::vector<Vec6> twists;
  std::vector<Vec6> wrenches;
  double xi_max_avg = 0.0;
  double nominal_rate = 0.0;  // mean xi_max / duration
};

ReferenceSignals AverageTrials(std::span<const ReparamTrial> trials, double lambda = 0.0);

}  // namespace taskframe
