#include "taskframe/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "taskframe/error.hpp"
#include "taskframe/log.hpp"

namespace taskframe {

void Trial::Validate() const {
  const size_t n = times.size();
  if (poses.size() != n || twists_world.size() != n || wrenches_world.size() != n ||
      twists_tool.size() != n || wrenches_tool.size() != n)
    ThrowInvalid("trial '" + name + "': series lengths differ");
}

size_t TrialBatch::TotalSamples() const {
  size_t n = 0;
  for (const Trial& t : trials) n += t.size();
  return n;
}

std::vector<Screw> TrialBatch::ConcatTwists(FrameTag view) const {
  std::vector<Screw> out;
  out.reserve(TotalSamples());
  for (const Trial& t : trials) {
    const auto& s = t.Twists(view);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<Screw> TrialBatch::ConcatWrenches(FrameTag view) const {
  std::vector<Screw> out;
  out.reserve(TotalSamples());
  for (const Trial& t : trials) {
    const auto& s = t.Wrenches(view);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

std::vector<Pose> TrialBatch::ConcatPoses() const {
  std::vector<Pose> out;
  out.reserve(TotalSamples());
  for (const Trial& t : trials) out.insert(out.end(), t.poses.begin(), t.poses.end());
  return out;
}

void PreprocessConfig::Validate() const {
  if (pose_sigma_s < 0 || wrench_sigma_s < 0)
    ThrowInvalid("smoothing widths must be >= 0");
  if (f_thresh < 0 || m_thresh < 0 || omega_thresh < 0 || v_thresh < 0)
    ThrowInvalid("segmentation thresholds must be >= 0");
}

std::vector<double> GaussianKernel(double sigma) {
  if (!(sigma > 0)) ThrowInvalid("smoothing sigma must be > 0");
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * half + 1);
  double sum = 0;
  for (int i = -half; i <= half; ++i) {
    k[i + half] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + half];
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<Vec6> SmoothSeries(std::span<const Vec6> series, double sigma) {
  const auto k = GaussianKernel(sigma);
  const int half = static_cast<int>(k.size() / 2);
  const int n = static_cast<int>(series.size());
  std::vector<Vec6> out(n);
  for (int i = 0; i < n; ++i) {
    Vec6 acc = Vec6::Zero();
    double wsum = 0;
    for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      const double w = k[j - i + half];
      acc += w * series[j];
      wsum += w;
    }
    out[i] = acc / wsum;
  }
  return out;
}

std::vector<Screw> SmoothWrench(std::span<const Screw> series, double sigma) {
  std::vector<Vec6> v;
  v.reserve(series.size());
  for (const Screw& s : series) v.push_back(s.Vector());
  const auto sm = SmoothSeries(v, sigma);
  std::vector<Screw> out;
  out.reserve(series.size());
  for (size_t i = 0; i < sm.size(); ++i)
    out.push_back(Screw::FromVector(series[i].kind(), sm[i]));
  return out;
}

std::vector<Pose> SmoothPoses(std::span<const Pose> poses, double sigma) {
  const auto k = GaussianKernel(sigma);
  const int half = static_cast<int>(k.size() / 2);
  const int n = static_cast<int>(poses.size());
  std::vector<Pose> out(n);
  for (int i = 0; i < n; ++i) {
    const Pose inv = poses[i].Inverse();
    Vec6 acc = Vec6::Zero();
    double wsum = 0;
    for (int j = std::max(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      const double w = k[j - i + half];
      acc += w * PoseLog(inv * poses[j]).Vector();
      wsum += w;
    }
    out[i] = poses[i] * PoseExp(Screw::FromVector(ScrewKind::kDisplacement, acc / wsum));
  }
  return out;
}

double MeanStep(std::span<const double> times) {
  if (times.size() < 2) ThrowInvalid("need at least 2 samples");
  return (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

std::pair<size_t, size_t> SegmentContact(std::span<const Screw> wrenches,
                                         std::span<const Screw> twists,
                                         std::span<const Pose> poses,
                                         const PreprocessConfig& cfg) {
  cfg.Validate();
  const size_t n = wrenches.size();
  if (twists.size() != n || poses.size() != n)
    ThrowInvalid("segmentation: series lengths differ");

  // Longest run with significant force or moment (moment about the tool
  // origin, so the choice of world origin does not matter).
  size_t best_b = 0, best_e = 0;
  for (size_t i = 0; i < n;) {
    auto in_contact = [&](size_t k) {
      const Screw& w = wrenches[k];
      const Vec3 m = ChangeReferencePoint(w, Vec3::Zero(), poses[k].position).moment();
      return w.directional().norm() > cfg.f_thresh || m.norm() > cfg.m_thresh;
    };
    if (!in_contact(i)) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < n && in_contact(j)) ++j;
    if (j - i > best_e - best_b) {
      best_b = i;
      best_e = j;
    }
    i = j;
  }
  if (best_e == best_b) ThrowInvalid("no contact segment found");

  auto moving = [&](size_t k) {
    const Screw& t = twists[k];
    const Vec3 pdot = t.moment() + t.directional().cross(poses[k].position);
    return t.directional().norm() > cfg.omega_thresh || pdot.norm() > cfg.v_thresh;
  };
  while (best_b < best_e && !moving(best_b)) ++best_b;
  while (best_e > best_b && !moving(best_e - 1)) --best_e;
  if (best_e == best_b) ThrowInvalid("no contact segment found (no significant motion)");
  return {best_b, best_e};
}

void ExpandViewpoints(Trial& trial) {
  const size_t n = trial.times.size();
  trial.twists_tool.clear();
  trial.wrenches_tool.clear();
  trial.twists_tool.reserve(n);
  trial.wrenches_tool.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const Pose w_in_tl = trial.poses[i].Inverse();
    trial.twists_tool.push_back(ScrewTransform(w_in_tl, trial.twists_world[i]));
    trial.wrenches_tool.push_back(ScrewTransform(w_in_tl, trial.wrenches_world[i]));
  }
}

Trial Preprocess(const DemoTrial& demo, const PreprocessConfig& cfg) {
  cfg.Validate();
  const size_t n = demo.times.size();
  if (demo.poses.size() != n || demo.wrenches.size() != n)
    ThrowInvalid("trial '" + demo.name + "': series lengths differ");
  if (n < 3) ThrowInvalid("trial '" + demo.name + "': insufficient samples");
  const double dt = MeanStep(demo.times);

  std::vector<Pose> poses =
      cfg.pose_sigma_s > 0 ? SmoothPoses(demo.poses, cfg.pose_sigma_s / dt) : demo.poses;
  std::vector<Screw> wrenches = cfg.wrench_sigma_s > 0
                                    ? SmoothWrench(demo.wrenches, cfg.wrench_sigma_s / dt)
                                    : demo.wrenches;
  std::vector<Screw> twists;
  try {
    twists = DifferentiatePoses(poses, demo.times);
  } catch (const Error& e) {
    throw Error(e.code(), "trial '" + demo.name + "': " + e.what());
  }

  size_t b = 0, e = n;
  if (cfg.segment) {
    try {
      std::tie(b, e) = SegmentContact(wrenches, twists, poses, cfg);
    } catch (const Error& err) {
      throw Error(err.code(), "trial '" + demo.name + "': " + err.what());
    }
  }
  if (e - b < 3) ThrowInvalid("trial '" + demo.name + "': contact segment too short");

  Trial t;
  t.name = demo.name;
  t.times.assign(demo.times.begin() + b, demo.times.begin() + e);
  t.poses.assign(poses.begin() + b, poses.begin() + e);
  t.twists_world.assign(twists.begin() + b, twists.begin() + e);
  t.wrenches_world.assign(wrenches.begin() + b, wrenches.begin() + e);
  ExpandViewpoints(t);
  t.Validate();
  return t;
}

std::vector<Pose> TaskFramePoses(const Trial& trial, const TaskFrame& tf) {
  std::vector<Pose> out;
  out.reserve(trial.size());
  for (const Pose& p : trial.poses)
    out.push_back(AssembleTaskFrame(tf.origin, tf.orientation, FrameTag::kWorld, &p));
  return out;
}

ExpressedTrial ExpressInTaskFrame(const Trial& trial, const TaskFrame& tf) {
  ExpressedTrial out;
  out.times = trial.times;
  const auto tf_in_w = TaskFramePoses(trial, tf);
  const Pose init_inv = trial.poses.front().Inverse();
  for (size_t i = 0; i < trial.size(); ++i) {
    const Pose w_in_tf = tf_in_w[i].Inverse();
    out.twists.push_back(ScrewTransform(w_in_tf, trial.twists_world[i]));
    out.wrenches.push_back(ScrewTransform(w_in_tf, trial.wrenches_world[i]));
    const Pose rel = init_inv * trial.poses[i];
    const Pose tf_in_init = init_inv * tf_in_w[i];
    out.poses.push_back(SimilarityTransform(rel, tf_in_init));
  }
  return out;
}

Vec3 RateVector(const Screw& twist, ProgressKind kind) {
  return kind == ProgressKind::kRotationAngle ? twist.directional() : twist.moment();
}

double ProgressRate(const Screw& twist, ProgressKind kind) {
  return RateVector(twist, kind).norm();
}

ReparamTrial Reparameterize(const ExpressedTrial& tr, ProgressKind kind, size_t n) {
  const size_t m = tr.times.size();
  if (m < 2) ThrowInvalid("reparameterize: need at least 2 samples");
  if (n < 2) ThrowInvalid("reparameterize: grid needs at least 2 points");
  constexpr double kMinRate = 1e-9;

  std::vector<double> raw(m), rate(m);
  for (size_t i = 0; i < m; ++i) {
    raw[i] = ProgressRate(tr.twists[i], kind);
    rate[i] = std::max(raw[i], kMinRate);
  }
  const double mean_rate = std::accumulate(raw.begin(), raw.end(), 0.0) / m;
  const size_t dwell = std::count_if(raw.begin(), raw.end(),
                                     [&](double r) { return r < 1e-3 * mean_rate; });
  if (dwell > 0.05 * m)
    Warn("progress dwell on " + std::to_string(dwell) + " of " + std::to_string(m) +
         " samples; progress rate clamped");

  std::vector<double> xi(m, 0.0);
  for (size_t i = 1; i < m; ++i)
    xi[i] = xi[i - 1] + 0.5 * (rate[i] + rate[i - 1]) * (tr.times[i] - tr.times[i - 1]);
  const double xi_max = xi.back();

  // d/dxi = twist / rate, undefined while the progress dwells: dwell
  // samples take the direction of the nearest moving sample.
  std::vector<Vec6> unit(m);
  std::vector<bool> moving(m);
  for (size_t i = 0; i < m; ++i) {
    moving[i] = raw[i] >= 1e-3 * mean_rate && raw[i] > kMinRate;
    if (moving[i]) unit[i] = tr.twists[i].Vector() / raw[i];
  }
  for (size_t i = 1; i < m; ++i)
    if (!moving[i] && moving[i - 1]) unit[i] = unit[i - 1], moving[i] = true;
  for (size_t i = m - 1; i-- > 0;)
    if (!moving[i] && moving[i + 1]) unit[i] = unit[i + 1], moving[i] = true;
  if (!(xi_max >= 1e-6)) ThrowNumerical("degenerate progress (total " + std::to_string(xi_max) + ")");

  ReparamTrial out;
  out.xi_max = xi_max;
  out.duration = tr.times.back() - tr.times.front();
  for (size_t j = 0; j < n; ++j) {
    const double g = static_cast<double>(j) / static_cast<double>(n - 1);
    const double target = g * xi_max;
    size_t k = std::upper_bound(xi.begin(), xi.end(), target) - xi.begin();
    k = std::clamp<size_t>(k, 1, m - 1) - 1;  // xi[k] <= target <= xi[k+1]
    const double s = std::clamp((target - xi[k]) / (xi[k + 1] - xi[k]), 0.0, 1.0);

    const Pose& a = tr.poses[k];
    const Pose& b = tr.poses[k + 1];
    out.grid.push_back(g);
    out.poses.push_back(a * PoseExp(PoseLog(a.Inverse() * b) * s));
    out.twists.push_back(Screw::FromVector(ScrewKind::kTwist, (1 - s) * unit[k] + s * unit[k + 1]));
    const Vec6 wr = (1 - s) * tr.wrenches[k].Vector() + s * tr.wrenches[k + 1].Vector();
    out.wrenches.push_back(Screw::FromVector(ScrewKind::kWrench, wr));
  }
  return out;
}

std::vector<double> SmoothingSpline(std::span<const double> x, std::span<const double> y,
                                    double lambda) {
  const size_t n = x.size();
  if (y.size() != n) ThrowInvalid("spline: x and y differ in length");
  if (lambda < 0) ThrowInvalid("spline: smoothing parameter must be >= 0");
  std::vector<double> out(y.begin(), y.end());
  if (lambda == 0.0 || n < 3) return out;

  // Reinsch form: (R + lambda Q^T Q) gamma = Q^T y, f = y - lambda Q gamma.
  const int m = static_cast<int>(n) - 2;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    const double h0 = x[j + 1] - x[j];
    const double h1 = x[j + 2] - x[j + 1];
    if (!(h0 > 0 && h1 > 0)) ThrowInvalid("spline: x must be strictly increasing");
    q(j, j) = 1.0 / h0;
    q(j + 1, j) = -1.0 / h0 - 1.0 / h1;
    q(j + 2, j) = 1.0 / h1;
    r(j, j) = (h0 + h1) / 3.0;
    if (j + 1 < m) r(j, j + 1) = r(j + 1, j) = h1 / 6.0;
  }
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  const Eigen::VectorXd gamma = (r + lambda * q.transpose() * q).ldlt().solve(q.transpose() * yv);
  const Eigen::VectorXd f = yv - lambda * q * gamma;
  for (size_t i = 0; i < n; ++i) out[i] = f(i);
  return out;
}

Eigen::Vector4d QuaternionFromRotation(const Mat3& r) {
  const Eigen::Quaterniond q(r);
  Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
  return v / v.norm();
}

Mat3 RotationFromQuaternion(const Eigen::Vector4d& q) {
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
}

ReferenceSignals AverageTrials(std::span<const ReparamTrial> trials, double lambda) {
  if (trials.empty()) ThrowInvalid("average_trials: no trials");
  const size_t n = trials[0].grid.size();
  for (const auto& t : trials)
    if (t.grid.size() != n) ThrowInvalid("average_trials: trials on different grids");
  const double nt = static_cast<double>(trials.size());

  // Hemisphere-aligned quaternions: continuous within each trial, and each
  // trial aligned with the first one.
  std::vector<std::vector<Eigen::Vector4d>> quats(trials.size());
  for (size_t k = 0; k < trials.size(); ++k) {
    for (size_t j = 0; j < n; ++j) {
      Eigen::Vector4d q = QuaternionFromRotation(trials[k].poses[j].rotation);
      const Eigen::Vector4d& prev =
          j > 0 ? quats[k][j - 1] : (k > 0 ? quats[0][0] : Eigen::Vector4d(1, 0, 0, 0));
      if (q.dot(prev) < 0) q = -q;
      quats[k].push_back(q);
    }
  }

  ReferenceSignals ref;
  ref.grid = trials[0].grid;
  std::vector<std::vector<double>> ch(3 + 4 + 6 + 6, std::vector<double>(n, 0.0));
  for (size_t k = 0; k < trials.size(); ++k) {
    for (size_t j = 0; j < n; ++j) {
      const auto& t = trials[k];
      for (int c = 0; c < 3; ++c) ch[c][j] += t.poses[j].position(c) / nt;
      for (int c = 0; c < 4; ++c) ch[3 + c][j] += quats[k][j](c) / nt;
      const Vec6 tw = t.twists[j].Vector();
      const Vec6 wr = t.wrenches[j].Vector();
      for (int c = 0; c < 6; ++c) {
        ch[7 + c][j] += tw(c) / nt;
        ch[13 + c][j] += wr(c) / nt;
      }
    }
  }
  for (auto& c : ch) c = SmoothingSpline(ref.grid, c, lambda);

  for (size_t j = 0; j < n; ++j) {
    ref.positions.emplace_back(ch[0][j], ch[1][j], ch[2][j]);
    Eigen::Vector4d q(ch[3][j], ch[4][j], ch[5][j], ch[6][j]);
    if (!(q.norm() > 1e-12)) ThrowNumerical("average_trials: degenerate quaternion average");
    q.normalize();
    if (j > 0 && q.dot(ref.quaternions.back()) < 0) q = -q;
    ref.quaternions.push_back(q);
    Vec6 tw, wr;
    for (int c = 0; c < 6; ++c) {
      tw(c) = ch[7 + c][j];
      wr(c) = ch[13 + c][j];
    }
    ref.twists.push_back(tw);
    ref.wrenches.push_back(wr);
  }
  double xs = 0, rs = 0;
  for (const auto& t : trials) {
    xs += t.xi_max;
    rs += t.duration > 0 ? t.xi_max / t.duration : 0.0;
  }
  ref.xi_max_avg = xs / nt;
  ref.nominal_rate = rs / nt;
  return ref;
}

}  // namespace taskframe
