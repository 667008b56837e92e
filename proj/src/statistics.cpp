#include "taskframe/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "taskframe/error.hpp"

namespace taskframe {

namespace {

using Mat3L = Eigen::Matrix<long double, 3, 3>;
using Vec3L = Eigen::Matrix<long double, 3, 1>;

// Symmetric eigen-decomposition sorted by decreasing eigenvalue.
void SortedEigen(const Mat3& m, Mat3* vectors, Vec3* values) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m + m.transpose()));
  const Vec3 ev = es.eigenvalues();
  const Mat3 u = es.eigenvectors();
  // Eigen returns ascending order
  for (int i = 0; i < 3; ++i) {
    (*values)(i) = ev(2 - i);
    vectors->col(i) = u.col(2 - i);
  }
}

// Sign convention: largest-magnitude component positive.
void CanonicalSign(Eigen::Ref<Vec3> v) {
  int k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0) v = -v;
}

}  // namespace

Mat3 UncenteredCovariance(std::span<const Vec3> vectors) {
  Mat3L acc = Mat3L::Zero();
  for (const Vec3& c : vectors) {
    const Vec3L cl = c.cast<long double>();
    acc += cl * cl.transpose();
  }
  return (acc / static_cast<long double>(vectors.size())).cast<double>();
}

AvofResult Avof(std::span<const Vec3> vectors) {
  if (vectors.empty()) ThrowInvalid("avof: empty vector set");
  const Mat3 cc = UncenteredCovariance(vectors);
  const double tr = cc.trace();
  if (!(tr >= 1e-15)) ThrowNumerical("avof: degenerate vector set");

  AvofResult r;
  SortedEigen(cc, &r.frame, &r.singular_values);
  r.singular_values = r.singular_values.cwiseMax(0.0);

  Vec3L mean = Vec3L::Zero();
  for (const Vec3& c : vectors) mean += c.cast<long double>();
  const double d = r.frame.col(0).dot(mean.cast<double>());
  if (std::abs(d) > 1e-12 * std::sqrt(tr) * vectors.size()) {
    if (d < 0) r.frame.col(0) = -r.frame.col(0);
  } else {
    CanonicalSign(r.frame.col(0));
  }
  CanonicalSign(r.frame.col(1));
  r.frame.col(2) = r.frame.col(0).cross(r.frame.col(1));
  r.covariance = cc / tr;
  r.mean_sq_norm = tr;
  return r;
}

double AsipCost(std::span<const Screw> screws, const Vec3& p, double eps,
                const Vec3& p0) {
  long double acc = 0;
  for (const Screw& s : screws)
    acc += (s.directional().cross(p) + s.moment()).squaredNorm();
  return static_cast<double>(acc / screws.size()) + eps * (p - p0).squaredNorm();
}

AsipResult Asip(std::span<const Screw> screws, double eps, const Vec3& p0) {
  const size_t n = screws.size();
  if (n < 2) ThrowInvalid("asip: need at least 2 screws");
  if (eps < 0) ThrowInvalid("asip: epsilon must be >= 0");
  const ScrewKind kind = screws[0].kind();
  Mat3L a_acc = Mat3L::Zero();
  Vec3L rhs_acc = Vec3L::Zero();
  for (const Screw& s : screws) {
    if (s.kind() != kind) ThrowInvalid("asip: screws of mixed kinds");
    const Mat3 k = Skew(s.directional());
    a_acc += (k * k.transpose()).cast<long double>();
    rhs_acc += s.directional().cross(s.moment()).cast<long double>();
  }
  const long double nl = static_cast<long double>(n);
  const Mat3 a = (a_acc / nl).cast<double>();
  const Vec3 rhs = (rhs_acc / nl).cast<double>() + eps * p0;
  const Mat3 m = a + eps * Mat3::Identity();

  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  const Vec3 ev = es.eigenvalues();
  if (!(ev(0) > 0) || ev(2) / ev(0) > 1e12)
    ThrowNumerical("parallel or vanishing screw axes; supply epsilon > 0");
  const Mat3 u = es.eigenvectors();
  const Mat3 m_inv = u * ev.cwiseInverse().asDiagonal() * u.transpose();

  AsipResult r;
  r.point = m_inv * rhs;
  long double res = 0, scale = 0;
  for (const Screw& s : screws) {
    res += (s.directional().cross(r.point) + s.moment()).squaredNorm();
    scale += s.moment().squaredNorm() +
             s.directional().squaredNorm() * r.point.squaredNorm();
  }
  // residuals at round-off level are an exact fit
  if (res <= 1e-26L * scale) res = 0;
  r.sigma_hat_sq = static_cast<double>(res / (nl * (3 * nl - 3)));
  r.covariance = r.sigma_hat_sq * m_inv;
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
  // Same eigenvectors as (A + eps I), in reverse order.
  for (int i = 0; i < 3; ++i) {
    r.singular_vectors.col(i) = u.col(i);
    r.singular_values(i) = r.sigma_hat_sq / ev(i);
  }
  CanonicalSign(r.singular_vectors.col(0));
  CanonicalSign(r.singular_vectors.col(1));
  r.singular_vectors.col(2) =
      r.singular_vectors.col(0).cross(r.singular_vectors.col(1));
  return r;
}

std::vector<Screw> MeanSubtract(std::span<const Screw> screws) {
  if (screws.size() < 2) ThrowInvalid("mean_subtract: need at least 2 screws");
  const ScrewKind kind = screws[0].kind();
  Vec3L da = Vec3L::Zero(), mb = Vec3L::Zero();
  for (const Screw& s : screws) {
    if (s.kind() != kind) ThrowInvalid("mean_subtract: screws of mixed kinds");
    da += s.directional().cast<long double>();
    mb += s.moment().cast<long double>();
  }
  const long double n = static_cast<long double>(screws.size());
  const Screw mean(kind, (da / n).cast<double>(), (mb / n).cast<double>());
  std::vector<Screw> out;
  out.reserve(screws.size());
  for (const Screw& s : screws) out.push_back(s - mean);
  return out;
}

std::vector<Vec3> DirectionalParts(std::span<const Screw> screws) {
  std::vector<Vec3> out;
  out.reserve(screws.size());
  for (const Screw& s : screws) out.push_back(s.directional());
  return out;
}

std::vector<Vec3> MomentParts(std::span<const Screw> screws) {
  std::vector<Vec3> out;
  out.reserve(screws.size());
  for (const Screw& s : screws) out.push_back(s.moment());
  return out;
}

AvofAsipRelation CheckAvofAsipRelation(std::span<const Screw> screws) {
  const auto dirs = DirectionalParts(screws);
  const AvofResult av = Avof(dirs);
  const AsipResult as = Asip(screws, 0.0);

  AvofAsipRelation rel;
  rel.asip_covariance = as.covariance;
  const Mat3 i_minus = Mat3::Identity() - av.covariance;
  rel.predicted_covariance =
      as.sigma_hat_sq / av.mean_sq_norm * i_minus.inverse();
  const double scale = std::max(rel.asip_covariance.norm(), 1e-300);
  rel.max_relative_deviation =
      (rel.asip_covariance - rel.predicted_covariance).cwiseAbs().maxCoeff() /
      scale;
  if (as.sigma_hat_sq == 0.0) rel.max_relative_deviation = 0.0;

  // ASIP's most uncertain direction is AVOF's dominant one: the orders are
  // identical because (I - C_avof)^-1 is monotone in the AVOF eigenvalues.
  double dev = 0;
  for (int i = 0; i < 3; ++i) {
    const double c = std::abs(av.frame.col(i).dot(as.singular_vectors.col(i)));
    dev = std::max(dev, 1.0 - c);
  }
  rel.max_singular_vector_deviation = dev;
  return rel;
}

}  // namespace taskframe
