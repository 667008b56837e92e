#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "taskframe/error.hpp"
#include "taskframe/statistics.hpp"

using namespace taskframe;

namespace {

Vec3 Gaussian(std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  return {n(rng), n(rng), n(rng)};
}

// Pure rotation about an axis through p with direction a.
Screw RotationThrough(const Vec3& a, const Vec3& p) { return Screw::Twist(a, -a.cross(p)); }

bool SameUpToSign(const Vec3& a, const Vec3& b, double tol) {
  return std::min((a - b).norm(), (a + b).norm()) < tol;
}

}  // namespace

TEST_CASE("avof: single direction and antipodal pair") {
  const std::vector<Vec3> same(5, Vec3(1, 0, 0));
  const AvofResult r = Avof(same);
  CHECK(SameUpToSign(r.frame.col(0), Vec3::UnitX(), 1e-12));
  CHECK(IsRotation(r.frame));
  CHECK((r.singular_values - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((r.covariance - Vec3(1, 0, 0).asDiagonal().toDenseMatrix()).norm() < 1e-12);

  const std::vector<Vec3> pair{Vec3(1, 0, 0), Vec3(-1, 0, 0)};
  CHECK(SameUpToSign(Avof(pair).frame.col(0), Vec3::UnitX(), 1e-12));
}

TEST_CASE("avof: noisy dominant direction") {
  std::mt19937_64 rng(21);
  std::vector<Vec3> v;
  for (int i = 0; i < 1000; ++i) v.push_back(Vec3(2, 0, 0) + Gaussian(rng, 0.1));
  const AvofResult r = Avof(v);
  const double angle = std::acos(std::min(1.0, std::abs(r.frame.col(0).x())));
  CHECK(angle < std::numbers::pi / 180.0);
  CHECK(std::abs(r.covariance.trace() - 1.0) < 1e-9);
  // The first column points along the mean vector.
  CHECK(r.frame.col(0).x() > 0);
  CHECK(r.frame.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("avof: degenerate set") {
  const std::vector<Vec3> zeros(4, Vec3::Zero());
  CHECK_THROWS_AS(Avof(zeros), Error);
  CHECK_THROWS_AS(Avof(std::vector<Vec3>{}), Error);
}

TEST_CASE("avof: permutation and duplication") {
  std::mt19937_64 rng(22);
  std::vector<Vec3> v;
  for (int i = 0; i < 20; ++i) v.push_back(Gaussian(rng, 1.0) + Vec3(0, 1, 0));
  const AvofResult a = Avof(v);
  std::vector<Vec3> p = v;
  std::shuffle(p.begin(), p.end(), rng);
  const AvofResult b = Avof(p);
  CHECK((a.frame - b.frame).norm() < 1e-12);
  CHECK((a.covariance - b.covariance).norm() < 1e-12);

  // Duplicating a vector k times equals weighting its outer product by k.
  std::vector<Vec3> dup = v;
  for (int k = 0; k < 3; ++k) dup.push_back(v[0]);
  Mat3 weighted = Mat3::Zero();
  for (const Vec3& c : v) weighted += c * c.transpose();
  weighted += 3 * v[0] * v[0].transpose();
  weighted /= static_cast<double>(dup.size());
  CHECK((UncenteredCovariance(dup) - weighted).norm() < 1e-12);
}

TEST_CASE("asip: tilted axes through a point") {
  const Vec3 p(1, 2, 0);
  const double t = 20.0 * std::numbers::pi / 180.0;
  const std::vector<Screw> s{RotationThrough(Vec3(0, 0, 1), p),
                             RotationThrough(RotExp(Vec3(t, 0, 0)) * Vec3::UnitZ(), p),
                             RotationThrough(RotExp(Vec3(0, -t, 0)) * Vec3::UnitZ(), p)};
  const AsipResult r = Asip(s);
  CHECK(std::abs(r.point.x() - 1.0) < 1e-9);
  CHECK(std::abs(r.point.y() - 2.0) < 1e-9);

  // Generic minimizer: coarse grid then coordinate polish.
  Vec3 best = Vec3::Zero();
  double best_cost = AsipCost(s, best);
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j)
      for (int k = -10; k <= 10; ++k) {
        const Vec3 q(0.25 * i, 0.25 * j, 0.25 * k);
        const double c = AsipCost(s, q);
        if (c < best_cost) best_cost = c, best = q;
      }
  for (double h = 0.1; h > 1e-12; h *= 0.5)
    for (bool moved = true; moved;) {
      moved = false;
      for (int a = 0; a < 3; ++a)
        for (double sgn : {-1.0, 1.0}) {
          Vec3 q = best;
          q(a) += sgn * h;
          const double c = AsipCost(s, q);
          if (c < best_cost) best_cost = c, best = q, moved = true;
        }
    }
  CHECK((r.point - best).norm() < 1e-5);
  CHECK(AsipCost(s, r.point) <= best_cost + 1e-15);
}

TEST_CASE("asip: exact intersection") {
  const Vec3 p(0.3, -0.1, 0.7);
  std::vector<Screw> s;
  for (const Vec3& a : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.3, 0.3, 1)})
    s.push_back(Screw::Wrench(a, -a.cross(p)));
  const AsipResult r = Asip(s);
  CHECK((r.point - p).norm() < 1e-12);
  CHECK(r.sigma_hat_sq < 1e-24);
  CHECK(r.covariance.norm() < 1e-20);
}

TEST_CASE("asip: parallel axes need regularization") {
  const std::vector<Screw> s{RotationThrough(Vec3::UnitZ(), Vec3(1, 0, 0)),
                             RotationThrough(Vec3::UnitZ(), Vec3(1, 0, 0))};
  CHECK_THROWS_AS(Asip(s), Error);
  const AsipResult r = Asip(s, 1e-3, Vec3(0, 0, 0.5));
  CHECK(std::abs(r.point.x() - 1.0) < 1e-2);
  CHECK(std::abs(r.point.z() - 0.5) < 1e-9);
}

TEST_CASE("asip: Monte-Carlo coverage") {
  const Vec3 truth(0.1, -0.05, 0.3);
  int inside = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::mt19937_64 rng(1000 + rep);
    std::vector<Screw> s;
    for (int i = 0; i < 50; ++i) {
      const Vec3 f = Gaussian(rng, 1.0).normalized();
      s.push_back(Screw::Wrench(f, -f.cross(truth) + Gaussian(rng, 0.01)));
    }
    const AsipResult r = Asip(s);
    const double max_ev = r.covariance.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
    if ((r.point - truth).norm() <= 3.0 * std::sqrt(max_ev)) ++inside;
  }
  CHECK(inside >= 95);
}

TEST_CASE("asip: equivariance and optimality") {
  std::mt19937_64 rng(23);
  std::vector<Screw> s;
  for (int i = 0; i < 30; ++i)
    s.push_back(Screw::Twist(Gaussian(rng, 1.0), Gaussian(rng, 0.5)));
  const AsipResult r = Asip(s);

  const Vec3 dp(0.4, -1.2, 0.3);
  std::vector<Screw> moved;
  for (const Screw& x : s) moved.push_back(ChangeReferencePoint(x, dp, Vec3::Zero()));
  CHECK((Asip(moved).point - (r.point + dp)).norm() < 1e-9);

  const Mat3 rot = RotExp(Vec3(0.5, -0.3, 1.1));
  std::vector<Screw> turned;
  for (const Screw& x : s) turned.push_back(ScrewTransform(Pose::Rotation(rot), x));
  const AsipResult rt = Asip(turned);
  CHECK((rt.point - rot * r.point).norm() < 1e-9);
  CHECK((rt.covariance - rot * r.covariance * rot.transpose()).norm() < 1e-9);

  const Mat3 c = r.covariance;
  CHECK((c - c.transpose()).norm() < 1e-10);
  CHECK(c.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() >= -1e-15);

  const double c0 = AsipCost(s, r.point);
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        CHECK(AsipCost(s, r.point + 1e-4 * Vec3(i, j, k)) >= c0);
      }
}

TEST_CASE("mean_subtract") {
  const std::vector<Screw> constant(3, Screw::Twist(Vec3(1, 2, 3), Vec3(4, 5, 6)));
  for (const Screw& x : MeanSubtract(constant)) CHECK(x.Vector().norm() < 1e-15);

  const std::vector<Screw> two{Screw::Twist(Vec3(1, 0, 0), Vec3::Zero()),
                               Screw::Twist(Vec3(3, 0, 0), Vec3::Zero())};
  const auto m = MeanSubtract(two);
  CHECK((m[0].directional() - Vec3(-1, 0, 0)).norm() < 1e-15);
  CHECK((m[1].directional() - Vec3(1, 0, 0)).norm() < 1e-15);

  std::mt19937_64 rng(24);
  std::vector<Screw> s;
  for (int i = 0; i < 40; ++i)
    s.push_back(Screw::Wrench(Gaussian(rng, 3.0), Gaussian(rng, 1.0)));
  Vec6 sum = Vec6::Zero();
  for (const Screw& x : MeanSubtract(s)) sum += x.Vector();
  CHECK((sum / 40.0).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(MeanSubtract(s)[0].kind() == ScrewKind::kWrench);
}

TEST_CASE("avof/asip covariance relation") {
  const Vec3 p(0.2, 0.1, -0.3);
  std::vector<Screw> exact;
  for (const Vec3& a : {Vec3(1, 0, 0), Vec3(0, 1, 0.2), Vec3(0.1, 0.2, 1), Vec3(1, 1, 1)})
    exact.push_back(RotationThrough(a, p));
  const AvofAsipRelation e = CheckAvofAsipRelation(exact);
  CHECK(e.asip_covariance.norm() < 1e-20);

  std::mt19937_64 rng(25);
  std::vector<Screw> noisy;
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = (Vec3(0, 0, 1) + Gaussian(rng, 0.4)).normalized() * 0.5;
    noisy.push_back(Screw::Twist(a, -a.cross(p) + Gaussian(rng, 0.002)));
  }
  const AvofAsipRelation n = CheckAvofAsipRelation(noisy);
  CHECK(n.max_relative_deviation < 1e-8);
  CHECK(n.max_singular_vector_deviation < 1e-6);
}
