#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "gcnpsn/error.hpp"
#include "gcnpsn/rng.hpp"
#include "gcnpsn/skeleton_graph.hpp"
#include "oracles.hpp"

using namespace gcnpsn;

namespace {

Pose random_pose(Rng& rng) {
  Pose p;
  for (auto& kp : p.keypoints) kp = {rng.uniform(0.0, 1920.0), rng.uniform(0.0, 1080.0)};
  return p;
}

}  // namespace

TEST_CASE("topology has self-loops, symmetry and the 14 bones") {
  const auto& topo = build_skeleton_topology();
  for (int i = 0; i < kNumJoints; ++i) CHECK(topo.adjacency_raw(i, i) == 1.0);
  CHECK(topo.adjacency_raw == topo.adjacency_raw.transpose());
  CHECK(topo.adjacency_norm == topo.adjacency_norm.transpose());
  // 15 self-loops plus both directions of each bone.
  CHECK(topo.adjacency_raw.sum() == doctest::Approx(15 + 2 * 14));
}

TEST_CASE("joint degrees follow the edge list") {
  const auto& c = build_skeleton_topology().adjacency_raw;
  auto degree = [&](int i) { return c.row(i).sum() - 1.0; };
  for (int leaf : {kRightAnkle, kLeftAnkle, kRightWrist, kLeftWrist, kHead}) {
    CHECK(degree(leaf) == 1.0);
  }
  CHECK(degree(kPelvis) == 3.0);
  CHECK(degree(kNeck) == 4.0);
}

TEST_CASE("normalized adjacency matches the brute-force product") {
  const auto& a = build_skeleton_topology().adjacency_norm;
  const auto ref = oracle::skeleton_adjacency_norm();
  double worst = 0.0;
  for (int i = 0; i < kNumJoints; ++i)
    for (int j = 0; j < kNumJoints; ++j) worst = std::max(worst, std::abs(a(i, j) - ref[i][j]));
  CHECK(worst <= 1e-12);
  // 1/sqrt(2*3): ankle has degree 2 with its loop, knee 3.
  CHECK(a(0, 1) == doctest::Approx(0.4082482904638631).epsilon(1e-14));
}

TEST_CASE("normalized adjacency spectrum lies in [-1, 1]") {
  const auto& a = build_skeleton_topology().adjacency_norm;
  Eigen::SelfAdjointEigenSolver<Adjacency> es(a);
  CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-12);
  CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
  CHECK(oracle::spectral_radius(oracle::skeleton_adjacency_norm()) <= 1.0 + 1e-12);
}

TEST_CASE("topology is built once and identical across calls") {
  const auto& t1 = build_skeleton_topology();
  const auto& t2 = build_skeleton_topology();
  CHECK(&t1 == &t2);
  const Adjacency again = symmetric_normalize(t1.adjacency_raw);
  CHECK(again == t1.adjacency_norm);
}

TEST_CASE("symmetric_normalize small cases") {
  SUBCASE("identity stays identity") {
    const Adjacency eye = Adjacency::Identity();
    CHECK(symmetric_normalize(eye) == eye);
  }
  SUBCASE("two nodes, one edge: all 0.5") {
    const Eigen::MatrixXd c = Eigen::MatrixXd::Ones(2, 2);
    const Eigen::MatrixXd out = symmetric_normalize(c);
    CHECK(((out.array() - 0.5).abs() < 1e-15).all());
  }
  SUBCASE("zero row is rejected") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(3, 3);
    c(1, 1) = 0.0;
    CHECK_THROWS_AS(symmetric_normalize(c), Error);
  }
}

TEST_CASE("normalize_pose min-max examples") {
  Pose p;
  // Everything inside x in [10, 20], y in [30, 50].
  for (auto& kp : p.keypoints) kp = {12.0, 35.0};
  p.keypoints[0] = {10.0, 30.0};
  p.keypoints[1] = {20.0, 50.0};
  p.keypoints[2] = {15.0, 40.0};
  const auto np = normalize_pose(p);
  CHECK(np.features(0, 0) == 0.0);
  CHECK(np.features(0, 1) == 0.0);
  CHECK(np.features(1, 0) == 1.0);
  CHECK(np.features(1, 1) == 1.0);
  CHECK(np.features(2, 0) == 0.5);
  CHECK(np.features(2, 1) == 0.5);
}

TEST_CASE("normalize_pose degenerate extent maps the axis to 0.5") {
  Pose p;
  for (int i = 0; i < kNumJoints; ++i) p.keypoints[i] = {100.0, 10.0 * i};
  const auto np = normalize_pose(p);
  for (int i = 0; i < kNumJoints; ++i) CHECK(np.features(i, 0) == 0.5);
  CHECK(np.features.col(1).minCoeff() == 0.0);
  CHECK(np.features.col(1).maxCoeff() == 1.0);
}

TEST_CASE("normalize_pose rejects non-finite coordinates") {
  Pose p;
  for (int i = 0; i < kNumJoints; ++i) p.keypoints[i] = {1.0 * i, 2.0 * i};
  p.keypoints[4].y = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(normalize_pose(p), Error);
  p.keypoints[4].y = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(normalize_pose(p), Error);
}

TEST_CASE("normalize_pose output invariants on random poses") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto np = normalize_pose(random_pose(rng));
    CHECK(np.features.minCoeff() >= 0.0);
    CHECK(np.features.maxCoeff() <= 1.0);
    for (int axis = 0; axis < 2; ++axis) {
      CHECK(np.features.col(axis).minCoeff() == 0.0);
      CHECK(np.features.col(axis).maxCoeff() == 1.0);
    }
  }
}

TEST_CASE("normalize_pose is invariant to per-axis positive scale and shift") {
  Rng rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Pose p = random_pose(rng);
    const double a = rng.uniform(0.1, 10.0), c = rng.uniform(0.1, 10.0);
    const double b = rng.uniform(-1e3, 1e3), d = rng.uniform(-1e3, 1e3);
    Pose q;
    for (int i = 0; i < kNumJoints; ++i) {
      q.keypoints[i] = {a * p.keypoints[i].x + b, c * p.keypoints[i].y + d};
    }
    worst = std::max(worst, (normalize_pose(p).features - normalize_pose(q).features)
                                .cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-12);
}
