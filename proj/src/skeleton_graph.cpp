#include "gcnpsn/skeleton_graph.hpp"

#include <cmath>
#include <string>

#include "gcnpsn/error.hpp"

namespace gcnpsn {

namespace {

SkeletonTopology make_topology() {
  SkeletonTopology topo;
  topo.adjacency_raw = Adjacency::Identity();
  for (const auto& [i, j] : kSkeletonEdges) {
    topo.adjacency_raw(i, j) = 1.0;
    topo.adjacency_raw(j, i) = 1.0;
  }
  topo.adjacency_norm = symmetric_normalize(topo.adjacency_raw);
  return topo;
}

template <typename M>
M symmetric_normalize_impl(const M& c_hat) {
  if (c_hat.rows() != c_hat.cols()) {
    throw Error("symmetric_normalize: matrix is not square");
  }
  const Eigen::Index n = c_hat.rows();
  Eigen::VectorXd inv_sqrt_deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double deg = c_hat.row(i).sum();
    if (!(deg > 0.0)) {
      throw Error("symmetric_normalize: row " + std::to_string(i) +
                  " has zero degree");
    }
    inv_sqrt_deg(i) = 1.0 / std::sqrt(deg);
  }
  M out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = inv_sqrt_deg(i) * c_hat(i, j) * inv_sqrt_deg(j);
    }
  }
  return out;
}

}  // namespace

void validate_pose(const Pose& pose) {
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& p = pose.keypoints[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error("pose: keypoint " + std::to_string(i) + " (" +
                  std::string(kJointNames[i]) + ") is not finite");
    }
  }
}

const SkeletonTopology& build_skeleton_topology() {
  static const SkeletonTopology topo = make_topology();
  return topo;
}

Adjacency symmetric_normalize(const Adjacency& c_hat) {
  return symmetric_normalize_impl(c_hat);
}

Eigen::MatrixXd symmetric_normalize(const Eigen::MatrixXd& c_hat) {
  return symmetric_normalize_impl(c_hat);
}

NormalizedPose normalize_pose(const Pose& pose) {
  validate_pose(pose);
  NormalizedPose out;
  for (int axis = 0; axis < kCoordDim; ++axis) {
    auto coord = [&](int i) {
      return axis == 0 ? pose.keypoints[i].x : pose.keypoints[i].y;
    };
    double lo = coord(0);
    double hi = coord(0);
    for (int i = 1; i < kNumJoints; ++i) {
      lo = std::min(lo, coord(i));
      hi = std::max(hi, coord(i));
    }
    const double extent = hi - lo;
    for (int i = 0; i < kNumJoints; ++i) {
      out.features(i, axis) = extent > 0.0 ? (coord(i) - lo) / extent : 0.5;
    }
  }
  return out;
}

}  // namespace gcnpsn
