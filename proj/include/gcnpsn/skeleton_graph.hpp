#pragma once

#include <array>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace gcnpsn {

inline constexpr int kNumJoints = 15;
inline constexpr int kNumBones = 14;
inline constexpr int kCoordDim = 2;
inline constexpr int kFlatDim = kNumJoints * kCoordDim;

enum Joint : int {
  kRightAnkle = 0,
  kRightKnee = 1,
  kRightHip = 2,
  kPelvis = 3,
  kLeftHip = 4,
  kLeftKnee = 5,
  kLeftAnkle = 6,
  kRightWrist = 7,
  kRightElbow = 8,
  kRightShoulder = 9,
  kNeck = 10,
  kLeftShoulder = 11,
  kLeftElbow = 12,
  kLeftWrist = 13,
  kHead = 14,
};

// Names as they appear in the pose file "keypoint_order" field.
inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "r_ankle",    "r_knee",  "r_hip",       "pelvis",  "l_hip",
    "l_knee",     "l_ankle", "r_wrist",     "r_elbow", "r_shoulder",
    "neck",       "l_shoulder", "l_elbow",  "l_wrist", "head"};

// MPII-style 15-joint kinematic tree: legs, arms, head, and a single spine
// bone from pelvis to neck.
inline constexpr std::array<std::pair<int, int>, kNumBones> kSkeletonEdges = {{
    {kRightAnkle, kRightKnee},
    {kRightKnee, kRightHip},
    {kRightHip, kPelvis},
    {kPelvis, kLeftHip},
    {kLeftHip, kLeftKnee},
    {kLeftKnee, kLeftAnkle},
    {kRightWrist, kRightElbow},
    {kRightElbow, kRightShoulder},
    {kRightShoulder, kNeck},
    {kNeck, kLeftShoulder},
    {kLeftShoulder, kLeftElbow},
    {kLeftElbow, kLeftWrist},
    {kNeck, kHead},
    {kPelvis, kNeck},
}};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

// Raw keypoints in pixel coordinates, indexed by Joint.
struct Pose {
  std::array<Point2, kNumJoints> keypoints{};
  friend bool operator==(const Pose&, const Pose&) = default;
};

using NodeFeatures = Eigen::Matrix<double, kNumJoints, kCoordDim>;
using Adjacency = Eigen::Matrix<double, kNumJoints, kNumJoints>;

// Per-axis min-max normalized keypoints; rows are joints, columns (x*, y*).
struct NormalizedPose {
  NodeFeatures features = NodeFeatures::Zero();
};

struct SkeletonTopology {
  Adjacency adjacency_raw;   // C + I
  Adjacency adjacency_norm;  // D^-1/2 (C + I) D^-1/2
};

// Throws Error if any coordinate is non-finite.
void validate_pose(const Pose& pose);

const SkeletonTopology& build_skeleton_topology();

// Requires a symmetric binary matrix with unit diagonal; throws on a zero
// row sum.
Adjacency symmetric_normalize(const Adjacency& c_hat);

// Dynamic-size overload used for small hand-built graphs in tests.
Eigen::MatrixXd symmetric_normalize(const Eigen::MatrixXd& c_hat);

// An axis with zero extent maps every node to 0.5 on that axis.
NormalizedPose normalize_pose(const Pose& pose);

}  // namespace gcnpsn
