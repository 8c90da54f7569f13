#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pmsfm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// World-to-camera rigid transform: x_cam = R * x_world + t.
// The camera center in world coordinates is C = -R^T * t.
struct Pose {
  Quat q{1.0, 0.0, 0.0, 0.0};
  Vec3 t{0.0, 0.0, 0.0};

  Pose() = default;
  Pose(const Quat& q_in, const Vec3& t_in) : q(q_in.normalized()), t(t_in) {}

  static Pose identity() { return Pose(); }

  Mat3 rotation() const { return q.toRotationMatrix(); }
  Vec3 center() const { return -(q.conjugate() * t); }
  Vec3 apply(const Vec3& x_world) const { return q * x_world + t; }

  Pose inverse() const {
    Pose p;
    p.q = q.conjugate();
    p.t = -(q.conjugate() * t);
    return p;
  }

  // Composition: (a * b)(x) = a(b(x)).
  friend Pose operator*(const Pose& a, const Pose& b) {
    return Pose(a.q * b.q, a.q * b.t + a.t);
  }
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Throws std::invalid_argument if the calibration is not usable.
  void validate() const;
};

// Similarity transform y = scale * R * x + t.
struct SimTransform {
  double scale = 1.0;
  Quat q{1.0, 0.0, 0.0, 0.0};
  Vec3 t{0.0, 0.0, 0.0};

  Vec3 apply(const Vec3& x) const { return scale * (q * x) + t; }

  SimTransform inverse() const {
    SimTransform s;
    s.scale = 1.0 / scale;
    s.q = q.conjugate();
    s.t = -(q.conjugate() * t) / scale;
    return s;
  }
};

// Remaps a world-to-camera pose under a similarity applied to world space.
// The camera keeps its physical placement: C' = sim(C), R' = R * R_sim^T.
Pose transform_pose(const SimTransform& sim, const Pose& pose);

// Gaussian primitive record. The covariance is parameterized by a rotation
// and a per-axis scale so it stays positive semi-definite by construction.
struct GaussianPrimitive {
  double opacity = 1.0;
  Quat rotation{1.0, 0.0, 0.0, 0.0};
  Vec3 scale{1.0, 1.0, 1.0};
  // One RGB triplet per spherical-harmonic coefficient; degree 0 keeps a
  // single constant-color entry.
  std::vector<Vec3> sh_coeffs{Vec3::Zero()};
  Vec3 offset{0.0, 0.0, 0.0};
  Vec3 base_point{0.0, 0.0, 0.0};

  Vec3 mean() const { return base_point + offset; }
  void validate() const;
};

// Sigma = R * diag(scale) * diag(scale)^T * R^T.
Mat3 gaussian_covariance(const GaussianPrimitive& g);

struct PixelContribution {
  Vec3 color{0.0, 0.0, 0.0};
  double alpha = 0.0;
  double depth = 0.0;
};

// Front-to-back blending C = sum_i c_i a_i prod_{j<i} (1 - a_j).
// Contributions must be sorted by non-decreasing depth; an inversion is a
// contract violation. An empty list yields the background color.
Vec3 alpha_composite(const std::vector<PixelContribution>& contributions,
                     const Vec3& background = Vec3::Zero());

// Pinhole projection. Empty when the point fails the cheirality test
// (z_cam <= 1e-9).
std::optional<Vec2> project(const Intrinsics& K, const Pose& T, const Vec3& X);

// Unit world-frame direction from the camera center through pixel (u, v).
Vec3 backproject_ray(const Intrinsics& K, const Pose& T, const Vec2& pixel);

// Least-squares similarity aligning src onto dst (Umeyama closed form).
// Throws std::invalid_argument for fewer than 3 pairs, mismatched lengths,
// or a degenerate (collinear/coincident) configuration.
SimTransform umeyama_align(const std::vector<Vec3>& src,
                           const std::vector<Vec3>& dst);

struct PoseError {
  double rot_deg = 0.0;
  double trans = 0.0;
};

// Geodesic rotation error in degrees plus camera-center distance.
PoseError pose_error(const Pose& pred, const Pose& gt);

struct EvalResult {
  std::map<std::string, PoseError> per_image;
  double mean_rot_deg = 0.0;
  double mean_trans = 0.0;
  SimTransform alignment;
};

// Umeyama-aligns predicted camera centers onto ground truth over the common
// ids, then reports per-image pose errors in the ground-truth frame.
// Requires at least 3 common ids.
EvalResult align_and_evaluate(const std::map<std::string, Pose>& pred,
                              const std::map<std::string, Pose>& gt);

}  // namespace pmsfm
