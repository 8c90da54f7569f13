#include "pmsfm/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmsfm {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("intrinsics: image size must be positive");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw std::invalid_argument(
        "intrinsics: principal point outside the image");
  }
}

Pose transform_pose(const SimTransform& sim, const Pose& pose) {
  Pose out;
  out.q = (pose.q * sim.q.conjugate()).normalized();
  const Vec3 new_center = sim.apply(pose.center());
  out.t = -(out.q * new_center);
  return out;
}

void GaussianPrimitive::validate() const {
  if (opacity < 0.0 || opacity > 1.0) {
    throw std::invalid_argument("gaussian: opacity outside [0, 1]");
  }
  if (!(scale.array() > 0.0).all()) {
    throw std::invalid_argument("gaussian: scale must be positive");
  }
}

Mat3 gaussian_covariance(const GaussianPrimitive& g) {
  const Mat3 r = g.rotation.normalized().toRotationMatrix();
  const Mat3 ss = g.scale.cwiseProduct(g.scale).asDiagonal();
  return r * ss * r.transpose();
}

Vec3 alpha_composite(const std::vector<PixelContribution>& contributions,
                     const Vec3& background) {
  if (contributions.empty()) {
    return background;
  }
  Vec3 color = Vec3::Zero();
  double transmittance = 1.0;
  double prev_depth = -std::numeric_limits<double>::infinity();
  for (const PixelContribution& c : contributions) {
    if (c.depth < prev_depth) {
      throw std::invalid_argument(
          "alpha_composite: contributions not sorted front-to-back");
    }
    prev_depth = c.depth;
    color += c.color * (c.alpha * transmittance);
    transmittance *= 1.0 - c.alpha;
  }
  return color;
}

std::optional<Vec2> project(const Intrinsics& K, const Pose& T, const Vec3& X) {
  const Vec3 x_cam = T.apply(X);
  if (x_cam.z() <= 1e-9) {
    return std::nullopt;
  }
  return Vec2(K.fx * x_cam.x() / x_cam.z() + K.cx,
              K.fy * x_cam.y() / x_cam.z() + K.cy);
}

Vec3 backproject_ray(const Intrinsics& K, const Pose& T, const Vec2& pixel) {
  const Vec3 bearing((pixel.x() - K.cx) / K.fx, (pixel.y() - K.cy) / K.fy,
                     1.0);
  return (T.q.conjugate() * bearing.normalized()).normalized();
}

SimTransform umeyama_align(const std::vector<Vec3>& src,
                           const std::vector<Vec3>& dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("umeyama_align: point lists differ in length");
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw std::invalid_argument("umeyama_align: need at least 3 point pairs");
  }

  Vec3 mu_src = Vec3::Zero();
  Vec3 mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= static_cast<double>(n);
  mu_dst /= static_cast<double>(n);

  Mat3 sigma = Mat3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 ds = src[i] - mu_src;
    const Vec3 dd = dst[i] - mu_dst;
    sigma += dd * ds.transpose();
    var_src += ds.squaredNorm();
  }
  sigma /= static_cast<double>(n);
  var_src /= static_cast<double>(n);

  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 d = svd.singularValues();
  // Rank >= 2 is required for a unique rotation; collinear or coincident
  // input collapses the covariance and the gauge would be arbitrary.
  if (!(var_src > 0.0) || d(1) <= 1e-12 * std::max(d(0), 1e-300)) {
    throw std::invalid_argument(
        "umeyama_align: degenerate configuration (collinear or coincident "
        "points)");
  }

  Vec3 s_diag = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    s_diag(2) = -1.0;
  }
  const Mat3 rot =
      svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();

  SimTransform out;
  out.scale = d.dot(s_diag) / var_src;
  out.q = Quat(rot).normalized();
  out.t = mu_dst - out.scale * (rot * mu_src);
  return out;
}

PoseError pose_error(const Pose& pred, const Pose& gt) {
  const Quat dq = pred.q * gt.q.conjugate();
  const double v = std::min(1.0, dq.vec().norm());
  PoseError e;
  e.rot_deg = 2.0 * std::asin(v) * 180.0 / std::numbers::pi;
  e.trans = (pred.center() - gt.center()).norm();
  return e;
}

EvalResult align_and_evaluate(const std::map<std::string, Pose>& pred,
                              const std::map<std::string, Pose>& gt) {
  std::vector<std::string> common;
  for (const auto& [id, pose] : pred) {
    if (gt.count(id) > 0) {
      common.push_back(id);
    }
  }
  if (common.size() < 3) {
    throw std::invalid_argument(
        "align_and_evaluate: need at least 3 common image ids, got " +
        std::to_string(common.size()));
  }

  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  src.reserve(common.size());
  dst.reserve(common.size());
  for (const std::string& id : common) {
    src.push_back(pred.at(id).center());
    dst.push_back(gt.at(id).center());
  }

  EvalResult result;
  result.alignment = umeyama_align(src, dst);
  double sum_rot = 0.0;
  double sum_trans = 0.0;
  for (const std::string& id : common) {
    const Pose aligned = transform_pose(result.alignment, pred.at(id));
    const PoseError e = pose_error(aligned, gt.at(id));
    result.per_image[id] = e;
    sum_rot += e.rot_deg;
    sum_trans += e.trans;
  }
  result.mean_rot_deg = sum_rot / static_cast<double>(common.size());
  result.mean_trans = sum_trans / static_cast<double>(common.size());
  return result;
}

}  // namespace pmsfm
