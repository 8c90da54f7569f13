#include "pmsfm/provider.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace pmsfm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

// World-to-camera pose looking from `center` toward `target`. The camera
// frame is x-right, y-down, z-forward.
Pose look_at(const Vec3& center, const Vec3& target, const Vec3& up_hint) {
  const Vec3 forward = (target - center).normalized();
  Vec3 right = forward.cross(up_hint);
  if (right.norm() < 1e-9) {
    right = forward.cross(Vec3::UnitX());
  }
  right.normalize();
  const Vec3 down = forward.cross(right).normalized() * -1.0;
  Mat3 r;
  r.row(0) = right.transpose();
  r.row(1) = (-down).transpose();
  r.row(2) = forward.transpose();
  Pose pose;
  pose.q = Quat(r).normalized();
  pose.t = -(pose.q * center);
  return pose;
}

Intrinsics make_intrinsics(const SceneConfig& config) {
  Intrinsics k;
  k.width = config.image_width;
  k.height = config.image_height;
  const double half_fov = config.fov_deg * std::numbers::pi / 360.0;
  k.fx = 0.5 * config.image_width / std::tan(half_fov);
  k.fy = k.fx;
  k.cx = 0.5 * (config.image_width - 1);
  k.cy = 0.5 * (config.image_height - 1);
  return k;
}

std::vector<int> visible_points(const SyntheticScene& scene, int image_id) {
  std::vector<int> out;
  const Pose& pose = scene.gt_poses[image_id];
  const Intrinsics& k = scene.intrinsics[image_id];
  for (int i = 0; i < static_cast<int>(scene.surface_points.size()); ++i) {
    const auto px = project(k, pose, scene.surface_points[i]);
    if (!px) {
      continue;
    }
    if (px->x() < -0.5 || px->x() > k.width - 0.5 || px->y() < -0.5 ||
        px->y() > k.height - 0.5) {
      continue;
    }
    out.push_back(i);
  }
  return out;
}

// Noiseless view of the scene from one camera: anchors land in the pixel
// cell containing their exact projection, nearest-in-depth wins a cell.
Pointmap render_view(const SyntheticScene& scene, int image_id) {
  const Pose& pose = scene.gt_poses[image_id];
  const Intrinsics& k = scene.intrinsics[image_id];
  Pointmap pm;
  pm.width = k.width;
  pm.height = k.height;
  const std::size_t n = static_cast<std::size_t>(k.width) * k.height;
  pm.points.assign(n, Vec3::Zero());
  pm.valid.assign(n, 0);
  pm.corr_id = std::vector<std::uint64_t>(n, 0);
  pm.subpix = std::vector<Vec2>(n, Vec2::Zero());
  std::vector<double> depth(n, std::numeric_limits<double>::infinity());

  for (int i = 0; i < static_cast<int>(scene.surface_points.size()); ++i) {
    const Vec3& x = scene.surface_points[i];
    const auto px = project(k, pose, x);
    if (!px) {
      continue;
    }
    const int col = static_cast<int>(std::lround(px->x()));
    const int row = static_cast<int>(std::lround(px->y()));
    if (col < 0 || col >= k.width || row < 0 || row >= k.height) {
      continue;
    }
    const std::size_t idx = pm.index(row, col);
    const double z = pose.apply(x).z();
    if (z >= depth[idx]) {
      continue;
    }
    depth[idx] = z;
    pm.points[idx] = x;
    pm.valid[idx] = 1;
    (*pm.corr_id)[idx] = static_cast<std::uint64_t>(i);
    (*pm.subpix)[idx] = *px;
  }
  return pm;
}

void corrupt_view(Pointmap& pm, const SyntheticScene& scene, double sigma,
                  double outlier_fraction, std::uint64_t seed) {
  if (sigma <= 0.0 && outlier_fraction <= 0.0) {
    return;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const Vec3 span = scene.bbox_max - scene.bbox_min;
  for (std::size_t idx = 0; idx < pm.points.size(); ++idx) {
    if (pm.valid[idx] == 0) {
      continue;
    }
    if (outlier_fraction > 0.0 && uni(rng) < outlier_fraction) {
      pm.points[idx] =
          scene.bbox_min +
          Vec3(uni(rng) * span.x(), uni(rng) * span.y(), uni(rng) * span.z());
      (*pm.corr_id)[idx] = std::numeric_limits<std::uint64_t>::max();
      continue;
    }
    if (sigma > 0.0) {
      pm.points[idx] += sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    }
  }
}

}  // namespace

Trajectory trajectory_from_string(const std::string& name) {
  if (name == "forward_ring" || name == "forward-ring") {
    return Trajectory::kForwardRing;
  }
  if (name == "orbit") {
    return Trajectory::kOrbit;
  }
  throw std::invalid_argument("unknown trajectory '" + name +
                              "' (expected forward_ring or orbit)");
}

std::string to_string(Trajectory t) {
  return t == Trajectory::kForwardRing ? "forward_ring" : "orbit";
}

void SceneConfig::validate() const {
  if (num_images < 1) {
    throw std::invalid_argument("scene: num_images must be >= 1");
  }
  if (num_surface_points < 3) {
    throw std::invalid_argument("scene: num_surface_points must be >= 3");
  }
  if (image_width < 4 || image_height < 4) {
    throw std::invalid_argument("scene: image size too small");
  }
  if (min_covisibility < 0.0 || min_covisibility > 1.0) {
    throw std::invalid_argument(
        "scene: min_covisibility must lie in [0, 1], got " +
        std::to_string(min_covisibility));
  }
  if (fov_deg <= 1.0 || fov_deg >= 179.0) {
    throw std::invalid_argument("scene: fov_deg out of range");
  }
  if (ring_spacing <= 0.0) {
    throw std::invalid_argument("scene: ring_spacing must be positive");
  }
}

SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  SyntheticScene scene;
  scene.config = config;
  scene.rng_seed = seed;
  std::mt19937_64 rng(mix_seed(seed, 0x5ce42e));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const Intrinsics k = make_intrinsics(config);
  scene.intrinsics.assign(config.num_images, k);
  scene.surface_points.reserve(config.num_surface_points);
  scene.gt_poses.reserve(config.num_images);

  if (config.trajectory == Trajectory::kOrbit) {
    // Point cloud in a unit ball, cameras on a circle looking inward.
    for (int i = 0; i < config.num_surface_points; ++i) {
      Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
      dir.normalize();
      const double radius = std::cbrt(uni(rng));
      scene.surface_points.push_back(radius * dir);
    }
    const double cam_radius = 3.0;
    for (int i = 0; i < config.num_images; ++i) {
      const double theta =
          2.0 * std::numbers::pi * i / static_cast<double>(config.num_images);
      const Vec3 center(cam_radius * std::cos(theta),
                        cam_radius * std::sin(theta),
                        0.3 * std::sin(3.0 * theta));
      scene.gt_poses.push_back(look_at(center, Vec3::Zero(), Vec3::UnitZ()));
    }
  } else {
    // Forward-facing ring: cameras step along x and look at a frontal slab.
    const double span = config.ring_spacing * (config.num_images - 1);
    const double z_near = 4.0;
    const double z_far = 6.0;
    const double half_w =
        z_near * std::tan(config.fov_deg * std::numbers::pi / 360.0);
    for (int i = 0; i < config.num_surface_points; ++i) {
      const double x = -half_w - 0.5 + uni(rng) * (span + 2.0 * half_w + 1.0);
      const double y = (uni(rng) - 0.5) * 2.0 * half_w * 0.9;
      const double z = z_near + uni(rng) * (z_far - z_near);
      scene.surface_points.emplace_back(x, y, z);
    }
    for (int i = 0; i < config.num_images; ++i) {
      const Vec3 center(config.ring_spacing * i, 0.1 * std::sin(0.9 * i),
                        0.05 * std::cos(1.3 * i));
      const Vec3 target = center + Vec3(0.0, 0.0, 1.0);
      scene.gt_poses.push_back(look_at(center, target, Vec3(0.0, -1.0, 0.0)));
    }
  }

  scene.bbox_min = scene.surface_points.front();
  scene.bbox_max = scene.surface_points.front();
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& p : scene.surface_points) {
    scene.bbox_min = scene.bbox_min.cwiseMin(p);
    scene.bbox_max = scene.bbox_max.cwiseMax(p);
    centroid += p;
  }
  centroid /= static_cast<double>(scene.surface_points.size());
  scene.scene_scale = 0.0;
  for (const Vec3& p : scene.surface_points) {
    scene.scene_scale = std::max(scene.scene_scale, (p - centroid).norm());
  }

  // Visibility and covisibility bounds make downstream gates satisfiable.
  std::vector<std::unordered_set<int>> seen(config.num_images);
  for (int i = 0; i < config.num_images; ++i) {
    const std::vector<int> vis = visible_points(scene, i);
    if (static_cast<int>(vis.size()) < config.min_observed_points) {
      throw std::runtime_error(
          "generate_scene: image " + std::to_string(i) + " observes only " +
          std::to_string(vis.size()) + " points (need " +
          std::to_string(config.min_observed_points) +
          "); config is unsatisfiable");
    }
    seen[i].insert(vis.begin(), vis.end());
  }
  for (int i = 0; i + 1 < config.num_images; ++i) {
    std::size_t shared = 0;
    for (int p : seen[i]) {
      shared += seen[i + 1].count(p);
    }
    const double frac =
        static_cast<double>(shared) /
        static_cast<double>(std::min(seen[i].size(), seen[i + 1].size()));
    if (frac < config.min_covisibility) {
      throw std::runtime_error(
          "generate_scene: adjacent images " + std::to_string(i) + "," +
          std::to_string(i + 1) + " share only " + std::to_string(frac) +
          " of points (need " + std::to_string(config.min_covisibility) +
          "); config is unsatisfiable");
    }
  }
  return scene;
}

void ProviderState::validate() const {
  if (noise_sigma0 < 0.0) {
    throw std::invalid_argument("provider: noise_sigma0 must be >= 0");
  }
  if (outlier_fraction < 0.0 || outlier_fraction >= 1.0) {
    throw std::invalid_argument("provider: outlier_fraction must be in [0, 1)");
  }
  if (attenuation <= 0.0 || attenuation > 1.0) {
    throw std::invalid_argument("provider: attenuation must be in (0, 1]");
  }
}

double ProviderState::effective_sigma(int image_id) const {
  int count = 0;
  if (image_id >= 0 && image_id < static_cast<int>(observation_counts.size())) {
    count = observation_counts[image_id];
  }
  return noise_sigma0 * std::pow(attenuation, count);
}

void observe(ProviderState& state, const std::vector<int>& image_ids,
             int rounds) {
  for (int id : image_ids) {
    if (id < 0) {
      continue;
    }
    if (id >= static_cast<int>(state.observation_counts.size())) {
      state.observation_counts.resize(id + 1, 0);
    }
    state.observation_counts[id] += rounds;
  }
}

std::pair<Pointmap, Pointmap> query_pointmaps(const ProviderState& state,
                                              const SyntheticScene& scene,
                                              int ref_id, int tgt_id) {
  const int n = static_cast<int>(scene.gt_poses.size());
  if (ref_id < 0 || ref_id >= n || tgt_id < 0 || tgt_id >= n) {
    throw std::out_of_range("query_pointmaps: unknown image id " +
                            std::to_string(ref_id < 0 || ref_id >= n ? ref_id
                                                                     : tgt_id));
  }
  auto render = [&](int image_id) {
    Pointmap pm = render_view(scene, image_id);
    const int count = image_id < static_cast<int>(state.observation_counts.size())
                          ? state.observation_counts[image_id]
                          : 0;
    const std::uint64_t seed =
        mix_seed(mix_seed(state.noise_seed, scene.rng_seed),
                 mix_seed(static_cast<std::uint64_t>(ref_id) * 1000003ULL +
                              static_cast<std::uint64_t>(tgt_id),
                          mix_seed(static_cast<std::uint64_t>(image_id),
                                   static_cast<std::uint64_t>(count))));
    corrupt_view(pm, scene, state.effective_sigma(image_id),
                 state.outlier_fraction, seed);
    return pm;
  };
  return {render(ref_id), render(tgt_id)};
}

SyntheticProvider::SyntheticProvider(SyntheticScene scene, ProviderState state)
    : scene_(std::move(scene)), state_(std::move(state)) {
  state_.validate();
  if (state_.observation_counts.empty()) {
    state_.observation_counts.assign(scene_.gt_poses.size(), 0);
  }
}

int SyntheticProvider::image_count() const {
  return static_cast<int>(scene_.gt_poses.size());
}

Intrinsics SyntheticProvider::intrinsics(int image_id) const {
  return scene_.intrinsics.at(image_id);
}

std::pair<Pointmap, Pointmap> SyntheticProvider::query(int ref_id, int tgt_id) {
  return query_pointmaps(state_, scene_, ref_id, tgt_id);
}

void SyntheticProvider::observe(const std::vector<int>& image_ids, int rounds) {
  pmsfm::observe(state_, image_ids, rounds);
}

double SyntheticProvider::effective_sigma(int image_id) const {
  return state_.effective_sigma(image_id);
}

FilePointmapProvider::FilePointmapProvider(std::string directory,
                                           std::vector<Intrinsics> intrinsics)
    : dir_(std::move(directory)), intrinsics_(std::move(intrinsics)) {}

int FilePointmapProvider::image_count() const {
  return static_cast<int>(intrinsics_.size());
}

Intrinsics FilePointmapProvider::intrinsics(int image_id) const {
  return intrinsics_.at(image_id);
}

std::string FilePointmapProvider::pair_filename(int ref_id, int tgt_id) {
  return "pointmap_" + std::to_string(tgt_id) + "_from_" +
         std::to_string(ref_id) + ".pmap";
}

std::pair<Pointmap, Pointmap> FilePointmapProvider::query(int ref_id,
                                                          int tgt_id) {
  namespace fs = std::filesystem;
  const fs::path tgt_path = fs::path(dir_) / pair_filename(ref_id, tgt_id);
  if (!fs::exists(tgt_path)) {
    throw std::runtime_error("file provider: missing pointmap " +
                             tgt_path.string());
  }
  Pointmap tgt = load_pointmap(tgt_path.string());
  const fs::path ref_path = fs::path(dir_) / pair_filename(tgt_id, ref_id);
  Pointmap ref =
      fs::exists(ref_path) ? load_pointmap(ref_path.string()) : tgt;
  return {std::move(ref), std::move(tgt)};
}

void FilePointmapProvider::observe(const std::vector<int>&, int) {}

double FilePointmapProvider::effective_sigma(int) const { return 0.0; }

}  // namespace pmsfm
