#pragma once

#include "pmsfm/geometry.hpp"
#include "pmsfm/pointmap.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pmsfm {

enum class Trajectory { kForwardRing, kOrbit };

Trajectory trajectory_from_string(const std::string& name);
std::string to_string(Trajectory t);

struct SceneConfig {
  int num_images = 20;
  int num_surface_points = 40000;
  Trajectory trajectory = Trajectory::kOrbit;
  int image_width = 512;
  int image_height = 512;
  double fov_deg = 50.0;
  double ring_spacing = 0.3;      // camera step along the forward ring
  double min_covisibility = 0.5;  // required between trajectory-adjacent pairs
  int min_observed_points = 100;  // per-image visibility lower bound

  void validate() const;
};

// Desk-scale stand-in for a real capture: a static cloud of identifiable
// surface points observed by a known camera trajectory.
struct SyntheticScene {
  SceneConfig config;
  std::uint64_t rng_seed = 0;
  std::vector<Vec3> surface_points;  // index doubles as the stable id
  std::vector<Pose> gt_poses;
  std::vector<Intrinsics> intrinsics;
  Vec3 bbox_min{0.0, 0.0, 0.0};
  Vec3 bbox_max{0.0, 0.0, 0.0};
  double scene_scale = 1.0;  // max point distance from the cloud centroid
};

// Deterministic in (config, seed). Throws when the requested geometry cannot
// satisfy the covisibility or visibility bounds.
SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed);

// Noise model of the scene regressor. Finetuning on observed images is
// modeled as attenuation of the per-image noise level: every observation
// multiplies the image's effective sigma by `attenuation`.
struct ProviderState {
  double noise_sigma0 = 0.0;
  double outlier_fraction = 0.0;
  double attenuation = 1.0;
  std::uint64_t noise_seed = 0;
  std::vector<int> observation_counts;

  void validate() const;
  double effective_sigma(int image_id) const;
};

// Marks the images as trained-on; their future queries use attenuated noise.
void observe(ProviderState& state, const std::vector<int>& image_ids,
             int rounds = 1);

// Renders the (reference, target) pointmap pair for an image pair. Every
// valid pixel carries its surface point plus isotropic Gaussian noise at the
// image's current effective sigma; an outlier_fraction of valid pixels is
// replaced by uniform points inside the scene bounding box (corr_id cleared).
std::pair<Pointmap, Pointmap> query_pointmaps(const ProviderState& state,
                                              const SyntheticScene& scene,
                                              int ref_id, int tgt_id);

// Pipeline-facing pointmap source.
class PointmapProvider {
 public:
  virtual ~PointmapProvider() = default;
  virtual int image_count() const = 0;
  virtual Intrinsics intrinsics(int image_id) const = 0;
  virtual std::pair<Pointmap, Pointmap> query(int ref_id, int tgt_id) = 0;
  virtual void observe(const std::vector<int>& image_ids, int rounds) = 0;
  // Current prediction-noise level for the image; the provider's quality
  // signal, used e.g. to pick the proximity merge radius.
  virtual double effective_sigma(int image_id) const = 0;
};

class SyntheticProvider final : public PointmapProvider {
 public:
  SyntheticProvider(SyntheticScene scene, ProviderState state);

  int image_count() const override;
  Intrinsics intrinsics(int image_id) const override;
  std::pair<Pointmap, Pointmap> query(int ref_id, int tgt_id) override;
  void observe(const std::vector<int>& image_ids, int rounds) override;
  double effective_sigma(int image_id) const override;

  const SyntheticScene& scene() const { return scene_; }
  const ProviderState& state() const { return state_; }

 private:
  SyntheticScene scene_;
  ProviderState state_;
};

// Serves pointmaps from a directory of PMAP files named
// pointmap_<tgt>_from_<ref>.pmap. Observation is a no-op.
class FilePointmapProvider final : public PointmapProvider {
 public:
  FilePointmapProvider(std::string directory, std::vector<Intrinsics> intrinsics);

  int image_count() const override;
  Intrinsics intrinsics(int image_id) const override;
  std::pair<Pointmap, Pointmap> query(int ref_id, int tgt_id) override;
  void observe(const std::vector<int>& image_ids, int rounds) override;
  double effective_sigma(int image_id) const override;

  static std::string pair_filename(int ref_id, int tgt_id);

 private:
  std::string dir_;
  std::vector<Intrinsics> intrinsics_;
};

}  // namespace pmsfm
