#pragma once

#include "pmsfm/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pmsfm {

// Per-pixel 3D points in the global frame with a validity mask.
//
// corr_id carries stable surface-point identifiers and is only produced by
// the synthetic backend; pointmaps loaded from disk may carry it when the
// file declares the channel. subpix optionally stores the exact image
// location of each sample; when absent, the pixel grid coordinate itself is
// the sample location (the dense-prediction convention).
struct Pointmap {
  int width = 0;
  int height = 0;
  std::vector<Vec3> points;            // row-major, height * width
  std::vector<std::uint8_t> valid;     // row-major, 0/1
  std::optional<std::vector<std::uint64_t>> corr_id;
  std::optional<std::vector<Vec2>> subpix;

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  bool is_valid(int row, int col) const {
    return valid[index(row, col)] != 0;
  }
  // Image coordinates of the sample stored at (row, col).
  Vec2 pixel(int row, int col) const {
    if (subpix) {
      return (*subpix)[index(row, col)];
    }
    return Vec2(static_cast<double>(col), static_cast<double>(row));
  }
};

// One retained sample of a (possibly downsampled) pointmap grid.
struct GridSample {
  Vec2 pixel;      // image coordinates of the sample
  Vec3 point;      // predicted 3D point, global frame
  int row = 0;     // source pixel grid coordinates
  int col = 0;
  std::uint64_t corr_id = 0;
  bool has_corr_id = false;
};

// Downsamples the pointmap by walking stride x stride blocks and keeping the
// first valid pixel of each block (row-major scan). With a fully valid map
// this reduces to plain striding, so a 512x512 map at stride 4 yields 16384
// samples.
std::vector<GridSample> extract_samples(const Pointmap& pm, int stride);

// PMAP binary format (little-endian):
//   magic "PMAP" | u16 version=1 | u32 width | u32 height | u16 flags
//   points  H*W*3 float32 row-major
//   valid   H*W   u8
//   corr_id H*W   u64            (present iff flags bit 0)
// The subpix channel is in-memory only and never serialized.
void save_pointmap(const Pointmap& pm, const std::string& path);
Pointmap load_pointmap(const std::string& path);

}  // namespace pmsfm
