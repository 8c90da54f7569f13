#include "pmsfm/pointmap.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace pmsfm {

namespace {

constexpr char kMagic[4] = {'P', 'M', 'A', 'P'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kFlagCorrId = 1;

// The file format is defined little-endian; the targets we build for are
// little-endian, so writes are direct memory images of the fixed-width types.
template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, std::size_t offset, const std::string& what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw std::runtime_error("pmap: truncated file while reading " + what +
                             " at byte offset " + std::to_string(offset));
  }
  return value;
}

}  // namespace

std::vector<GridSample> extract_samples(const Pointmap& pm, int stride) {
  if (stride < 1) {
    throw std::invalid_argument("extract_samples: stride must be >= 1");
  }
  std::vector<GridSample> samples;
  samples.reserve(static_cast<std::size_t>((pm.height / stride + 1)) *
                  (pm.width / stride + 1));
  for (int br = 0; br < pm.height; br += stride) {
    for (int bc = 0; bc < pm.width; bc += stride) {
      const int r_end = std::min(br + stride, pm.height);
      const int c_end = std::min(bc + stride, pm.width);
      bool found = false;
      for (int r = br; r < r_end && !found; ++r) {
        for (int c = bc; c < c_end && !found; ++c) {
          if (!pm.is_valid(r, c)) {
            continue;
          }
          GridSample s;
          s.pixel = pm.pixel(r, c);
          s.point = pm.points[pm.index(r, c)];
          s.row = r;
          s.col = c;
          if (pm.corr_id) {
            s.corr_id = (*pm.corr_id)[pm.index(r, c)];
            s.has_corr_id = true;
          }
          samples.push_back(s);
          found = true;
        }
      }
    }
  }
  return samples;
}

void save_pointmap(const Pointmap& pm, const std::string& path) {
  if (pm.width <= 0 || pm.height <= 0 ||
      pm.points.size() != static_cast<std::size_t>(pm.width) * pm.height ||
      pm.valid.size() != pm.points.size()) {
    throw std::invalid_argument("save_pointmap: inconsistent grid dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_pointmap: cannot open " + path);
  }
  out.write(kMagic, 4);
  write_le<std::uint16_t>(out, kVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(pm.width));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(pm.height));
  write_le<std::uint16_t>(out, pm.corr_id ? kFlagCorrId : 0);
  for (const Vec3& p : pm.points) {
    write_le<float>(out, static_cast<float>(p.x()));
    write_le<float>(out, static_cast<float>(p.y()));
    write_le<float>(out, static_cast<float>(p.z()));
  }
  out.write(reinterpret_cast<const char*>(pm.valid.data()),
            static_cast<std::streamsize>(pm.valid.size()));
  if (pm.corr_id) {
    for (std::uint64_t id : *pm.corr_id) {
      write_le<std::uint64_t>(out, id);
    }
  }
  if (!out) {
    throw std::runtime_error("save_pointmap: write failed for " + path);
  }
}

Pointmap load_pointmap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_pointmap: cannot open " + path);
  }
  in.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("pmap: bad magic at byte offset 0 in " + path);
  }
  const auto version = read_le<std::uint16_t>(in, 4, "version");
  if (version != kVersion) {
    throw std::runtime_error("pmap: unsupported format version " +
                             std::to_string(version) + " at byte offset 4");
  }
  const auto width = read_le<std::uint32_t>(in, 6, "width");
  const auto height = read_le<std::uint32_t>(in, 10, "height");
  const auto flags = read_le<std::uint16_t>(in, 14, "flags");

  const std::uint64_t pixel_count =
      static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  if (width == 0 || height == 0 ||
      pixel_count > std::numeric_limits<std::int32_t>::max()) {
    throw std::runtime_error("pmap: dimension overflow (" +
                             std::to_string(width) + "x" +
                             std::to_string(height) + ") at byte offset 6");
  }
  const bool has_corr = (flags & kFlagCorrId) != 0;
  const std::uint64_t expected_size =
      16 + pixel_count * (12 + 1 + (has_corr ? 8 : 0));
  if (file_size != expected_size) {
    throw std::runtime_error(
        "pmap: truncated or oversized payload in " + path + ": expected " +
        std::to_string(expected_size) + " bytes, file has " +
        std::to_string(file_size));
  }

  Pointmap pm;
  pm.width = static_cast<int>(width);
  pm.height = static_cast<int>(height);
  pm.points.resize(pixel_count);
  std::size_t offset = 16;
  for (std::uint64_t i = 0; i < pixel_count; ++i) {
    const float x = read_le<float>(in, offset, "points");
    const float y = read_le<float>(in, offset + 4, "points");
    const float z = read_le<float>(in, offset + 8, "points");
    pm.points[i] = Vec3(x, y, z);
    offset += 12;
  }
  pm.valid.resize(pixel_count);
  if (!in.read(reinterpret_cast<char*>(pm.valid.data()),
               static_cast<std::streamsize>(pixel_count))) {
    throw std::runtime_error("pmap: truncated valid mask at byte offset " +
                             std::to_string(offset));
  }
  offset += pixel_count;
  if (has_corr) {
    std::vector<std::uint64_t> ids(pixel_count);
    for (std::uint64_t i = 0; i < pixel_count; ++i) {
      ids[i] = read_le<std::uint64_t>(in, offset, "corr_id");
      offset += 8;
    }
    pm.corr_id = std::move(ids);
  }
  return pm;
}

}  // namespace pmsfm
