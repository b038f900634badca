#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgmm/numkit/tensor.hpp"

namespace sgmm::tem {

// 8-bit RGB raster, row-major, channel-interleaved.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  friend bool operator==(const Image&, const Image&) = default;
};

// Binary PPM ("P6", maxval 255). Header comments are allowed.
Image parse_ppm(std::string_view bytes);
std::string encode_ppm(const Image& image);
Image load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const Image& image);

inline constexpr std::size_t kPatchSize = 16;
inline constexpr std::size_t kPatchDim = kPatchSize * kPatchSize * 3;

struct PatchGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t patch_size = kPatchSize;
  // Row-major patch order; each patch is r,g,b per pixel, pixels row-major,
  // scaled to [0, 1].
  std::vector<std::vector<double>> patches;

  std::size_t cols() const { return width / patch_size; }
  std::size_t rows() const { return height / patch_size; }
  std::size_t count() const { return patches.size(); }
  // [count x patch_size^2 * 3]; undefined when there are no patches.
  numkit::Tensor tensor() const;
};

// DimensionError unless both sides are multiples of patch_size.
PatchGrid patchify(const Image& image, std::size_t patch_size = kPatchSize);

}  // namespace sgmm::tem
