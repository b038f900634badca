#include "sgmm/tem/image.hpp"

#include <fstream>
#include <sstream>

#include "sgmm/error.hpp"

namespace sgmm::tem {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Reads one unsigned header integer, skipping whitespace and comments.
std::size_t header_int(std::string_view b, std::size_t& pos, const char* what) {
  while (pos < b.size()) {
    if (is_space(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  std::size_t v = 0;
  while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
    v = v * 10 + static_cast<std::size_t>(b[pos] - '0');
    if (v > 1'000'000) throw ParseError(std::string("PPM: ") + what + " too large", start);
    ++pos;
  }
  if (pos == start) throw ParseError(std::string("PPM: expected ") + what, start);
  return v;
}

}  // namespace

Image parse_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ParseError("PPM: missing P6 magic", 0);
  std::size_t pos = 2;
  Image img;
  img.width = header_int(bytes, pos, "width");
  img.height = header_int(bytes, pos, "height");
  const std::size_t maxval = header_int(bytes, pos, "maxval");
  if (maxval != 255) throw ParseError("PPM: maxval must be 255, got " + std::to_string(maxval), pos);
  if (img.width == 0 || img.height == 0) throw ParseError("PPM: empty image", pos);
  if (pos >= bytes.size() || !is_space(bytes[pos])) throw ParseError("PPM: expected whitespace after maxval", pos);
  ++pos;
  const std::size_t n = img.width * img.height * 3;
  if (bytes.size() - pos < n) {
    throw ParseError("PPM: pixel data truncated (" + std::to_string(bytes.size() - pos) + " of " +
                         std::to_string(n) + " bytes)",
                     bytes.size());
  }
  img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                 bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(image.rgb.begin(), image.rgb.end());
  return out;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ppm(ss.str());
}

void save_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << encode_ppm(image);
  if (!out) throw IoError("write failed for " + path.string());
}

numkit::Tensor PatchGrid::tensor() const {
  if (patches.empty()) return {};
  const std::size_t d = patches[0].size();
  std::vector<double> flat;
  flat.reserve(patches.size() * d);
  for (const auto& p : patches) flat.insert(flat.end(), p.begin(), p.end());
  return numkit::Tensor::from({patches.size(), d}, std::move(flat));
}

PatchGrid patchify(const Image& image, std::size_t patch_size) {
  if (patch_size == 0 || image.width % patch_size != 0 || image.height % patch_size != 0) {
    throw DimensionError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                         " is not divisible into " + std::to_string(patch_size) + "-pixel patches");
  }
  if (image.rgb.size() != image.width * image.height * 3) {
    throw DimensionError("image buffer does not match its " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " size");
  }
  PatchGrid grid;
  grid.width = image.width;
  grid.height = image.height;
  grid.patch_size = patch_size;
  for (std::size_t pr = 0; pr < grid.rows(); ++pr) {
    for (std::size_t pc = 0; pc < grid.cols(); ++pc) {
      std::vector<double> patch;
      patch.reserve(patch_size * patch_size * 3);
      for (std::size_t y = 0; y < patch_size; ++y) {
        const std::size_t row = pr * patch_size + y;
        for (std::size_t x = 0; x < patch_size; ++x) {
          const std::size_t col = pc * patch_size + x;
          for (std::size_t ch = 0; ch < 3; ++ch) {
            patch.push_back(image.rgb[(row * image.width + col) * 3 + ch] / 255.0);
          }
        }
      }
      grid.patches.push_back(std::move(patch));
    }
  }
  return grid;
}

}  // namespace sgmm::tem
