#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgmm/numkit/tensor.hpp"

namespace sgmm::numkit {

// Binary container: magic "SGMM", u32 version, then records of
// (u32 name length, UTF-8 name, u32 rank, u32 dims[rank], f64 payload),
// all little-endian, until end of stream.
inline constexpr char kCheckpointMagic[4] = {'S', 'G', 'M', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& records);
std::vector<NamedTensor> read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace sgmm::numkit
