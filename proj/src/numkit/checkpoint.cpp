#include "sgmm/numkit/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "sgmm/error.hpp"

namespace sgmm::numkit {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 8);
}

// Returns false on clean end of stream before the first byte.
bool get_u32(std::istream& in, std::uint32_t& v, bool eof_ok) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (in.gcount() == 0 && eof_ok && in.eof()) return false;
  if (in.gcount() != 4) throw FormatError("checkpoint: truncated u32", 0);
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

double get_f64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (in.gcount() != 8) throw FormatError("checkpoint: truncated payload", 0);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& records) {
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  for (const auto& r : records) {
    if (shape_numel(r.shape) != r.data.size()) {
      throw ShapeError("checkpoint record '" + r.name + "' has inconsistent shape");
    }
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    put_u32(out, static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double d : r.data) put_f64(out, d);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic", 0);
  }
  std::uint32_t version = 0;
  get_u32(in, version, false);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version), 0);
  }
  std::vector<NamedTensor> records;
  std::uint32_t name_len = 0;
  while (get_u32(in, name_len, true)) {
    NamedTensor r;
    r.name.resize(name_len);
    in.read(r.name.data(), name_len);
    if (static_cast<std::uint32_t>(in.gcount()) != name_len) {
      throw FormatError("checkpoint: truncated name", records.size() + 1);
    }
    std::uint32_t rank = 0;
    get_u32(in, rank, false);
    r.shape.resize(rank);
    for (auto& d : r.shape) {
      std::uint32_t v = 0;
      get_u32(in, v, false);
      d = v;
    }
    r.data.resize(shape_numel(r.shape));
    for (auto& d : r.data) d = get_f64(in);
    records.push_back(std::move(r));
  }
  return records;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, records);
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace sgmm::numkit
