#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgmm/model/example.hpp"

namespace sgmm::harness {

// One manifest line. Paths are relative to the manifest's directory.
struct ManifestRecord {
  std::string id;
  std::string text;
  std::string image_path;
  std::string tsg_path;
  std::string vsg_path;
  int label = 0;  // 1 fake, 0 real
  model::Split split = model::Split::kTrain;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// One compact JSON object per line, keys in declaration order.
std::string serialize_manifest(const std::vector<ManifestRecord>& records);

// ParseError / FieldError name the 1-based line. Blank lines are skipped.
std::vector<ManifestRecord> parse_manifest(std::string_view bytes);

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

// Reads every referenced file and validates each record. All failures are
// collected into one DatasetError naming the offending record ids.
std::vector<model::Example> load_dataset(const std::filesystem::path& manifest_path);

// Whole-file helpers; IoError on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace sgmm::harness
