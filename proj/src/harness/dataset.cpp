#include "sgmm/harness/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sgmm/error.hpp"
#include "sgmm/scenegraph/scene_graph.hpp"
#include "sgmm/tem/image.hpp"

namespace sgmm::harness {

using OrderedJson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string serialize_manifest(const std::vector<ManifestRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    OrderedJson j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["image_path"] = r.image_path;
    j["tsg_path"] = r.tsg_path;
    j["vsg_path"] = r.vsg_path;
    j["label"] = r.label;
    j["split"] = model::to_string(r.split);
    out += j.dump() + "\n";
  }
  return out;
}

namespace {

std::string string_field(const nlohmann::json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_string()) throw FormatError(std::string("field \"") + key + "\" must be a string", line);
  return it->get<std::string>();
}

}  // namespace

std::vector<ManifestRecord> parse_manifest(std::string_view bytes) {
  std::vector<ManifestRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    const auto line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("malformed JSON: " + std::string(e.what()), line_no);
    }
    if (!j.is_object()) throw FormatError("record must be a JSON object", line_no);
    for (const auto& [key, value] : j.items()) {
      static const std::set<std::string> known = {"id", "text", "image_path", "tsg_path", "vsg_path", "label", "split"};
      if (!known.contains(key)) throw FormatError("unknown field \"" + key + "\"", line_no);
    }
    ManifestRecord r;
    r.id = string_field(j, "id", line_no);
    if (r.id.empty()) throw FormatError("empty id", line_no);
    r.text = string_field(j, "text", line_no);
    r.image_path = string_field(j, "image_path", line_no);
    r.tsg_path = string_field(j, "tsg_path", line_no);
    r.vsg_path = string_field(j, "vsg_path", line_no);
    const auto label = j.find("label");
    if (label == j.end() || !label->is_number_integer() || (*label != 0 && *label != 1)) {
      throw FormatError("field \"label\" must be 0 or 1", line_no);
    }
    r.label = label->get<int>();
    try {
      r.split = model::parse_split(string_field(j, "split", line_no));
    } catch (const FieldError& e) {
      throw FormatError(e.what(), line_no);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ManifestRecord> read_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_manifest(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ":" + std::to_string(e.line()) + ": " + e.what(), e.line());
  }
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
  write_file(path, serialize_manifest(records));
}

std::vector<model::Example> load_dataset(const fs::path& manifest_path) {
  const auto records = read_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<model::Example> out;
  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) {
      problems.push_back(r.id + ": duplicate id");
      continue;
    }
    model::Example ex;
    ex.id = r.id;
    ex.text = r.text;
    ex.label = r.label;
    ex.split = r.split;
    auto attempt = [&](const char* what, const std::string& rel, auto&& load) {
      const fs::path p = base / rel;
      try {
        if (!fs::exists(p)) throw IoError("missing file " + p.string());
        load(p);
        return true;
      } catch (const Error& e) {
        problems.push_back(r.id + ": " + what + ": " + e.what());
        return false;
      }
    };
    bool ok = attempt("image", r.image_path, [&](const fs::path& p) {
      ex.image = tem::load_ppm(p);
      tem::patchify(ex.image);
    });
    ok = attempt("tsg", r.tsg_path,
                 [&](const fs::path& p) { ex.tsg = scenegraph::load_scene_graph(p, scenegraph::Modality::kText); }) &&
         ok;
    ok = attempt("vsg", r.vsg_path,
                 [&](const fs::path& p) { ex.vsg = scenegraph::load_scene_graph(p, scenegraph::Modality::kVisual); }) &&
         ok;
    if (ok) out.push_back(std::move(ex));
  }
  if (!problems.empty()) throw DatasetError(std::move(problems));
  return out;
}

}  // namespace sgmm::harness
