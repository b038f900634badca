#include "sgmm/embeddings/word_vectors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sgmm/error.hpp"
#include "sgmm/numkit/random.hpp"

namespace sgmm::embeddings {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

const std::vector<double>* WordVectorTable::find(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

void WordVectorTable::insert(std::string token, std::vector<double> vec) {
  if (tokens_.empty() && dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_) {
    throw FormatError("token \"" + token + "\" has " + std::to_string(vec.size()) +
                          " values, expected " + std::to_string(dim_),
                      0);
  }
  if (vectors_.count(token)) throw FormatError("duplicate token \"" + token + "\"", 0);
  tokens_.push_back(token);
  vectors_.emplace(std::move(token), std::move(vec));
}

WordVectorTable load_word_vectors(std::string_view bytes) {
  WordVectorTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    const std::string_view line = bytes.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) throw FormatError("line " + std::to_string(line_no) + ": no vector values", line_no);
    std::vector<double> vec;
    vec.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x = 0.0;
      const auto f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(x)) {
        throw FormatError("line " + std::to_string(line_no) + ": bad number \"" + std::string(f) + "\"",
                          line_no);
      }
      vec.push_back(x);
    }
    const std::string token = scenegraph::normalize_label(fields[0]);
    if (table.size() > 0 && vec.size() != table.dim()) {
      throw FormatError("line " + std::to_string(line_no) + ": " + std::to_string(vec.size()) +
                            " values, expected " + std::to_string(table.dim()),
                        line_no);
    }
    if (table.find(token)) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate token \"" + token + "\"", line_no);
    }
    table.insert(token, std::move(vec));
  }
  return table;
}

WordVectorTable load_word_vectors_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open word vectors " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_word_vectors(ss.str());
}

std::vector<double> oov_vector(std::string_view word, std::size_t dim, std::uint64_t seed) {
  numkit::Rng rng(numkit::hash_key({seed, numkit::fnv1a(word)}));
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0 && dim > 0) {
    for (auto& x : v) x = rng.normal();
    for (double x : v) norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<double> featurize_node(const scenegraph::Node& node, const WordVectorTable& table,
                                   std::uint64_t seed) {
  std::vector<double> out(table.dim(), 0.0);
  const auto words = split_ws(node.label);
  if (words.empty()) return out;
  for (auto w : words) {
    if (const auto* v = table.find(w)) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
    } else {
      const auto v2 = oov_vector(w, table.dim(), seed);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += v2[i];
    }
  }
  for (auto& x : out) x /= static_cast<double>(words.size());
  return out;
}

scenegraph::NodeFeaturizer make_featurizer(const WordVectorTable& table, std::uint64_t seed) {
  return [&table, seed](const scenegraph::Node& n) { return featurize_node(n, table, seed); };
}

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kGlove:
      return "glove";
    case FeatureMode::kN2v:
      return "n2v";
    case FeatureMode::kConcat:
      return "concat";
  }
  return "?";
}

FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "glove") return FeatureMode::kGlove;
  if (s == "n2v") return FeatureMode::kN2v;
  if (s == "concat") return FeatureMode::kConcat;
  throw ConfigError("unknown feature mode \"" + std::string(s) + "\"");
}

std::vector<double> combine_features(const std::vector<double>& glove, const std::vector<double>& n2v,
                                     FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kGlove:
      return glove;
    case FeatureMode::kN2v:
      if (n2v.empty()) throw ConfigError("feature mode n2v needs node2vec features");
      return n2v;
    case FeatureMode::kConcat: {
      if (n2v.empty()) throw ConfigError("feature mode concat needs node2vec features");
      std::vector<double> out = glove;
      out.insert(out.end(), n2v.begin(), n2v.end());
      return out;
    }
  }
  return glove;
}

}  // namespace sgmm::embeddings
