#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sgmm/scenegraph/cmsg.hpp"
#include "sgmm/scenegraph/scene_graph.hpp"

namespace sgmm::embeddings {

inline constexpr std::uint64_t kDefaultFeatureSeed = 0x5eed;

class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  // Tokens in file order.
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<double>* find(std::string_view token) const;

  // Throws FormatError on a dimension mismatch or duplicate token.
  void insert(std::string token, std::vector<double> vec);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// "token v1 ... vd" per line. Tokens are lowercased; blank lines are skipped.
// Errors carry the 1-based line number.
WordVectorTable load_word_vectors(std::string_view bytes);
WordVectorTable load_word_vectors_file(const std::filesystem::path& path);

// Deterministic unit vector for an out-of-vocabulary word.
std::vector<double> oov_vector(std::string_view word, std::size_t dim, std::uint64_t seed);

// Mean of the per-word vectors of a whitespace-split label.
std::vector<double> featurize_node(const scenegraph::Node& node, const WordVectorTable& table,
                                   std::uint64_t seed = kDefaultFeatureSeed);

// featurize_node bound to a table, for cmsg_type3. The table must outlive it.
scenegraph::NodeFeaturizer make_featurizer(const WordVectorTable& table,
                                           std::uint64_t seed = kDefaultFeatureSeed);

enum class FeatureMode { kGlove, kN2v, kConcat };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view s);

// Selects or concatenates per `mode`. An empty n2v vector counts as missing.
std::vector<double> combine_features(const std::vector<double>& glove, const std::vector<double>& n2v,
                                     FeatureMode mode);

}  // namespace sgmm::embeddings
