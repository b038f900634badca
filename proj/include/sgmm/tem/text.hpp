#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sgmm::tem {

// Lowercase (Unicode, NFC), split on whitespace, and emit every ASCII
// punctuation character as its own token.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kMask = 2;
  static constexpr std::string_view kPadToken = "[PAD]";
  static constexpr std::string_view kUnkToken = "[UNK]";
  static constexpr std::string_view kMaskToken = "[MASK]";

  Vocabulary();

  // Most frequent tokens of the tokenized corpus, ties broken
  // lexicographically; max_size counts the three specials.
  static Vocabulary build(const std::vector<std::string>& corpus, std::size_t max_size);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t id(std::string_view token) const;  // kUnk when absent
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;

  // One token per line; the line index is the id.
  std::string to_text() const;
  static Vocabulary from_text(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

}  // namespace sgmm::tem
