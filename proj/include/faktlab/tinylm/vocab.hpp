#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace faktlab::tinylm {

using TokenId = std::int32_t;

/// Word-level vocabulary. Ids are dense in [0, size()); the six special
/// tokens always occupy ids 0..5 in the order below.
class Vocab {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kTrue = "TRUE";
  static constexpr std::string_view kFalse = "FALSE";
  static constexpr std::string_view kPremiseFalse = "PREMISE_FALSE";

  static constexpr TokenId kPadId = 0;
  static constexpr TokenId kBosId = 1;
  static constexpr TokenId kEosId = 2;
  static constexpr TokenId kTrueId = 3;
  static constexpr TokenId kFalseId = 4;
  static constexpr TokenId kPremiseFalseId = 5;

  Vocab();
  /// Rebuilds a vocabulary from a stored token list; validates the layout.
  explicit Vocab(std::vector<std::string> tokens);

  /// Returns the id of an existing token or appends a new one.
  TokenId add(std::string_view token);

  std::optional<TokenId> find(std::string_view token) const;
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  static bool is_special(TokenId id) noexcept { return id >= 0 && id <= kPremiseFalseId; }
  static bool is_control(TokenId id) noexcept {
    return id == kPadId || id == kBosId || id == kEosId;
  }

  /// Whitespace tokenization; unknown words are an error.
  std::vector<TokenId> encode(std::string_view text) const;
  /// Space-joined tokens; encode(decode(ids)) == ids.
  std::string decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_words(std::string_view text);

}  // namespace faktlab::tinylm
