#include "faktlab/tinylm/vocab.hpp"

#include "faktlab/error.hpp"

namespace faktlab::tinylm {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

Vocab::Vocab() {
  for (auto s : {kPad, kBos, kEos, kTrue, kFalse, kPremiseFalse}) add(s);
}

Vocab::Vocab(std::vector<std::string> tokens) {
  static constexpr std::string_view kSpecials[] = {kPad, kBos, kEos,
                                                   kTrue, kFalse, kPremiseFalse};
  if (tokens.size() < std::size(kSpecials))
    fail(ErrorKind::InvalidArgument, "vocabulary is missing special tokens");
  for (std::size_t i = 0; i < std::size(kSpecials); ++i) {
    if (tokens[i] != kSpecials[i])
      fail(ErrorKind::InvalidArgument, "special token out of place: " + tokens[i]);
  }
  for (auto& t : tokens) {
    if (t.empty() || split_words(t).size() != 1)
      fail(ErrorKind::InvalidArgument, "invalid token '" + t + "'");
    if (index_.contains(t)) fail(ErrorKind::InvalidArgument, "duplicate token '" + t + "'");
    index_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(t));
  }
}

TokenId Vocab::add(std::string_view token) {
  if (auto found = find(token)) return *found;
  if (token.empty() || split_words(token).size() != 1)
    fail(ErrorKind::InvalidArgument, "invalid token '" + std::string(token) + "'");
  auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view token) const {
  if (auto found = find(token)) return *found;
  fail(ErrorKind::InvalidArgument, "unknown token '" + std::string(token) + "'");
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    fail(ErrorKind::InvalidArgument, "token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocab::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (auto w : split_words(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += token(ids[i]);
  }
  return out;
}

}  // namespace faktlab::tinylm
