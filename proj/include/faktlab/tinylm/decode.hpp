#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "faktlab/tinylm/vocab.hpp"

namespace faktlab::tinylm {

/// Incremental decoding state. The implicit sequence is BOS + prompt + every
/// pushed token; logits() scores the token that follows it.
class DecodeSession {
 public:
  virtual ~DecodeSession() = default;
  virtual std::span<const double> logits() const = 0;
  virtual void push(TokenId token) = 0;
  /// Positions consumed so far, BOS included.
  virtual std::size_t length() const = 0;
};

/// Anything that can score next tokens: the trained model, or a test stub.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual const Vocab& vocab() const = 0;
  virtual std::size_t context_len() const = 0;
  virtual std::unique_ptr<DecodeSession> start(std::span<const TokenId> prompt) const = 0;
};

/// Adapts a plain "logits of the next token given the context" function into
/// a LanguageModel. Every step re-evaluates the full context.
class FunctionModel final : public LanguageModel {
 public:
  using LogitsFn = std::function<std::vector<double>(std::span<const TokenId> context)>;

  FunctionModel(Vocab vocab, std::size_t context_len, LogitsFn fn)
      : vocab_(std::move(vocab)), context_len_(context_len), fn_(std::move(fn)) {}

  const Vocab& vocab() const override { return vocab_; }
  std::size_t context_len() const override { return context_len_; }
  std::unique_ptr<DecodeSession> start(std::span<const TokenId> prompt) const override;

 private:
  Vocab vocab_;
  std::size_t context_len_;
  LogitsFn fn_;
};

enum class Strategy { Greedy, Multinomial };

struct SampleSpec {
  Strategy strategy = Strategy::Greedy;
  double temperature = 1.0;
  std::size_t max_len = 48;
  std::uint64_t seed = 0;
  /// When non-empty, decoding is restricted to these tokens.
  std::vector<TokenId> allowed;

  void validate() const;
};

struct SampleResult {
  std::vector<TokenId> tokens;  // includes the terminating EOS when emitted
  bool truncated = false;
};

/// Softmax with temperature; entries are nonnegative and sum to 1.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

/// Probabilities over `allowed` only (renormalized), as a full-size vector.
std::vector<double> constrained_softmax(std::span<const double> logits,
                                        std::span<const TokenId> allowed,
                                        double temperature = 1.0);

/// Index of the largest logit; ties resolve to the smallest token id.
TokenId argmax(std::span<const double> values, std::span<const TokenId> allowed = {});

SampleResult sample(const LanguageModel& model, std::span<const TokenId> prompt,
                    const SampleSpec& spec);

/// Rank of `token` under `probs`: number of tokens strictly more probable, plus
/// equally probable tokens with a smaller id. 0 is the most probable token.
std::size_t token_rank(std::span<const double> probs, TokenId token);

}  // namespace faktlab::tinylm
