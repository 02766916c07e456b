#include "faktlab/tinylm/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "faktlab/error.hpp"
#include "faktlab/rng.hpp"

namespace faktlab::tinylm {

namespace {

class FunctionSession final : public DecodeSession {
 public:
  FunctionSession(const FunctionModel::LogitsFn& fn, std::span<const TokenId> prompt)
      : fn_(fn), context_(prompt.begin(), prompt.end()) {
    refresh();
  }

  std::span<const double> logits() const override { return logits_; }
  void push(TokenId token) override {
    context_.push_back(token);
    refresh();
  }
  std::size_t length() const override { return context_.size() + 1; }

 private:
  void refresh() { logits_ = fn_(context_); }

  const FunctionModel::LogitsFn& fn_;
  std::vector<TokenId> context_;
  std::vector<double> logits_;
};

}  // namespace

std::unique_ptr<DecodeSession> FunctionModel::start(std::span<const TokenId> prompt) const {
  return std::make_unique<FunctionSession>(fn_, prompt);
}

void SampleSpec::validate() const {
  if (strategy == Strategy::Multinomial && !(temperature > 0.0))
    fail(ErrorKind::InvalidArgument, "multinomial sampling needs temperature > 0");
  if (max_len == 0) fail(ErrorKind::InvalidArgument, "max_len must be positive");
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> p(logits.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (double l : logits) hi = std::max(hi, l);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - hi) / temperature);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> constrained_softmax(std::span<const double> logits,
                                        std::span<const TokenId> allowed,
                                        double temperature) {
  if (allowed.empty()) return softmax(logits, temperature);
  std::vector<double> sub;
  sub.reserve(allowed.size());
  for (TokenId t : allowed) sub.push_back(logits[static_cast<std::size_t>(t)]);
  auto ps = softmax(sub, temperature);
  std::vector<double> p(logits.size(), 0.0);
  for (std::size_t i = 0; i < allowed.size(); ++i) p[static_cast<std::size_t>(allowed[i])] += ps[i];
  return p;
}

TokenId argmax(std::span<const double> values, std::span<const TokenId> allowed) {
  TokenId best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  auto consider = [&](TokenId t) {
    double v = values[static_cast<std::size_t>(t)];
    if (best < 0 || v > best_v || (v == best_v && t < best)) {
      best = t;
      best_v = v;
    }
  };
  if (allowed.empty()) {
    for (std::size_t i = 0; i < values.size(); ++i) consider(static_cast<TokenId>(i));
  } else {
    for (TokenId t : allowed) consider(t);
  }
  return best;
}

SampleResult sample(const LanguageModel& model, std::span<const TokenId> prompt,
                    const SampleSpec& spec) {
  spec.validate();
  SampleResult out;
  auto session = model.start(prompt);
  Rng rng(spec.seed);
  while (true) {
    auto logits = session->logits();
    TokenId next;
    if (spec.strategy == Strategy::Greedy) {
      next = argmax(logits, spec.allowed);
    } else {
      auto p = constrained_softmax(logits, spec.allowed, spec.temperature);
      next = static_cast<TokenId>(rng.categorical(p));
    }
    out.tokens.push_back(next);
    if (next == Vocab::kEosId) break;
    if (out.tokens.size() >= spec.max_len || session->length() >= model.context_len()) {
      out.truncated = true;
      break;
    }
    session->push(next);
  }
  return out;
}

std::size_t token_rank(std::span<const double> probs, TokenId token) {
  const auto t = static_cast<std::size_t>(token);
  if (t >= probs.size()) fail(ErrorKind::InvalidArgument, "token outside distribution");
  const double pt = probs[t];
  std::size_t rank = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > pt || (probs[i] == pt && i < t)) ++rank;
  }
  return rank;
}

}  // namespace faktlab::tinylm
