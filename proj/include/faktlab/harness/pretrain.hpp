#pragma once

#include <cstdint>
#include <vector>

#include "faktlab/tinylm/model.hpp"
#include "faktlab/world/corpus.hpp"

namespace faktlab::harness {

struct PretrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 3e-3;
  double final_lr_fraction = 0.1;  // linear decay to this fraction of the rate
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TokenDoc {
  std::vector<tinylm::TokenId> prompt;
  std::vector<tinylm::TokenId> response;  // ends with EOS
};

std::vector<TokenDoc> tokenize_corpus(const world::Corpus& corpus, const tinylm::Vocab& vocab);

struct PretrainEpoch {
  std::size_t epoch;
  double mean_nll;  // per document
  double token_nll;
};

struct PretrainResult {
  tinylm::PolicyModel model;
  std::vector<PretrainEpoch> log;
};

/// Maximum likelihood on responses only: prompts condition but are not
/// scored.
PretrainResult pretrain(tinylm::PolicyModel model, const std::vector<TokenDoc>& docs,
                        const PretrainConfig& config);

}  // namespace faktlab::harness
