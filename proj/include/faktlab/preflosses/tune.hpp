#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "faktlab/preflosses/losses.hpp"
#include "faktlab/tinylm/model.hpp"
#include "faktlab/tinylm/optimizer.hpp"

namespace faktlab::preflosses {

using tinylm::TokenId;

struct TrainConfig {
  std::size_t epochs = 3;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t grad_accum = 1;
  std::uint64_t seed = 0;
  tinylm::OptimizerKind optimizer = tinylm::OptimizerKind::AdamW;

  static TrainConfig desk() { return {}; }
  // Settings used for 7B-scale models.
  static TrainConfig large_scale() { return {3, 1e-6, 4, 4, 0, tinylm::OptimizerKind::AdamW}; }
  void validate() const;
};

/// A tokenized (x, y_w, y_l) triple.
struct TokenPair {
  std::vector<TokenId> prompt;
  std::vector<TokenId> chosen;
  std::vector<TokenId> rejected;
};

struct TrainLogRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  LossKind kind = LossKind::Dpo;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct TuneResult {
  tinylm::PolicyModel model;
  std::vector<TrainLogRow> log;
};

/// Logprobs of one pair under policy and reference, honoring the
/// length-normalization switch.
PairLogprobs pair_logprobs(const tinylm::PolicyModel& policy,
                           const tinylm::PolicyModel& reference, const TokenPair& pair,
                           const LossConfig& loss);

/// Mean loss of a batch of pairs evaluated as one batch.
double dataset_loss(const tinylm::PolicyModel& policy, const tinylm::PolicyModel& reference,
                    const std::vector<TokenPair>& pairs, const LossConfig& loss);

/// Preference tuning. Each optimizer update consumes batch_size * grad_accum
/// pairs in micro-batches of batch_size (the KTO KL estimate is per
/// micro-batch); an epoch has ceil(|D| / (batch_size * grad_accum)) updates.
TuneResult tune(const tinylm::PolicyModel& model, const tinylm::PolicyModel& reference,
                const std::vector<TokenPair>& dataset, const LossConfig& loss,
                const TrainConfig& train);

std::string train_log_csv(const std::vector<TrainLogRow>& log);

}  // namespace faktlab::preflosses
