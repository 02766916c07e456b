#pragma once

// Internal: parameter layout and dense kernels of the transformer.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "faktlab/tinylm/model.hpp"

namespace faktlab::tinylm::detail {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using ColVec = Eigen::VectorXd;

struct LayerOffsets {
  std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o;
  std::size_t ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
};

struct ParamLayout {
  explicit ParamLayout(const ModelConfig& config);

  std::size_t vocab, dim, heads, context, hidden;
  std::size_t tok_emb, pos_emb;
  std::vector<LayerOffsets> layers;
  std::size_t lnf_g, lnf_b, w_out, b_out;
  std::size_t total;
};

struct LayerCache {
  Mat xhat1, a, qkv, attn, xhat2, b, hpre, hact;
  ColVec rstd1, rstd2;
  std::vector<Mat> probs;  // per head, lower triangular
};

struct ForwardCache {
  std::vector<TokenId> input;    // BOS + prompt + response[:-1]
  std::vector<TokenId> targets;  // response
  std::size_t first = 0;         // row predicting targets[0]
  std::vector<LayerCache> layers;
  Mat xhatf, f;
  ColVec rstdf;
  Mat probs_out;  // softmax of logits rows [first, first + targets.size())
};

/// Runs the network over `cache.input`; logits are materialized for rows
/// starting at `first_logit_row`.
void forward(const ParamLayout& layout, std::span<const double> params, ForwardCache& cache,
             std::size_t first_logit_row);

/// Logits of the last input row (cache must be fresh from forward()).
RowVec last_logits(const ParamLayout& layout, std::span<const double> params,
                   const ForwardCache& cache);

/// grad += scale * d(sum of target logprobs)/d(params).
void backward(const ParamLayout& layout, std::span<const double> params,
              const ForwardCache& cache, double scale, std::span<double> grad);

/// Single-position incremental evaluation with cached keys and values.
class KvDecoder {
 public:
  KvDecoder(const ParamLayout& layout, std::span<const double> params);

  void step(TokenId token);
  std::size_t length() const noexcept { return pos_; }
  const std::vector<double>& logits() const noexcept { return logits_; }

 private:
  const ParamLayout& layout_;
  std::span<const double> params_;
  std::vector<Mat> keys_, values_;
  std::size_t pos_ = 0;
  std::vector<double> logits_;
};

}  // namespace faktlab::tinylm::detail
