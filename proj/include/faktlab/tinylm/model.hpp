#pragma once

#include <cstdint>
#include <memory>
#include <new>
#include <span>
#include <vector>

#include "faktlab/tinylm/decode.hpp"
#include "faktlab/tinylm/vocab.hpp"

namespace faktlab::tinylm {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t context_len = 64;
  std::size_t mlp_dim = 0;  // 0 means 4 * embed_dim
  std::uint64_t seed = 0;

  std::size_t hidden_dim() const noexcept { return mlp_dim ? mlp_dim : 4 * embed_dim; }
  std::size_t head_dim() const noexcept { return embed_dim / num_heads; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct SequenceScore {
  std::vector<double> per_token_logprobs;
  double total_logprob = 0.0;
};

namespace detail {
struct ForwardCache;
}

/// 64-byte aligned storage. Vectorized kernels choose their peeling from the
/// buffer address, so a fixed alignment is what makes results bit-stable.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{64}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{64}); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using ParamVector = std::vector<double, AlignedAllocator<double>>;

/// Forward activations of one (prompt, response) pair, kept for backprop.
class SequenceTrace {
 public:
  SequenceTrace();
  SequenceTrace(SequenceTrace&&) noexcept;
  SequenceTrace& operator=(SequenceTrace&&) noexcept;
  ~SequenceTrace();

  const SequenceScore& score() const noexcept { return score_; }

 private:
  friend class PolicyModel;
  std::unique_ptr<detail::ForwardCache> cache_;
  SequenceScore score_;
};

/// Pre-norm decoder-only transformer over a flat parameter vector.
///
/// Inputs are always BOS followed by the caller's tokens, so a context of n
/// tokens occupies n + 1 positions and must fit in context_len.
class PolicyModel final : public LanguageModel {
 public:
  PolicyModel(ModelConfig config, Vocab vocab, std::vector<double> params, bool frozen);

  const ModelConfig& config() const noexcept { return config_; }
  const Vocab& vocab() const override { return vocab_; }
  std::size_t context_len() const override { return config_.context_len; }
  bool frozen() const noexcept { return frozen_; }

  std::span<const double> params() const noexcept { return params_; }
  /// Writable view of the parameters; a frozen model refuses.
  std::span<double> mutable_params();

  std::vector<double> next_token_logits(std::span<const TokenId> context) const;
  std::vector<double> next_token_dist(std::span<const TokenId> context) const;

  SequenceScore sequence_logprob(std::span<const TokenId> prompt,
                                 std::span<const TokenId> response) const;

  /// d(total logprob)/d(params). Refused on frozen models.
  std::vector<double> grad_sequence_logprob(std::span<const TokenId> prompt,
                                            std::span<const TokenId> response) const;

  /// Forward pass that keeps activations for a later backprop().
  SequenceTrace trace(std::span<const TokenId> prompt, std::span<const TokenId> response) const;
  /// grad += scale * d(total logprob of trace)/d(params).
  void backprop(const SequenceTrace& trace, double scale, std::span<double> grad) const;

  std::unique_ptr<DecodeSession> start(std::span<const TokenId> prompt) const override;

  PolicyModel snapshot_frozen() const;

 private:
  ModelConfig config_;
  Vocab vocab_;
  ParamVector params_;
  bool frozen_;
};

/// Parameter count implied by a configuration.
std::size_t param_count(const ModelConfig& config);

/// Deterministic initialization from config.seed.
PolicyModel init_model(const ModelConfig& config, const Vocab& vocab);

PolicyModel snapshot_frozen(const PolicyModel& model);

/// Byte-level checkpoint I/O ("FAKTLM" format).
std::string serialize_checkpoint(const PolicyModel& model);
PolicyModel deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const PolicyModel& model, const std::string& path);
PolicyModel load_checkpoint(const std::string& path);

}  // namespace faktlab::tinylm
