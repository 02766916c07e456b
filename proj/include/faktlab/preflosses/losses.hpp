#pragma once

#include <span>
#include <string>
#include <vector>

namespace faktlab::preflosses {

enum class LossKind { Dpo, Ipo, Kto, Cpo, Rso };

inline constexpr LossKind kAllLosses[] = {LossKind::Dpo, LossKind::Ipo, LossKind::Kto,
                                          LossKind::Cpo, LossKind::Rso};

std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& name);

struct LossConfig {
  LossKind kind = LossKind::Dpo;
  double beta = 0.1;
  double tau = 0.1;
  double gamma = 0.1;
  double lambda_d = 1.0;
  double lambda_u = 1.0;
  /// Divide sequence logprobs by response length before the loss.
  bool length_normalized = false;

  void validate() const;
};

/// Total sequence logprobs of the chosen (w) and rejected (l) responses.
struct PairLogprobs {
  double lw_pol = 0.0;
  double ll_pol = 0.0;
  double lw_ref = 0.0;
  double ll_ref = 0.0;
};

struct LossOutput {
  double value = 0.0;
  double d_lw_pol = 0.0;
  double d_ll_pol = 0.0;
};

LossOutput dpo_loss(const PairLogprobs& p, const LossConfig& c);
LossOutput ipo_loss(const PairLogprobs& p, const LossConfig& c);
LossOutput cpo_loss(const PairLogprobs& p, const LossConfig& c);
LossOutput rso_loss(const PairLogprobs& p, const LossConfig& c);

/// Paired KTO with KL terms estimated from `batch`, which must contain `p`
/// (located by index). Derivatives are those of p's own value, including its
/// share of the batch KL estimates.
LossOutput kto_pair_loss(const PairLogprobs& p, const LossConfig& c,
                         std::span<const PairLogprobs> batch, std::size_t index);
/// Convenience overload: finds `p` in the batch by value.
LossOutput kto_pair_loss(const PairLogprobs& p, const LossConfig& c,
                         std::span<const PairLogprobs> batch);

/// Mean loss over a batch and its derivatives with respect to every pair's
/// policy logprobs. For KTO this includes the coupling through the batch KL.
struct BatchLoss {
  double value = 0.0;
  std::vector<double> d_lw_pol;
  std::vector<double> d_ll_pol;
};

BatchLoss batch_loss(std::span<const PairLogprobs> batch, const LossConfig& c);

/// Single-pair dispatch for the reference-free kinds and the one-pair KTO batch.
LossOutput pair_loss(const PairLogprobs& p, const LossConfig& c);

}  // namespace faktlab::preflosses
