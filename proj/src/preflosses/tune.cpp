#include "faktlab/preflosses/tune.hpp"

#include <cmath>
#include <numeric>

#include "faktlab/error.hpp"
#include "faktlab/io.hpp"
#include "faktlab/rng.hpp"

namespace faktlab::preflosses {

using tinylm::PolicyModel;

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || grad_accum == 0)
    fail(ErrorKind::Config, "epochs, batch_size and grad_accum must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    fail(ErrorKind::Config, "learning_rate must be a nonnegative number");
}

namespace {

double norm_factor(const std::vector<TokenId>& response, const LossConfig& loss) {
  if (!loss.length_normalized || response.empty()) return 1.0;
  return 1.0 / static_cast<double>(response.size());
}

double logprob(const PolicyModel& m, const std::vector<TokenId>& prompt,
               const std::vector<TokenId>& response, const LossConfig& loss) {
  return m.sequence_logprob(prompt, response).total_logprob * norm_factor(response, loss);
}

}  // namespace

PairLogprobs pair_logprobs(const PolicyModel& policy, const PolicyModel& reference,
                           const TokenPair& pair, const LossConfig& loss) {
  PairLogprobs p;
  p.lw_pol = logprob(policy, pair.prompt, pair.chosen, loss);
  p.ll_pol = logprob(policy, pair.prompt, pair.rejected, loss);
  if (loss.kind != LossKind::Cpo) {
    p.lw_ref = logprob(reference, pair.prompt, pair.chosen, loss);
    p.ll_ref = logprob(reference, pair.prompt, pair.rejected, loss);
  }
  return p;
}

double dataset_loss(const PolicyModel& policy, const PolicyModel& reference,
                    const std::vector<TokenPair>& pairs, const LossConfig& loss) {
  std::vector<PairLogprobs> lp;
  lp.reserve(pairs.size());
  for (const auto& pr : pairs) lp.push_back(pair_logprobs(policy, reference, pr, loss));
  return batch_loss(lp, loss).value;
}

TuneResult tune(const PolicyModel& model, const PolicyModel& reference,
                const std::vector<TokenPair>& dataset, const LossConfig& loss,
                const TrainConfig& train) {
  loss.validate();
  train.validate();
  if (!reference.frozen()) fail(ErrorKind::InvalidArgument, "reference model must be frozen");
  if (dataset.empty()) fail(ErrorKind::InvalidArgument, "preference dataset is empty");
  if (!(reference.vocab() == model.vocab()))
    fail(ErrorKind::InvalidArgument, "policy and reference vocabularies differ");

  PolicyModel policy(model.config(), model.vocab(),
                     std::vector<double>(model.params().begin(), model.params().end()), false);
  const std::size_t n = dataset.size();

  std::vector<double> ref_w(n, 0.0), ref_l(n, 0.0);
  if (loss.kind != LossKind::Cpo) {
    for (std::size_t i = 0; i < n; ++i) {
      ref_w[i] = logprob(reference, dataset[i].prompt, dataset[i].chosen, loss);
      ref_l[i] = logprob(reference, dataset[i].prompt, dataset[i].rejected, loss);
    }
  }

  auto opt = tinylm::make_optimizer(train.optimizer, policy.params().size());
  tinylm::ParamVector grad(policy.params().size());
  const std::size_t per_update = train.batch_size * train.grad_accum;
  const std::size_t updates = (n + per_update - 1) / per_update;
  Rng shuffle_rng = Rng(train.seed).split("tune-shuffle");

  TuneResult out{std::move(policy), {}};
  PolicyModel& pol = out.model;
  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng er = shuffle_rng.split(epoch);
    er.shuffle(std::span(order));
    for (std::size_t u = 0; u < updates; ++u) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t begin = u * per_update;
      const std::size_t end = std::min(n, begin + per_update);
      const std::size_t micro_count = (end - begin + train.batch_size - 1) / train.batch_size;
      double loss_sum = 0.0;
      for (std::size_t mb = begin; mb < end; mb += train.batch_size) {
        const std::size_t me = std::min(end, mb + train.batch_size);
        std::vector<tinylm::SequenceTrace> tw, tl;
        std::vector<PairLogprobs> lp;
        for (std::size_t k = mb; k < me; ++k) {
          const auto& pr = dataset[order[k]];
          tw.push_back(pol.trace(pr.prompt, pr.chosen));
          tl.push_back(pol.trace(pr.prompt, pr.rejected));
          PairLogprobs p;
          p.lw_pol = tw.back().score().total_logprob * norm_factor(pr.chosen, loss);
          p.ll_pol = tl.back().score().total_logprob * norm_factor(pr.rejected, loss);
          p.lw_ref = ref_w[order[k]];
          p.ll_ref = ref_l[order[k]];
          lp.push_back(p);
        }
        auto bl = batch_loss(lp, loss);
        loss_sum += bl.value;
        const double w = 1.0 / static_cast<double>(micro_count);
        for (std::size_t j = 0; j < lp.size(); ++j) {
          const auto& pr = dataset[order[mb + j]];
          pol.backprop(tw[j], w * bl.d_lw_pol[j] * norm_factor(pr.chosen, loss), grad);
          pol.backprop(tl[j], w * bl.d_ll_pol[j] * norm_factor(pr.rejected, loss), grad);
        }
      }
      // backprop accumulates d(logprob); the loss derivative already carries
      // the sign, so grad now holds d(loss)/d(theta).
      double sq = 0.0;
      for (double g : grad) sq += g * g;
      opt->step(pol.mutable_params(), grad, train.learning_rate);
      for (double v : pol.params())
        if (!std::isfinite(v)) fail(ErrorKind::State, "training diverged (non-finite parameter)");
      out.log.push_back({++step, epoch + 1, loss.kind,
                         loss_sum / static_cast<double>(micro_count), std::sqrt(sq)});
    }
  }
  return out;
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  io::CsvWriter w({"step", "epoch", "loss_kind", "loss_value", "grad_norm"});
  for (const auto& r : log)
    w.row({std::to_string(r.step), std::to_string(r.epoch), to_string(r.kind),
           io::format_double(r.loss), io::format_double(r.grad_norm)});
  return w.str();
}

}  // namespace faktlab::preflosses
