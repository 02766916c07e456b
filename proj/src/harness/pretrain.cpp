#include "faktlab/harness/pretrain.hpp"

#include <cmath>
#include <numeric>

#include "faktlab/error.hpp"
#include "faktlab/rng.hpp"
#include "faktlab/tinylm/optimizer.hpp"

namespace faktlab::harness {

using tinylm::TokenId;
using tinylm::Vocab;

void PretrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) fail(ErrorKind::Config, "pretrain epochs and batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) fail(ErrorKind::Config, "pretrain learning_rate must be >= 0");
  if (!(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0))
    fail(ErrorKind::Config, "final_lr_fraction must lie in [0, 1]");
}

std::vector<TokenDoc> tokenize_corpus(const world::Corpus& corpus, const Vocab& vocab) {
  std::vector<TokenDoc> out;
  out.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) {
    TokenDoc t{vocab.encode(d.prompt), vocab.encode(d.response)};
    t.response.push_back(Vocab::kEosId);
    out.push_back(std::move(t));
  }
  return out;
}

PretrainResult pretrain(tinylm::PolicyModel model, const std::vector<TokenDoc>& docs,
                        const PretrainConfig& config) {
  config.validate();
  if (docs.empty()) fail(ErrorKind::InvalidArgument, "empty pretraining corpus");
  auto opt = tinylm::make_optimizer(tinylm::OptimizerKind::AdamW, model.params().size());
  tinylm::ParamVector grad(model.params().size());
  std::vector<std::size_t> order(docs.size());
  const std::size_t per_epoch = (docs.size() + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(per_epoch * config.epochs);
  const Rng rng = Rng(config.seed).split("pretrain");
  PretrainResult out{std::move(model), {}};
  auto& m = out.model;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng er = rng.split(epoch);
    er.shuffle(std::span(order));
    double nll = 0.0, tokens = 0.0;
    for (std::size_t b = 0; b < docs.size(); b += config.batch_size) {
      const std::size_t e = std::min(docs.size(), b + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double w = -1.0 / static_cast<double>(e - b);
      for (std::size_t k = b; k < e; ++k) {
        const auto& d = docs[order[k]];
        auto tr = m.trace(d.prompt, d.response);
        nll -= tr.score().total_logprob;
        tokens += static_cast<double>(d.response.size());
        m.backprop(tr, w, grad);
      }
      const double frac = static_cast<double>(step++) / total_steps;
      const double lr = config.learning_rate * (1.0 - (1.0 - config.final_lr_fraction) * frac);
      opt->step(m.mutable_params(), grad, lr);
    }
    out.log.push_back({epoch + 1, nll / static_cast<double>(docs.size()), nll / tokens});
  }
  return out;
}

}  // namespace faktlab::harness
