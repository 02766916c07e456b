#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "faktlab/rng.hpp"
#include "faktlab/tinylm/model.hpp"

namespace testing {

using faktlab::tinylm::ModelConfig;
using faktlab::tinylm::PolicyModel;
using faktlab::tinylm::TokenId;
using faktlab::tinylm::Vocab;

inline Vocab toy_vocab(std::size_t extra) {
  Vocab v;
  for (std::size_t i = 0; i < extra; ++i) v.add("w" + std::to_string(i));
  return v;
}

/// Small random model with weights large enough that every parameter matters.
inline PolicyModel random_model(std::uint64_t seed, std::size_t extra_words = 10,
                                double spread = 0.3, std::size_t dim = 8,
                                std::size_t context = 16) {
  Vocab v = toy_vocab(extra_words);
  ModelConfig c;
  c.vocab_size = v.size();
  c.embed_dim = dim;
  c.num_layers = 2;
  c.num_heads = 2;
  c.context_len = context;
  c.seed = seed;
  auto base = faktlab::tinylm::init_model(c, v);
  std::vector<double> p(base.params().begin(), base.params().end());
  faktlab::Rng rng(seed ^ 0xabcdefull);
  for (double& x : p) x += spread * rng.normal();
  return PolicyModel(c, v, std::move(p), false);
}

/// |a - n| / max(|a|, |n|, floor); the floor keeps coordinates whose true
/// derivative is ~0 from dividing noise by noise.
inline double rel_err(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central finite difference of f at coordinate i of params, with the
/// step 1e-4 * max(1, |theta_i|).
inline double central_diff(std::vector<double>& params, std::size_t i,
                           const std::function<double(const std::vector<double>&)>& f) {
  const double orig = params[i];
  const double h = 1e-4 * std::max(1.0, std::abs(orig));
  params[i] = orig + h;
  const double up = f(params);
  params[i] = orig - h;
  const double down = f(params);
  params[i] = orig;
  return (up - down) / (2.0 * h);
}

}  // namespace testing
