#include <doctest.h>

#include <cmath>
#include <numeric>

#include "faktlab/error.hpp"
#include "faktlab/tinylm/optimizer.hpp"
#include "support.hpp"
#include "tinylm/transformer.hpp"

using namespace faktlab;
using namespace faktlab::tinylm;
using testing::random_model;

namespace {

// Model whose every parameter is zero except the output bias: the final
// LayerNorm then emits zeros, so every position predicts softmax(b_out).
PolicyModel bias_only_model(const std::vector<double>& bias) {
  Vocab v = testing::toy_vocab(bias.size() - 6);
  ModelConfig c;
  c.vocab_size = v.size();
  c.embed_dim = 4;
  c.num_heads = 2;
  c.context_len = 8;
  detail::ParamLayout layout(c);
  std::vector<double> p(layout.total, 0.0);
  std::copy(bias.begin(), bias.end(), p.begin() + static_cast<long>(layout.b_out));
  return PolicyModel(c, v, p, false);
}

double total_of(const PolicyModel& m, std::span<const TokenId> prompt,
                std::span<const TokenId> response, const std::vector<double>& params) {
  PolicyModel probe(m.config(), m.vocab(), params, false);
  return probe.sequence_logprob(prompt, response).total_logprob;
}

}  // namespace

TEST_CASE("vocab layout and round trip") {
  Vocab v;
  CHECK(v.size() == 6);
  CHECK(v.id("TRUE") == Vocab::kTrueId);
  CHECK(v.id("PREMISE_FALSE") == Vocab::kPremiseFalseId);
  auto a = v.add("alpha");
  CHECK(v.add("alpha") == a);
  v.add("beta");
  std::vector<TokenId> ids{a, 7, a, Vocab::kTrueId};
  CHECK(v.encode(v.decode(ids)) == ids);
  CHECK_THROWS_AS(v.encode("alpha gamma"), Error);
  CHECK_THROWS_AS(Vocab(std::vector<std::string>{"x", "y"}), Error);
  CHECK(Vocab(v.tokens()) == v);
}

TEST_CASE("init_model is deterministic and validates dimensions") {
  Vocab v = testing::toy_vocab(4);
  ModelConfig c;
  c.vocab_size = v.size();
  c.seed = 11;
  auto a = init_model(c, v);
  auto b = init_model(c, v);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  c.embed_dim = 65;
  CHECK_THROWS_AS(init_model(c, v), Error);
}

TEST_CASE("softmax of the (2,1,0) toy") {
  // exp(2), exp(1), exp(0) normalized by hand.
  const double z = std::exp(2.0) + std::exp(1.0) + 1.0;
  auto p = softmax(std::vector<double>{2.0, 1.0, 0.0});
  CHECK(p[0] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.66524).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(p[2] == doctest::Approx(0.09003).epsilon(1e-4));
}

TEST_CASE("next_token_dist is normalized and uniform for a zero output layer") {
  auto m = random_model(3);
  std::vector<TokenId> ctx{6, 7, 8, 9};
  auto p = m.next_token_dist(ctx);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : p) CHECK(x >= 0.0);

  auto z = bias_only_model(std::vector<double>(12, 0.0));
  for (double x : z.next_token_dist(ctx)) CHECK(x == doctest::Approx(1.0 / 12).epsilon(1e-12));

  std::vector<TokenId> too_long(m.config().context_len, 6);
  CHECK_THROWS_AS(m.next_token_dist(too_long), Error);
}

TEST_CASE("sequence_logprob sums stepwise probabilities") {
  // Token 6 has p = 0.5 and token 7 has p = 0.25 at every position.
  std::vector<double> bias(12, std::log(0.25 / 10.0));
  bias[6] = std::log(0.5);
  bias[7] = std::log(0.25);
  auto m = bias_only_model(bias);
  std::vector<TokenId> prompt{8, 9};
  std::vector<TokenId> resp{6, 7};
  auto s = m.sequence_logprob(prompt, resp);
  CHECK(s.total_logprob == doctest::Approx(std::log(0.125)).epsilon(1e-12));
  CHECK(s.total_logprob == doctest::Approx(-2.079442).epsilon(1e-6));
  CHECK(m.sequence_logprob(prompt, {}).total_logprob == 0.0);

  auto r = random_model(5);
  auto one = r.sequence_logprob(prompt, std::vector<TokenId>{7});
  CHECK(one.total_logprob == doctest::Approx(std::log(r.next_token_dist(prompt)[7])).epsilon(1e-12));

  std::vector<TokenId> longer{6, 7, 8, 9, 10, 11};
  auto sc = r.sequence_logprob(prompt, longer);
  double sum = 0.0;
  for (double x : sc.per_token_logprobs) {
    CHECK(x <= 0.0);
    sum += x;
  }
  CHECK(sc.total_logprob == doctest::Approx(sum).epsilon(1e-9));
  // Stepwise agreement with next_token_dist.
  std::vector<TokenId> ctx = prompt;
  for (std::size_t i = 0; i < longer.size(); ++i) {
    auto p = r.next_token_dist(ctx);
    CHECK(sc.per_token_logprobs[i] == doctest::Approx(std::log(p[longer[i]])).epsilon(1e-10));
    ctx.push_back(longer[i]);
  }

  std::vector<TokenId> overflow(r.config().context_len, 6);
  CHECK_THROWS_AS(r.sequence_logprob(prompt, overflow), Error);
}

TEST_CASE("cached decoding matches full recomputation") {
  auto m = random_model(8);
  std::vector<TokenId> prompt{6, 9, 12};
  auto session = m.start(prompt);
  std::vector<TokenId> ctx = prompt;
  for (TokenId t : {7, 8, 15, 6, 11}) {
    auto full = m.next_token_logits(ctx);
    auto inc = session->logits();
    REQUIRE(full.size() == inc.size());
    for (std::size_t i = 0; i < full.size(); ++i) CHECK(inc[i] == doctest::Approx(full[i]).epsilon(1e-10));
    session->push(t);
    ctx.push_back(t);
  }
}

TEST_CASE("gradient matches central finite differences on 200 coordinates") {
  auto m = random_model(21);
  std::vector<TokenId> prompt{6, 7, 8};
  std::vector<TokenId> resp{9, 10, 6, 11, Vocab::kEosId};
  auto grad = m.grad_sequence_logprob(prompt, resp);
  std::vector<double> params(m.params().begin(), m.params().end());
  auto f = [&](const std::vector<double>& p) { return total_of(m, prompt, resp, p); };
  Rng rng(99);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::size_t i = rng.below(params.size());
    worst = std::max(worst, testing::rel_err(grad[i], testing::central_diff(params, i, f)));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("gradient of a dead parameter is zero and gradients add over tokens") {
  auto m = random_model(4);
  detail::ParamLayout layout(m.config());
  std::vector<TokenId> prompt{6, 7};
  std::vector<TokenId> resp{8, 9};
  auto g = m.grad_sequence_logprob(prompt, resp);
  // Embedding row of a token absent from the input cannot matter.
  for (std::size_t j = 0; j < layout.dim; ++j) CHECK(g[layout.tok_emb + 15 * layout.dim + j] == 0.0);
  // Positions beyond the input cannot matter either.
  for (std::size_t j = 0; j < layout.dim; ++j)
    CHECK(g[layout.pos_emb + 10 * layout.dim + j] == 0.0);

  std::vector<TokenId> p2{6, 7, 8};
  auto g1 = m.grad_sequence_logprob(prompt, std::vector<TokenId>{8});
  auto g2 = m.grad_sequence_logprob(p2, std::vector<TokenId>{9});
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - (g1[i] + g2[i])) <= 1e-10 * (1.0 + std::abs(g[i])));
}

TEST_CASE("frozen snapshots are immutable") {
  auto m = random_model(6);
  auto snap = m.snapshot_frozen();
  CHECK(snap.frozen());
  CHECK_THROWS_AS(snap.mutable_params(), Error);
  std::vector<TokenId> prompt{6};
  std::vector<TokenId> resp{7, 8};
  CHECK_THROWS_AS(snap.grad_sequence_logprob(prompt, resp), Error);
  CHECK(snap.sequence_logprob(prompt, resp).total_logprob ==
        m.sequence_logprob(prompt, resp).total_logprob);
  auto snap2 = snap.snapshot_frozen();
  CHECK(std::equal(snap.params().begin(), snap.params().end(), snap2.params().begin()));

  std::vector<double> before(snap.params().begin(), snap.params().end());
  auto opt = make_optimizer(OptimizerKind::AdamW, m.params().size());
  for (int step = 0; step < 100; ++step) {
    auto g = m.grad_sequence_logprob(prompt, resp);
    for (double& x : g) x = -x;
    opt->step(m.mutable_params(), g, 1e-2);
  }
  CHECK(m.sequence_logprob(prompt, resp).total_logprob >
        snap.sequence_logprob(prompt, resp).total_logprob);
  CHECK(std::equal(before.begin(), before.end(), snap.params().begin()));
}

TEST_CASE("checkpoint round trip is byte identical") {
  auto m = random_model(12);
  auto bytes = serialize_checkpoint(m);
  CHECK(bytes.substr(0, 6) == "FAKTLM");
  auto back = deserialize_checkpoint(bytes);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(back.vocab() == m.vocab());
  CHECK(back.config() == m.config());
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), Error);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
}

TEST_CASE("sampling contract") {
  auto m = random_model(2);
  std::vector<TokenId> prompt{6, 7};
  SampleSpec greedy;
  greedy.max_len = 6;
  CHECK(sample(m, prompt, greedy).tokens == sample(m, prompt, greedy).tokens);
  SampleSpec multi{Strategy::Multinomial, 1.0, 6, 42, {}};
  auto a = sample(m, prompt, multi);
  CHECK(a.tokens == sample(m, prompt, multi).tokens);
  CHECK(a.tokens.size() <= 6);
  if (a.tokens.back() != Vocab::kEosId) CHECK(a.truncated);
  SampleSpec bad{Strategy::Multinomial, 0.0, 6, 1, {}};
  CHECK_THROWS_AS(sample(m, prompt, bad), Error);

  SampleSpec constrained{Strategy::Multinomial, 1.0, 1, 5, {Vocab::kTrueId, Vocab::kFalseId}};
  for (std::uint64_t s = 0; s < 50; ++s) {
    constrained.seed = s;
    auto t = sample(m, prompt, constrained).tokens.front();
    CHECK((t == Vocab::kTrueId || t == Vocab::kFalseId));
  }
}

TEST_CASE("multinomial first-token frequencies follow the (2,1,0) softmax") {
  Vocab v;
  std::vector<double> logits(v.size(), -1e9);
  logits[3] = 2.0;
  logits[4] = 1.0;
  logits[5] = 0.0;
  FunctionModel toy(v, 8, [&](std::span<const TokenId>) { return logits; });
  const double z = std::exp(2.0) + std::exp(1.0) + 1.0;
  const double expect[3] = {std::exp(2.0) / z, std::exp(1.0) / z, 1.0 / z};
  int counts[3] = {0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    SampleSpec s{Strategy::Multinomial, 1.0, 1, static_cast<std::uint64_t>(i), {}};
    auto t = sample(toy, {}, s).tokens.front();
    REQUIRE(t >= 3);
    REQUIRE(t <= 5);
    ++counts[t - 3];
  }
  for (int k = 0; k < 3; ++k) CHECK(std::abs(counts[k] / double(n) - expect[k]) <= 0.02);
}

TEST_CASE("token_rank orders ties by id") {
  std::vector<double> p{0.2, 0.5, 0.3};
  CHECK(token_rank(p, 1) == 0);
  CHECK(token_rank(p, 2) == 1);
  CHECK(token_rank(p, 0) == 2);
  std::vector<double> tie{0.25, 0.25, 0.5};
  CHECK(token_rank(tie, 0) == 1);
  CHECK(token_rank(tie, 1) == 2);
}
