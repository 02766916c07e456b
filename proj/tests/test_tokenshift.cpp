#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "faktlab/tokenshift/tokenshift.hpp"
#include "support.hpp"
#include "tinylm/transformer.hpp"

using namespace faktlab;
using namespace faktlab::tokenshift;
using tinylm::Vocab;

namespace {

// Rank by sorting: descending probability, ties by ascending id.
std::size_t sorted_rank(const std::vector<double>& p, TokenId t) {
  std::vector<TokenId> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
    return p[a] != p[b] ? p[a] > p[b] : a < b;
  });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), t) - order.begin());
}

// Fixed first-step distribution over a, b, c; EOS afterwards.
tinylm::FunctionModel toy(const Vocab& v, std::array<double, 3> probs, std::size_t prompt_len) {
  return tinylm::FunctionModel(v, 8, [&v, probs, prompt_len](std::span<const TokenId> ctx) {
    std::vector<double> l(v.size(), -std::numeric_limits<double>::infinity());
    if (ctx.size() > prompt_len) {
      l[Vocab::kEosId] = 0.0;
    } else {
      l[static_cast<std::size_t>(v.id("a"))] = std::log(probs[0]);
      l[static_cast<std::size_t>(v.id("b"))] = std::log(probs[1]);
      l[static_cast<std::size_t>(v.id("c"))] = std::log(probs[2]);
    }
    return l;
  });
}

std::vector<std::string> random_prompts(const Vocab& v, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string p;
    for (std::size_t k = 0, len = 1 + rng.below(4); k < len; ++k)
      p += (k ? " " : "") + v.token(static_cast<TokenId>(6 + rng.below(v.size() - 6)));
    out.push_back(p);
  }
  return out;
}

}  // namespace

TEST_CASE("toy rank shift") {
  Vocab v;
  for (const char* w : {"a", "b", "c", "q"}) v.add(w);
  const std::vector<double> base_p = {0.5, 0.3, 0.2}, aligned_p = {0.2, 0.5, 0.3};
  auto base = toy(v, {0.5, 0.3, 0.2}, 1);
  auto aligned = toy(v, {0.2, 0.5, 0.3}, 1);
  auto recs = analyze(aligned, base, {"q"});
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].token == v.id("b"));
  CHECK(recs[0].rank_aligned == 0);
  CHECK(recs[0].rank_base == 1);
  CHECK(recs[0].delta == 1);
  CHECK(recs[1].token == Vocab::kEosId);
  CHECK(recs[1].delta == 0);
  CHECK(recs[1].relative_position == 0.5);

  // Oracle over the full distributions, specials included at probability 0.
  std::vector<double> pb(v.size(), 0.0), pa(v.size(), 0.0);
  for (int i = 0; i < 3; ++i) {
    pb[static_cast<std::size_t>(v.id(std::string(1, char('a' + i))))] = base_p[i];
    pa[static_cast<std::size_t>(v.id(std::string(1, char('a' + i))))] = aligned_p[i];
  }
  CHECK(recs[0].rank_base == sorted_rank(pb, recs[0].token));
  CHECK(recs[0].rank_aligned == sorted_rank(pa, recs[0].token));
  CHECK(histogram(recs).shifted_rate == 0.5);

  CHECK_THROWS(analyze(aligned, testing::random_model(1), {"q"}));
}

TEST_CASE("self comparison is null and perturbation is detected") {
  auto model = testing::random_model(3, 30, 0.3, 8, 64);
  auto prompts = random_prompts(model.vocab(), 120, 9);
  auto self = analyze(model, model, prompts);
  REQUIRE(self.size() >= 1000);
  for (const auto& r : self) {
    CHECK(r.delta == 0);
    CHECK(r.rank_aligned < model.vocab().size());
  }
  auto h = histogram(self);
  CHECK(h.shifted_rate == 0.0);
  CHECK(h.abs_shifted_rate == 0.0);

  // Rank oracle on a sample of records.
  for (std::size_t i = 0; i < self.size(); i += 97) {
    const auto& r = self[i];
    std::vector<TokenId> ctx = model.vocab().encode(prompts[r.prompt_id]);
    for (std::size_t j = i - r.position; j < i; ++j) ctx.push_back(self[j].token);
    CHECK(r.rank_aligned == sorted_rank(model.next_token_dist(ctx), r.token));
  }

  auto perturbed = model;
  {
    tinylm::detail::ParamLayout layout(model.config());
    auto p = perturbed.mutable_params();
    Rng rng(4);
    for (std::size_t i = layout.w_out; i < layout.b_out + layout.vocab; ++i) p[i] += 0.5 * rng.normal();
  }
  auto moved = analyze(perturbed, model, prompts);
  REQUIRE(moved.size() >= 1000);
  auto hm = histogram(moved);
  CHECK(hm.shifted_rate > 0.0);
  double abs_self = 0.0, abs_moved = 0.0;
  for (const auto& r : moved) abs_moved += std::abs(static_cast<double>(r.delta));
  CHECK(abs_moved / moved.size() > abs_self);
  for (const auto& r : moved) {
    CHECK(r.delta == static_cast<std::int64_t>(r.rank_base) - static_cast<std::int64_t>(r.rank_aligned));
    CHECK(r.rank_aligned == 0);  // greedy emits the aligned argmax
  }
}

TEST_CASE("histogram partition") {
  std::vector<ShiftRecord> recs;
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    ShiftRecord r;
    r.relative_position = rng.uniform();
    r.delta = static_cast<std::int64_t>(rng.below(400)) - 100;
    recs.push_back(r);
  }
  for (std::size_t buckets : {1u, 7u, 10u}) {
    auto h = histogram(recs, buckets);
    std::size_t sum = 0;
    double freq = 0.0;
    for (std::size_t b = 0; b < buckets; ++b)
      for (std::size_t l = 0; l < kNumLevels; ++l) {
        sum += h.counts[b][l];
        freq += h.frequency(b, l);
      }
    CHECK(sum == 500);
    CHECK(freq == doctest::Approx(1.0));
  }
  CHECK(delta_level(-1) == 0);
  CHECK(delta_level(0) == 1);
  CHECK(delta_level(2) == 2);
  CHECK(delta_level(3) == 3);
  CHECK(delta_level(10) == 3);
  CHECK(delta_level(11) == 4);
  CHECK(delta_level(100) == 4);
  CHECK(delta_level(101) == 5);

  ShiftRecord one;
  one.relative_position = 0.05;
  auto h1 = histogram({one});
  CHECK(h1.counts[0][1] == 1);
  ShiftRecord last;
  last.relative_position = 0.99;
  CHECK(histogram({last}).counts[9][1] == 1);
  CHECK_THROWS(histogram({}));

  auto csv = histogram_csv(histogram(recs));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  CHECK(histogram_svg(histogram(recs), "t").find("<svg") == 0);
  const auto rows = records_csv(recs);
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 501);
}

TEST_CASE("diagnosis") {
  auto rates = [](double id, double ood) {
    ShiftHistogram a, b;
    a.shifted_rate = a.abs_shifted_rate = id;
    b.shifted_rate = b.abs_shifted_rate = ood;
    return std::pair{a, b};
  };
  auto [id1, ood1] = rates(0.30, 0.09);
  auto d = diagnose(id1, ood1);
  CHECK(d.ratio == doctest::Approx(0.3));
  CHECK(d.verdict == Verdict::UnderAlignment);
  auto [id2, ood2] = rates(0.2, 0.2);
  CHECK(diagnose(id2, ood2).ratio == 1.0);
  CHECK(diagnose(id2, ood2).verdict == Verdict::Inconclusive);
  auto [id3, ood3] = rates(0.2, 0.0);
  CHECK(diagnose(id3, ood3).ratio == 0.0);
  CHECK(diagnose(id3, ood3).verdict == Verdict::UnderAlignment);
  auto [id4, ood4] = rates(0.0, 0.1);
  CHECK_THROWS(diagnose(id4, ood4));
  CHECK(d.summary().find("ratio=0.3000") != std::string::npos);
}
