#include <doctest.h>

#include <algorithm>
#include <set>

#include "faktlab/factuality/factscore.hpp"
#include "faktlab/rng.hpp"
#include "faktlab/world/corpus.hpp"

using namespace faktlab;
using namespace faktlab::factuality;
using world::Relation;

namespace {

struct Assembled {
  std::string text;
  std::vector<Triple> triples;
};

// Random text of KB-true, distractor and unknown-entity sentences.
Assembled assemble(const KnowledgeBase& kb, Rng& rng, std::size_t n) {
  Assembled a;
  for (std::size_t i = 0; i < n; ++i) {
    auto t = kb.triple(rng.below(kb.size()), world::kRelations[rng.below(8)]);
    const double u = rng.uniform();
    if (u < 0.3) t.object = world::draw_distractor(kb, t.entity, t.relation, 1.0, rng);
    else if (u < 0.4) t.entity = "Ghost_Person";
    if (!a.text.empty()) a.text += ' ';
    a.text += world::verbalize_text(t, rng.below(4));
    a.triples.push_back(t);
  }
  return a;
}

}  // namespace

TEST_CASE("extraction round trip and degenerate texts") {
  auto kb = world::gen_kb(1, 30);
  Rng rng(2);
  auto a = assemble(kb, rng, 6);
  auto ex = extract_atomic_facts(a.text);
  REQUIRE(ex.facts.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(ex.facts[i].triple == a.triples[i]);
    CHECK(a.text.substr(ex.facts[i].begin, ex.facts[i].end - ex.facts[i].begin) ==
          ex.facts[i].sentence);
  }
  CHECK(ex.unparsed.empty());
  CHECK(extract_atomic_facts("").facts.empty());

  // One good sentence followed by the same words shuffled.
  auto good = world::canonical_sentence(kb.triple(0, Relation::Award));
  auto words = tinylm::split_words(good);
  std::vector<std::string> shuffled(words.begin(), words.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 2, shuffled.end() - 1);
  std::string garbled;
  for (auto& w : shuffled) garbled += w + " ";
  auto mixed = extract_atomic_facts(good + " " + garbled);
  CHECK(mixed.facts.size() == 1);
  CHECK(mixed.unparsed.size() == 1);
}

TEST_CASE("markers are stripped before parsing") {
  auto kb = world::gen_kb(1, 10);
  auto t = kb.triple(2, Relation::Field);
  auto r = factscore("PREMISE_FALSE " + world::canonical_sentence(t) + " <eos>", kb);
  CHECK(r.nc == 1);
  CHECK(r.total == 1);
  CHECK(r.unparsed == 0);
}

TEST_CASE("verdicts") {
  auto kb = world::gen_kb(1, 10);
  auto t = kb.triple(1, Relation::Team);
  CHECK(verify_fact(t, kb) == Verdict::Supported);
  Rng rng(3);
  t.object = world::draw_distractor(kb, t.entity, t.relation, 1.0, rng);
  CHECK(verify_fact(t, kb) == Verdict::Contradicted);
  t.entity = "Ghost_Person";
  CHECK(verify_fact(t, kb) == Verdict::NotFound);
}

TEST_CASE("worked score: three supported, one contradicted") {
  auto kb = world::gen_kb(4, 10);
  std::string text;
  for (int i = 0; i < 3; ++i) text += world::canonical_sentence(kb.triple(i, Relation::BornCity)) + " ";
  auto bad = kb.triple(5, Relation::Occupation);
  bad.object = bad.object == "poet" ? "painter" : "poet";
  text += world::verbalize_text(bad, 2);
  auto r = factscore(text, kb);
  CHECK(r.fs == 0.75);
  CHECK(r.nc == 3);
  CHECK(r.ne == 1);
  auto empty = factscore("nothing parses here", kb);
  CHECK(empty.fs == 0.0);
  CHECK(empty.empty_response);
}

TEST_CASE("oracle equivalence on 500 assembled texts") {
  auto kb = world::gen_kb(5, 100);
  std::set<Triple> truth;
  for (const auto& t : kb.triples()) truth.insert(t);
  std::set<std::string> known(kb.entities().begin(), kb.entities().end());
  Rng rng(6);
  for (int k = 0; k < 500; ++k) {
    auto a = assemble(kb, rng, 1 + rng.below(8));
    std::size_t nc = 0, ne = 0, nf = 0;
    for (const auto& t : a.triples) {
      if (truth.count(t)) ++nc;
      else if (known.count(t.entity)) ++ne;
      else ++nf;
    }
    auto r = factscore(a.text, kb);
    CHECK(r.nc == nc);
    CHECK(r.ne == ne);
    CHECK(r.nf == nf);
    CHECK(r.fs == static_cast<double>(nc) / static_cast<double>(nc + ne + nf));

    ScoreOptions excl{false};
    auto r2 = factscore(a.text, kb, excl);
    CHECK(r2.total == nc + ne);
  }
}

TEST_CASE("fs is permutation invariant and monotone under appends") {
  auto kb = world::gen_kb(7, 50);
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    auto a = assemble(kb, rng, 2 + rng.below(6));
    std::vector<std::string> sentences;
    for (const auto& f : extract_atomic_facts(a.text).facts) sentences.push_back(f.sentence);
    rng.shuffle(std::span(sentences));
    std::string permuted;
    for (const auto& s : sentences) permuted += s + " ";
    const double base = factscore(a.text, kb).fs;
    CHECK(factscore(permuted, kb).fs == base);

    auto good = kb.triple(rng.below(kb.size()), Relation::Spouse);
    CHECK(factscore(a.text + " " + world::canonical_sentence(good), kb).fs >= base);
    auto bad = good;
    bad.object = world::draw_distractor(kb, good.entity, good.relation, 1.0, rng);
    CHECK(factscore(a.text + " " + world::canonical_sentence(bad), kb).fs <= base);
  }
}

TEST_CASE("audit records carry triple, verdict and span") {
  auto kb = world::gen_kb(4, 10);
  auto text = world::canonical_sentence(kb.triple(0, Relation::Award));
  auto recs = audit_records("t0", factscore(text, kb));
  REQUIRE(recs.size() == 1);
  CHECK(recs[0]["verdict"] == "supported");
  CHECK(recs[0]["span"][1].get<std::size_t>() == text.size());
}
