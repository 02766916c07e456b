#include "faktlab/world/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "faktlab/error.hpp"
#include "faktlab/io.hpp"

namespace faktlab::world {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {"plain", "bio", "open",
                                                        "qa",    "false_premise", "probe"};

io::Json triple_json(const Triple& t) {
  return io::Json::array({t.entity, std::string(relation_name(t.relation)), t.object});
}

Triple triple_from(const io::Json& j) {
  return {j.at(0).get<std::string>(), parse_relation(j.at(1).get<std::string>()),
          j.at(2).get<std::string>()};
}

}  // namespace

std::string_view doc_kind_name(DocKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

DocKind parse_doc_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<DocKind>(i);
  fail(ErrorKind::Io, "unknown document kind '" + std::string(name) + "'");
}

void CorpusSpec::validate() const {
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v < 1.0))
      fail(ErrorKind::Config, std::string(name) + " must lie in [0, 1)");
  };
  rate(noise_rate, "noise_rate");
  rate(rejection_exemplar_rate, "rejection_exemplar_rate");
  rate(probe_exemplar_rate, "probe_exemplar_rate");
  if (num_entities < 2) fail(ErrorKind::Config, "num_entities must be at least 2");
  if (sentences_per_entity == 0) fail(ErrorKind::Config, "sentences_per_entity must be >= 1");
  if (!(distractor_skew >= 0.0)) fail(ErrorKind::Config, "distractor_skew must be >= 0");
}

std::size_t Corpus::fact_sentences() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.asserted.size();
  return n;
}

std::size_t Corpus::corrupted_sentences() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.corrupted;
  return n;
}

std::string draw_distractor(const KnowledgeBase& kb, const std::string& entity, Relation r,
                            double skew, Rng& rng) {
  const auto& pool = kb.pool(r);
  const std::string& truth = kb.object(entity, r);
  std::vector<double> w(pool.size(), 0.0);
  for (std::size_t k = 0; k < pool.size(); ++k) {
    if (pool[k] == truth || pool[k] == entity) continue;
    w[k] = 1.0 / std::pow(static_cast<double>(k + 1), skew);
  }
  return pool[rng.categorical(w)];
}

Corpus gen_corpus(const KnowledgeBase& kb, const CorpusSpec& spec) {
  spec.validate();
  if (spec.num_entities != kb.size())
    fail(ErrorKind::Config, "corpus spec names " + std::to_string(spec.num_entities) +
                                " entities but the KB has " + std::to_string(kb.size()));
  const Rng root = Rng(spec.seed).split("corpus");
  Corpus out;

  auto maybe_corrupt = [&](Triple t, Rng& rng, std::size_t& corrupted) {
    if (rng.uniform() < spec.noise_rate) {
      t.object = draw_distractor(kb, t.entity, t.relation, spec.distractor_skew, rng);
      ++corrupted;
    }
    return t;
  };

  for (std::size_t i = 0; i < kb.size(); ++i) {
    Rng er = root.split("facts").split(i);
    std::vector<Relation> seq;
    while (seq.size() < spec.sentences_per_entity) {
      auto pass = std::vector<Relation>(kRelations.begin(), kRelations.end());
      er.shuffle(std::span(pass));
      seq.insert(seq.end(), pass.begin(), pass.end());
    }
    seq.resize(spec.sentences_per_entity);

    std::size_t at = 0;
    while (at < seq.size()) {
      const std::size_t want = 2 + er.below(4);
      std::vector<Relation> chunk;
      while (at < seq.size() && chunk.size() < want &&
             std::find(chunk.begin(), chunk.end(), seq[at]) == chunk.end())
        chunk.push_back(seq[at++]);

      CorpusDoc doc;
      const double u = er.uniform();
      doc.kind = chunk.size() < 2 ? DocKind::Plain
                 : u < 0.35       ? DocKind::Plain
                 : u < 0.85       ? DocKind::Bio
                                  : DocKind::Open;
      const auto& name = kb.entities()[i];
      if (doc.kind == DocKind::Bio) doc.prompt = bio_prompt(name);
      if (doc.kind == DocKind::Open) doc.prompt = open_prompt(name, chunk[0], chunk[1]);
      for (Relation r : chunk) {
        Triple t = maybe_corrupt(kb.triple(i, r), er, doc.corrupted);
        if (!doc.response.empty()) doc.response += ' ';
        doc.response += verbalize_text(t, er.below(templates_for(r).size()));
        doc.asserted.push_back(std::move(t));
      }
      out.docs.push_back(std::move(doc));
    }

    Rng qr = root.split("qa").split(i);
    for (std::size_t q = 0; q < spec.qa_per_entity; ++q) {
      const Relation r = kRelations[qr.below(kNumRelations)];
      CorpusDoc doc;
      doc.kind = DocKind::Qa;
      doc.prompt = kqa_question(kb.entities()[i], r);
      Triple t = maybe_corrupt(kb.triple(i, r), qr, doc.corrupted);
      doc.response = kqa_answer(t.object);
      doc.asserted.push_back(std::move(t));
      out.docs.push_back(std::move(doc));
    }
  }

  // Exemplar counts are rates relative to the fact and QA documents.
  const auto base = static_cast<double>(out.docs.size());
  const auto n_reject = static_cast<std::size_t>(std::llround(spec.rejection_exemplar_rate * base));
  const auto n_probe = static_cast<std::size_t>(std::llround(spec.probe_exemplar_rate * base));

  Rng fr = root.split("premise");
  for (std::size_t k = 0; k < 2 * n_reject; ++k) {
    const std::size_t e = fr.below(kb.size());
    const Relation r = kRelations[fr.below(kNumRelations)];
    const Triple truth = kb.triple(e, r);
    CorpusDoc doc;
    doc.kind = DocKind::FalsePremise;
    if (k < n_reject) {
      const auto wrong = draw_distractor(kb, truth.entity, r, spec.distractor_skew, fr);
      doc.prompt = fp_question(truth.entity, r, wrong);
      doc.response = fp_rejection(truth);
    } else {
      // Contrast exemplar: a true premise is answered, not rejected.
      doc.prompt = fp_question(truth.entity, r, truth.object);
      doc.response = canonical_sentence(truth);
    }
    out.docs.push_back(std::move(doc));
  }

  Rng pr = root.split("probe");
  for (std::size_t k = 0; k < n_probe; ++k) {
    const std::size_t e = pr.below(kb.size());
    const Relation r = kRelations[pr.below(kNumRelations)];
    Triple t = kb.triple(e, r);
    const bool truthful = pr.uniform() < 0.5;
    if (!truthful) t.object = draw_distractor(kb, t.entity, r, spec.distractor_skew, pr);
    CorpusDoc doc;
    doc.kind = DocKind::Probe;
    doc.prompt = probe_prompt(verbalize_text(t, pr.below(templates_for(r).size())));
    doc.response = std::string(truthful ? tinylm::Vocab::kTrue : tinylm::Vocab::kFalse);
    out.docs.push_back(std::move(doc));
  }

  Rng order = root.split("order");
  order.shuffle(std::span(out.docs));
  return out;
}

void save_corpus(const Corpus& corpus, const CorpusSpec& spec, const std::filesystem::path& path) {
  io::Json header = {{"schema", "faktlab.corpus/1"},
                     {"seed", spec.seed},
                     {"noise_rate", spec.noise_rate},
                     {"documents", corpus.docs.size()},
                     {"fact_sentences", corpus.fact_sentences()},
                     {"corrupted_sentences", corpus.corrupted_sentences()}};
  std::vector<io::Json> records;
  records.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) {
    io::Json asserted = io::Json::array();
    for (const auto& t : d.asserted) asserted.push_back(triple_json(t));
    records.push_back({{"kind", std::string(doc_kind_name(d.kind))},
                       {"prompt", d.prompt},
                       {"response", d.response},
                       {"asserted", asserted},
                       {"corrupted", d.corrupted}});
  }
  io::write_jsonl(path, header, records);
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto jl = io::read_jsonl(path, "faktlab.corpus/1");
  Corpus c;
  for (const auto& r : jl.records) {
    CorpusDoc d;
    d.kind = parse_doc_kind(r.at("kind").get<std::string>());
    d.prompt = r.at("prompt").get<std::string>();
    d.response = r.at("response").get<std::string>();
    for (const auto& t : r.at("asserted")) d.asserted.push_back(triple_from(t));
    d.corrupted = r.at("corrupted").get<std::size_t>();
    c.docs.push_back(std::move(d));
  }
  return c;
}

}  // namespace faktlab::world
