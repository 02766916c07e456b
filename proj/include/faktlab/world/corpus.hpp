#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faktlab/rng.hpp"
#include "faktlab/world/kb.hpp"

namespace faktlab::world {

struct CorpusSpec {
  std::size_t num_entities = 100;
  double noise_rate = 0.15;
  std::size_t sentences_per_entity = 24;
  double rejection_exemplar_rate = 0.05;
  double probe_exemplar_rate = 0.08;
  std::size_t qa_per_entity = 4;
  /// Zipf exponent over each pool's popularity order when drawing distractors.
  double distractor_skew = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class DocKind { Plain, Bio, Open, Qa, FalsePremise, Probe };

std::string_view doc_kind_name(DocKind k);
DocKind parse_doc_kind(std::string_view name);

/// One training document. Pretraining scores only the response (plus EOS).
struct CorpusDoc {
  DocKind kind = DocKind::Plain;
  std::string prompt;
  std::string response;
  /// Triples the response asserts, as written (corrupted ones included).
  std::vector<Triple> asserted;
  /// How many asserted triples disagree with the KB.
  std::size_t corrupted = 0;
};

struct Corpus {
  std::vector<CorpusDoc> docs;

  std::size_t fact_sentences() const;
  std::size_t corrupted_sentences() const;
};

/// Draws a wrong object for (entity, r) from the pool, Zipf-weighted by
/// popularity rank with the true object excluded.
std::string draw_distractor(const KnowledgeBase& kb, const std::string& entity, Relation r,
                            double skew, Rng& rng);

Corpus gen_corpus(const KnowledgeBase& kb, const CorpusSpec& spec);

void save_corpus(const Corpus& corpus, const CorpusSpec& spec, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace faktlab::world
