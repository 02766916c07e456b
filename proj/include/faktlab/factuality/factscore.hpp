#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "faktlab/io.hpp"
#include "faktlab/world/kb.hpp"

namespace faktlab::factuality {

using world::KnowledgeBase;
using world::Triple;

struct AtomicFact {
  Triple triple;
  std::size_t begin = 0;  // character range [begin, end) in the source text
  std::size_t end = 0;
  std::string sentence;
};

struct UnparsedSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};

struct Extraction {
  std::vector<AtomicFact> facts;
  std::vector<UnparsedSpan> unparsed;
};

/// Splits on "." and "?" words and parses each sentence with the template
/// grammar. Marker tokens (TRUE, FALSE, PREMISE_FALSE, control tokens) are
/// dropped before splitting.
Extraction extract_atomic_facts(std::string_view text);

enum class Verdict { Supported, Contradicted, NotFound };
std::string_view verdict_name(Verdict v);

Verdict verify_fact(const Triple& fact, const KnowledgeBase& kb);

struct ScoreOptions {
  /// When false, NotFound facts are reported but left out of total and fs.
  bool count_not_found = true;
};

struct FactualityReport {
  double fs = 0.0;
  std::size_t nc = 0;
  std::size_t ne = 0;
  std::size_t nf = 0;
  std::size_t total = 0;
  bool empty_response = false;
  std::size_t unparsed = 0;
  std::vector<AtomicFact> facts;
  std::vector<Verdict> verdicts;
};

FactualityReport factscore(std::string_view text, const KnowledgeBase& kb,
                           const ScoreOptions& options = {});

/// One audit record per fact: triple, verdict and span.
std::vector<io::Json> audit_records(std::string_view text_id, const FactualityReport& report);

}  // namespace faktlab::factuality
