#include "faktlab/factuality/factscore.hpp"

#include "faktlab/tinylm/vocab.hpp"

namespace faktlab::factuality {

namespace {

struct Word {
  std::string_view text;
  std::size_t begin;
};

bool is_marker(std::string_view w) {
  using tinylm::Vocab;
  return w == Vocab::kTrue || w == Vocab::kFalse || w == Vocab::kPremiseFalse ||
         w == Vocab::kEos || w == Vocab::kBos || w == Vocab::kPad;
}

std::vector<Word> words_with_offsets(std::string_view text) {
  std::vector<Word> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size()) {
    while (i < text.size() && space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !space(text[i])) ++i;
    if (i > start) out.push_back({text.substr(start, i - start), start});
  }
  return out;
}

}  // namespace

Extraction extract_atomic_facts(std::string_view text) {
  Extraction out;
  std::vector<Word> sentence;
  auto flush = [&] {
    if (sentence.empty()) return;
    const std::size_t b = sentence.front().begin;
    const std::size_t e = sentence.back().begin + sentence.back().text.size();
    std::vector<std::string_view> ws;
    for (const auto& w : sentence) ws.push_back(w.text);
    auto parsed = world::parse_sentence(std::span<const std::string_view>(ws));
    std::string joined;
    for (auto w : ws) {
      if (!joined.empty()) joined += ' ';
      joined += w;
    }
    const auto& last = sentence.back().text;
    if (parsed && last == ".") out.facts.push_back({std::move(*parsed), b, e, std::move(joined)});
    else out.unparsed.push_back({b, e, std::move(joined)});
    sentence.clear();
  };
  for (const auto& w : words_with_offsets(text)) {
    if (is_marker(w.text)) {
      flush();
      continue;
    }
    sentence.push_back(w);
    if (w.text == "." || w.text == "?") flush();
  }
  flush();
  return out;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Supported: return "supported";
    case Verdict::Contradicted: return "contradicted";
    case Verdict::NotFound: return "not_found";
  }
  return "?";
}

Verdict verify_fact(const Triple& fact, const KnowledgeBase& kb) {
  const std::string* obj = kb.find(fact.entity, fact.relation);
  if (!obj) return Verdict::NotFound;
  return *obj == fact.object ? Verdict::Supported : Verdict::Contradicted;
}

FactualityReport factscore(std::string_view text, const KnowledgeBase& kb,
                           const ScoreOptions& options) {
  FactualityReport r;
  auto ex = extract_atomic_facts(text);
  r.unparsed = ex.unparsed.size();
  r.facts = std::move(ex.facts);
  for (const auto& f : r.facts) {
    const Verdict v = verify_fact(f.triple, kb);
    r.verdicts.push_back(v);
    if (v == Verdict::Supported) ++r.nc;
    else if (v == Verdict::Contradicted) ++r.ne;
    else ++r.nf;
  }
  r.total = r.nc + r.ne + (options.count_not_found ? r.nf : 0);
  r.empty_response = r.total == 0;
  r.fs = r.total ? static_cast<double>(r.nc) / static_cast<double>(r.total) : 0.0;
  return r;
}

std::vector<io::Json> audit_records(std::string_view text_id, const FactualityReport& report) {
  std::vector<io::Json> out;
  for (std::size_t i = 0; i < report.facts.size(); ++i) {
    const auto& f = report.facts[i];
    out.push_back({{"text", std::string(text_id)},
                   {"entity", f.triple.entity},
                   {"relation", std::string(world::relation_name(f.triple.relation))},
                   {"object", f.triple.object},
                   {"verdict", std::string(verdict_name(report.verdicts[i]))},
                   {"span", {f.begin, f.end}},
                   {"sentence", f.sentence}});
  }
  return out;
}

}  // namespace faktlab::factuality
