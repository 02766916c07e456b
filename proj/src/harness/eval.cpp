#include "faktlab/harness/eval.hpp"

#include <cctype>

#include "faktlab/factuality/factscore.hpp"

namespace faktlab::harness {

namespace {

tinylm::SampleResult greedy(const tinylm::LanguageModel& model, const std::string& prompt,
                            const EvalSpec& spec) {
  tinylm::SampleSpec s;
  s.strategy = tinylm::Strategy::Greedy;
  s.max_len = spec.max_len;
  return tinylm::sample(model, model.vocab().encode(prompt), s);
}

double ratio(double num, std::size_t den) { return den ? num / static_cast<double>(den) : 0.0; }

}  // namespace

LongFormScore eval_long_form(const tinylm::LanguageModel& model,
                             const std::vector<world::Query>& queries,
                             const world::KnowledgeBase& kb, const EvalSpec& spec) {
  LongFormScore out;
  double fs = 0.0, nc = 0.0, ne = 0.0;
  for (const auto& q : queries) {
    const auto text = model.vocab().decode(greedy(model, q.prompt, spec).tokens);
    const auto r = factuality::factscore(text, kb);
    fs += r.fs;
    nc += static_cast<double>(r.nc);
    ne += static_cast<double>(r.ne);
    out.empty += r.empty_response;
  }
  out.prompts = queries.size();
  out.fs = ratio(fs, queries.size());
  out.nc = ratio(nc, queries.size());
  out.ne = ratio(ne, queries.size());
  return out;
}

double eval_false_premise(const tinylm::LanguageModel& model,
                          const std::vector<world::Query>& queries, const EvalSpec& spec) {
  std::size_t correct = 0;
  for (const auto& q : queries) {
    const auto r = greedy(model, q.prompt, spec);
    correct += !r.tokens.empty() && r.tokens.front() == tinylm::Vocab::kPremiseFalseId;
  }
  return ratio(static_cast<double>(correct), queries.size());
}

std::string normalize_answer(std::string_view text) {
  std::string out;
  bool space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      space = !out.empty();
    } else if (!std::ispunct(c)) {
      if (space) out += ' ';
      space = false;
      out += static_cast<char>(std::tolower(c));
    }
  }
  return out;
}

bool answer_matches(std::string_view response, std::string_view gold) {
  const auto g = normalize_answer(gold);
  if (g.empty()) return false;
  return (" " + normalize_answer(response) + " ").find(" " + g + " ") != std::string::npos;
}

double eval_short_qa(const tinylm::LanguageModel& model, const std::vector<world::Query>& queries,
                     const EvalSpec& spec) {
  std::size_t correct = 0;
  for (const auto& q : queries) {
    auto r = greedy(model, q.prompt, spec);
    // Control tokens are not part of the answer text.
    std::erase_if(r.tokens, [](tinylm::TokenId t) { return tinylm::Vocab::is_control(t); });
    correct += answer_matches(model.vocab().decode(r.tokens), q.gold);
  }
  return ratio(static_cast<double>(correct), queries.size());
}

EvalReport evaluate(const tinylm::LanguageModel& model, const world::QuerySets& queries,
                    const world::KnowledgeBase& kb, const EvalSpec& spec) {
  EvalReport r;
  r.bio = eval_long_form(model, queries.id_bio, kb, spec);
  r.fava = eval_long_form(model, queries.ood_open, kb, spec);
  r.fp_acc = eval_false_premise(model, queries.ood_fp, spec);
  r.kqa_acc = eval_short_qa(model, queries.ood_kqa, spec);
  return r;
}

std::vector<std::string> metric_names() {
  return {"bio_fs", "bio_nc", "bio_ne", "fava_fs", "fava_nc", "fava_ne", "fp_acc", "kqa_acc", "avg"};
}

std::vector<double> metric_values(const EvalReport& r) {
  return {r.bio.fs, r.bio.nc, r.bio.ne, r.fava.fs, r.fava.nc, r.fava.ne, r.fp_acc, r.kqa_acc,
          r.avg()};
}

}  // namespace faktlab::harness
